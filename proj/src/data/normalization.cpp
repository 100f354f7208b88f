#include "m3net/data/normalization.hpp"

#include "m3net/errors.hpp"

namespace m3net::data {

namespace {

void finish(Eigen::VectorXd& mean, Eigen::VectorXd& std, const Eigen::VectorXd& sum,
            const Eigen::VectorXd& sum_sq_dev, double count) {
    mean = sum / count;
    std = (sum_sq_dev / count).cwiseSqrt();
}

Eigen::VectorXd to_eigen(const nlohmann::json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

nlohmann::json to_array(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

} // namespace

NormalizationStats compute_normalization(const Cohort& train, const CohortSchema& schema, EmptyStratum empty) {
    NormalizationStats s;

    // Two passes (mean, then squared deviations) for accuracy.
    const Eigen::Index bw = schema.biomarker_width;
    Eigen::VectorXd bio_sum = Eigen::VectorXd::Zero(bw);
    double bio_n = 0;
    for (const auto& r : train)
        if (r.biomarkers) {
            bio_sum += *r.biomarkers;
            ++bio_n;
        }
    const Eigen::Index iw = schema.image_feature_width;
    Eigen::VectorXd img_sum = Eigen::VectorXd::Zero(iw);
    double img_n = 0;
    for (const auto& r : train)
        if (r.image_bag) {
            img_sum += r.image_bag->topRows(r.num_nodules).colwise().sum().transpose();
            img_n += r.num_nodules;
        }

    if (bio_n == 0 || img_n == 0) {
        if (empty == EmptyStratum::Reject)
            throw DataError(std::string("compute_normalization: no training subjects with ") +
                            (bio_n == 0 ? "biomarkers" : "images"));
    }

    if (bio_n > 0) {
        const Eigen::VectorXd mean = bio_sum / bio_n;
        Eigen::VectorXd dev = Eigen::VectorXd::Zero(bw);
        for (const auto& r : train)
            if (r.biomarkers) dev += (*r.biomarkers - mean).array().square().matrix();
        finish(s.bio_mean, s.bio_std, bio_sum, dev, bio_n);
    } else {
        s.bio_mean = Eigen::VectorXd::Zero(bw);
        s.bio_std = Eigen::VectorXd::Ones(bw);
    }

    if (img_n > 0) {
        const Eigen::VectorXd mean = img_sum / img_n;
        Eigen::VectorXd dev = Eigen::VectorXd::Zero(iw);
        for (const auto& r : train)
            if (r.image_bag)
                dev += (r.image_bag->topRows(r.num_nodules).rowwise() - mean.transpose())
                           .array()
                           .square()
                           .colwise()
                           .sum()
                           .transpose()
                           .matrix();
        finish(s.image_mean, s.image_std, img_sum, dev, img_n);
    } else {
        s.image_mean = Eigen::VectorXd::Zero(iw);
        s.image_std = Eigen::VectorXd::Ones(iw);
    }
    return s;
}

SubjectFeatures<double> to_features(const SubjectRecord& r, const NormalizationStats& stats) {
    SubjectFeatures<double> f;
    if (r.biomarkers) {
        if (r.biomarkers->size() != stats.bio_mean.size())
            throw DataError("subject '" + r.id + "': biomarker width does not match normalization stats");
        Eigen::VectorXd b(r.biomarkers->size());
        for (Eigen::Index c = 0; c < b.size(); ++c)
            b(c) = normalize_value((*r.biomarkers)(c), stats.bio_mean(c), stats.bio_std(c));
        f.biomarkers = std::move(b);
    }
    if (r.image_bag) {
        if (r.image_bag->cols() != stats.image_mean.size())
            throw DataError("subject '" + r.id + "': image feature width does not match normalization stats");
        Eigen::MatrixXd bag = Eigen::MatrixXd::Zero(r.image_bag->rows(), r.image_bag->cols());
        for (int k = 0; k < r.num_nodules; ++k)
            for (Eigen::Index c = 0; c < bag.cols(); ++c)
                bag(k, c) = normalize_value((*r.image_bag)(k, c), stats.image_mean(c), stats.image_std(c));
        f.image_bag = std::move(bag);
        f.real_instance_count = r.num_nodules;
    }
    return f;
}

LabeledSubject<double> to_labeled(const SubjectRecord& r, const NormalizationStats& stats) {
    return {to_features(r, stats), r.label};
}

nlohmann::json stats_to_json(const NormalizationStats& s) {
    return {{"bio_mean", to_array(s.bio_mean)},
            {"bio_std", to_array(s.bio_std)},
            {"image_mean", to_array(s.image_mean)},
            {"image_std", to_array(s.image_std)}};
}

NormalizationStats stats_from_json(const nlohmann::json& j) {
    NormalizationStats s;
    s.bio_mean = to_eigen(j.at("bio_mean"));
    s.bio_std = to_eigen(j.at("bio_std"));
    s.image_mean = to_eigen(j.at("image_mean"));
    s.image_std = to_eigen(j.at("image_std"));
    if (s.bio_mean.size() != s.bio_std.size() || s.image_mean.size() != s.image_std.size())
        throw DataError("normalization stats: mean/std length mismatch");
    return s;
}

} // namespace m3net::data
