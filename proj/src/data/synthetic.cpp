#include "m3net/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "m3net/errors.hpp"
#include "m3net/seed.hpp"

namespace m3net::data {

void SynthConfig::validate() const {
    if (n < min_folds) throw ConfigError("synth: n must be >= " + std::to_string(min_folds));
    for (double f : {frac_both, frac_image_only, frac_bio_only})
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("synth: stratum fractions must lie in [0, 1]");
    if (std::abs(frac_both + frac_image_only + frac_bio_only - 1.0) > 1e-12)
        throw ConfigError("synth: stratum fractions must sum to 1");
    if (bio_informative < 1 || bio_informative >= schema.biomarker_width)
        throw ConfigError("synth: bio_informative must be in [1, biomarker_width)");
    if (image_key_channels < 1 || image_key_channels > schema.image_feature_width)
        throw ConfigError("synth: image_key_channels must be in [1, image_feature_width]");
    if (!(key_instance_rate >= 0.0 && key_instance_rate <= 1.0))
        throw ConfigError("synth: key_instance_rate must lie in [0, 1]");
    if (!(mayo_mix >= 0.0 && mayo_mix <= 1.0)) throw ConfigError("synth: mayo_mix must lie in [0, 1]");
    if (blood_index == mayo_index || blood_index < 0 || mayo_index < 0 ||
        blood_index >= schema.biomarker_width || mayo_index >= schema.biomarker_width)
        throw ConfigError("synth: blood_index/mayo_index invalid");
    if (!(shared_signal_fraction >= 0.0 && shared_signal_fraction <= 1.0))
        throw ConfigError("synth: shared_signal_fraction must lie in [0, 1]");
    if (complete_label_bias < 0.0) throw ConfigError("synth: complete_label_bias must be >= 0");
}

StratumCounts stratum_counts(const SynthConfig& config) {
    config.validate();
    // The small slack absorbs representation error in fractions such as 647/1232.
    auto quota = [&](double f) { return static_cast<int>(std::floor(config.n * f + 1e-9)); };
    StratumCounts c;
    c.image_only = quota(config.frac_image_only);
    c.bio_only = quota(config.frac_bio_only);
    c.both = config.n - c.image_only - c.bio_only;
    return c;
}

Cohort generate_synthetic_cohort(const SynthConfig& config) {
    const StratumCounts counts = stratum_counts(config);
    const CohortSchema& schema = config.schema;
    const int n = config.n;

    // Separate streams so changing one aspect (e.g. availability) leaves the others intact.
    std::mt19937_64 label_rng(derive_seed(config.seed, 1));
    std::mt19937_64 bio_rng(derive_seed(config.seed, 2));
    std::mt19937_64 img_rng(derive_seed(config.seed, 3));
    std::mt19937_64 avail_rng(derive_seed(config.seed, 4));
    std::mt19937_64 pheno_rng(derive_seed(config.seed, 5));

    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& y : labels) y = coin(label_rng) ? 1 : 0;

    // Informative biomarker channels: blood first, then the lowest other
    // indices, skipping the mayo channel.
    std::vector<int> informative{config.blood_index};
    for (int c = 0; static_cast<int>(informative.size()) < config.bio_informative; ++c)
        if (c != config.blood_index && c != config.mayo_index) informative.push_back(c);

    Cohort cohort(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        SubjectRecord& r = cohort[static_cast<std::size_t>(i)];
        char buf[32];
        std::snprintf(buf, sizeof buf, "%05d", i);
        r.id = config.id_prefix + buf;
        r.label = labels[static_cast<std::size_t>(i)];
        r.site = config.site;
        // Which modalities carry this positive's signal; drawn for every subject to keep the stream aligned.
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(pheno_rng);
        const double single = (1.0 - config.shared_signal_fraction) / 2.0;
        const bool image_expresses = r.label == 1 && u < config.shared_signal_fraction + single;
        const bool bio_expresses =
            r.label == 1 && (u < config.shared_signal_fraction || u >= config.shared_signal_fraction + single);
        const double sign = bio_expresses ? 0.5 : -0.5;

        // Standardized biomarker draws, then a fixed per-channel affine scale.
        Eigen::VectorXd z(schema.biomarker_width);
        for (Eigen::Index c = 0; c < z.size(); ++c) z(c) = gauss(bio_rng);
        double informative_mean = 0.0;
        for (int c : informative) {
            z(c) += sign * config.bio_signal;
            informative_mean += z(c);
        }
        informative_mean /= static_cast<double>(informative.size());
        z(config.mayo_index) = config.mayo_mix * informative_mean +
                               std::sqrt(1.0 - config.mayo_mix * config.mayo_mix) * z(config.mayo_index);
        Eigen::VectorXd bio(schema.biomarker_width);
        for (Eigen::Index c = 0; c < z.size(); ++c)
            bio(c) = static_cast<double>(c) + (1.0 + 0.25 * static_cast<double>(c)) * z(c);
        r.biomarkers = std::move(bio);

        std::uniform_int_distribution<int> count_dist(1, schema.bag_capacity);
        const int count = count_dist(img_rng);
        Eigen::MatrixXd bag = Eigen::MatrixXd::Zero(schema.bag_capacity, schema.image_feature_width);
        for (int k = 0; k < count; ++k)
            for (Eigen::Index c = 0; c < bag.cols(); ++c) bag(k, c) = gauss(img_rng);
        if (image_expresses) {
            std::binomial_distribution<int> extra(count - 1, config.key_instance_rate);
            const int keys = 1 + extra(img_rng);
            std::vector<int> rows(static_cast<std::size_t>(count));
            std::iota(rows.begin(), rows.end(), 0);
            std::shuffle(rows.begin(), rows.end(), img_rng);
            for (int q = 0; q < keys; ++q)
                bag.row(rows[static_cast<std::size_t>(q)]).head(config.image_key_channels).array() +=
                    config.image_signal;
        }
        r.image_bag = std::move(bag);
        r.num_nodules = count;
    }

    // Availability: stratum quota over a seeded ordering (optionally tilted by label).
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> key(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        key[static_cast<std::size_t>(i)] = unit(avail_rng) + config.complete_label_bias * labels[static_cast<std::size_t>(i)];
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return key[static_cast<std::size_t>(a)] > key[static_cast<std::size_t>(b)];
    });
    for (int pos = 0; pos < n; ++pos) {
        SubjectRecord& r = cohort[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])];
        if (pos < counts.both) continue;
        if (pos < counts.both + counts.image_only) {
            r.biomarkers.reset();
        } else {
            r.image_bag.reset();
            r.num_nodules = 0;
        }
    }
    return cohort;
}

} // namespace m3net::data
