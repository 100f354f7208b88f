#ifndef M3NET_TESTS_HELPERS_HPP_
#define M3NET_TESTS_HELPERS_HPP_

#include <random>
#include <vector>

#include "m3net/data/cohort.hpp"
#include "m3net/model/network.hpp"
#include "oracles.hpp"

namespace testing_helpers {

using m3net::LabeledSubject;
using m3net::M3NetParams;
using m3net::ModelConfig;
using m3net::nn::Matrix;
using m3net::nn::Vector;

/// Initialized parameters with small random biases.
inline M3NetParams<double> random_params(const ModelConfig& cfg, std::uint64_t seed) {
    M3NetParams<double> p(cfg);
    p.initialize(seed);
    std::mt19937_64 rng(seed ^ 0x5bd1e995u);
    std::normal_distribution<double> g(0.0, 0.1);
    for (auto* layer : p.layers())
        for (Eigen::Index i = 0; i < layer->bias.size(); ++i) layer->bias.value(i) = g(rng);
    return p;
}

inline Matrix<double> random_bag(const ModelConfig& cfg, int real, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix<double> bag = Matrix<double>::Zero(cfg.bag_capacity, cfg.image_feature_width);
    for (int k = 0; k < real; ++k)
        for (int c = 0; c < cfg.image_feature_width; ++c) bag(k, c) = g(rng);
    return bag;
}

inline Vector<double> random_bio(const ModelConfig& cfg, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector<double> b(cfg.biomarker_width);
    for (int c = 0; c < cfg.biomarker_width; ++c) b(c) = g(rng);
    return b;
}

inline LabeledSubject<double> random_subject(const ModelConfig& cfg, bool image, bool bio, int label,
                                             std::mt19937_64& rng) {
    LabeledSubject<double> s;
    s.label = label;
    if (image) {
        const int real = std::uniform_int_distribution<int>(1, cfg.bag_capacity)(rng);
        s.features.image_bag = random_bag(cfg, real, rng);
        s.features.real_instance_count = real;
    }
    if (bio) s.features.biomarkers = random_bio(cfg, rng);
    return s;
}

inline std::vector<oracle::Vec> rows_of(const Matrix<double>& m) {
    std::vector<oracle::Vec> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)].push_back(m(r, c));
    return out;
}

inline oracle::Vec to_vec(const Vector<double>& v) { return {v.data(), v.data() + v.size()}; }

/// Raw cohort record with unnormalized values.
inline m3net::data::SubjectRecord random_record(const std::string& id, bool image, bool bio, std::mt19937_64& rng,
                                                const m3net::data::CohortSchema& schema = {}) {
    std::normal_distribution<double> g(0.0, 1.0);
    m3net::data::SubjectRecord r;
    r.id = id;
    r.label = static_cast<int>(rng() % 2);
    if (bio) {
        Eigen::VectorXd b(schema.biomarker_width);
        for (Eigen::Index c = 0; c < b.size(); ++c) b(c) = 3.0 * g(rng) + static_cast<double>(c);
        r.biomarkers = b;
    }
    if (image) {
        r.num_nodules = std::uniform_int_distribution<int>(1, schema.bag_capacity)(rng);
        Eigen::MatrixXd bag = Eigen::MatrixXd::Zero(schema.bag_capacity, schema.image_feature_width);
        for (int k = 0; k < r.num_nodules; ++k)
            for (int c = 0; c < schema.image_feature_width; ++c) bag(k, c) = 2.0 * g(rng) - 1.0;
        r.image_bag = bag;
    }
    return r;
}

} // namespace testing_helpers

#endif // M3NET_TESTS_HELPERS_HPP_
