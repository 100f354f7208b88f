// Independent reference implementations used as test oracles. Plain loops
// over std::vector, no shared code with the library beyond reading the raw
// parameter values.
#ifndef M3NET_TESTS_ORACLES_HPP_
#define M3NET_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "m3net/model/network.hpp"

namespace oracle {

using Vec = std::vector<double>;

/// O(n^2) Mann-Whitney: wins 1, ties 1/2, over all positive/negative pairs.
inline double pair_count_auc(const Vec& scores, const std::vector<int>& labels) {
    long long twice_wins = 0, pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) twice_wins += 2;
            else if (scores[i] == scores[j]) twice_wins += 1;
        }
    }
    return static_cast<double>(twice_wins) / static_cast<double>(2 * pairs);
}

inline Vec dense(const m3net::nn::DenseLayer<double>& layer, const Vec& x) {
    const auto& W = layer.weight.value;
    Vec y(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index o = 0; o < W.rows(); ++o) {
        double acc = layer.bias.value(o, 0);
        for (Eigen::Index i = 0; i < W.cols(); ++i) acc += W(o, i) * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(o)] = layer.activation == m3net::nn::Activation::Tanh ? std::tanh(acc) : acc;
    }
    return y;
}

/// Probability of class 1 from two logits.
inline double prob1(const Vec& logits) { return 1.0 / (1.0 + std::exp(logits[0] - logits[1])); }

struct Amil {
    Vec pooled;
    Vec weights;
};

/// Attention over the first `real` rows only; padded rows get weight 0.
inline Amil amil(const std::vector<Vec>& bag, int real, const m3net::M3NetParams<double>& p) {
    const auto& V = p.attention_v.value;
    const auto& w = p.attention_w.value;
    Vec scores(static_cast<std::size_t>(real));
    for (int k = 0; k < real; ++k) {
        double s = 0.0;
        for (Eigen::Index a = 0; a < V.rows(); ++a) {
            double pre = 0.0;
            for (Eigen::Index c = 0; c < V.cols(); ++c) pre += V(a, c) * bag[k][static_cast<std::size_t>(c)];
            s += w(a, 0) * std::tanh(pre);
        }
        scores[static_cast<std::size_t>(k)] = s;
    }
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double total = 0.0;
    for (double& s : scores) total += (s = std::exp(s - mx));
    Amil out;
    out.weights.assign(bag.size(), 0.0);
    out.pooled.assign(bag[0].size(), 0.0);
    for (int k = 0; k < real; ++k) {
        const double a = scores[static_cast<std::size_t>(k)] / total;
        out.weights[static_cast<std::size_t>(k)] = a;
        for (std::size_t c = 0; c < out.pooled.size(); ++c) out.pooled[c] += a * bag[k][c];
    }
    return out;
}

struct Forward {
    double p1 = 0, p2 = 0, pc = 0;
    Vec image_feature, bio_feature;
};

/// Hand-composed forward for a complete subject.
inline Forward forward(const std::vector<Vec>& bag, int real, const Vec& bio, const m3net::M3NetParams<double>& p) {
    Forward f;
    const Amil a = amil(bag, real, p);
    f.image_feature = dense(p.image_proj, a.pooled);
    f.p1 = prob1(dense(p.image_head, f.image_feature));
    f.bio_feature = dense(p.bio_proj, dense(p.bio_layer1, bio));
    f.p2 = prob1(dense(p.bio_head, f.bio_feature));
    Vec c;
    if (p.config.variant == m3net::Variant::M3Net1) {
        c = {f.p1, f.p2};
    } else {
        c = f.image_feature;
        c.insert(c.end(), f.bio_feature.begin(), f.bio_feature.end());
    }
    c.push_back(bio[static_cast<std::size_t>(p.config.blood_index)]);
    c.push_back(bio[static_cast<std::size_t>(p.config.mayo_index)]);
    f.pc = prob1(dense(p.combined_head, dense(p.combined_layer1, c)));
    return f;
}

/// Central difference of a scalar function of one variable.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracle

#endif // M3NET_TESTS_ORACLES_HPP_
