#include "m3net/stats/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "m3net/errors.hpp"
#include "m3net/parallel.hpp"
#include "m3net/seed.hpp"

namespace m3net::stats {

namespace {

/// Subject indices for resample `index`, redrawn until both classes appear.
std::vector<std::size_t> draw_resample(const std::vector<int>& labels, std::uint64_t seed, std::size_t index) {
    const std::size_t n = labels.size();
    std::mt19937_64 rng(derive_seed(seed, index));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (;;) {
        bool pos = false, neg = false;
        for (auto& i : idx) {
            i = pick(rng);
            (labels[i] == 1 ? pos : neg) = true;
        }
        if (pos && neg) return idx;
    }
}

double resampled_auc(const ScoreSet& s, const std::vector<std::size_t>& idx, std::vector<double>& sc,
                     std::vector<int>& lb) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
        sc[k] = s.scores[idx[k]];
        lb[k] = s.labels[idx[k]];
    }
    return auc(std::span<const double>(sc), std::span<const int>(lb));
}

void check_options(const BootstrapOptions& o) {
    if (o.n_resamples < 1) throw ConfigError("bootstrap: n_resamples must be >= 1");
    if (!(o.confidence > 0.0 && o.confidence < 1.0)) throw ConfigError("bootstrap: confidence must lie in (0, 1)");
}

} // namespace

double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ContractViolation("percentile of empty sample");
    const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

BootstrapResult bootstrap_ci(const ScoreSet& scores, const BootstrapOptions& options) {
    check_options(options);
    scores.validate();
    BootstrapResult r;
    r.point = auc(scores);
    r.n_resamples = options.n_resamples;
    r.seed = options.seed;

    std::vector<double> aucs(static_cast<std::size_t>(options.n_resamples));
    const int jobs = std::max(options.jobs, 1);
    // One scratch buffer per block keeps the work allocation-free in the loop.
    parallel_for(static_cast<std::size_t>(jobs), jobs, [&](std::size_t w) {
        const std::size_t n = aucs.size();
        std::vector<double> sc(scores.size());
        std::vector<int> lb(scores.size());
        for (std::size_t i = n * w / jobs; i < n * (w + 1) / jobs; ++i)
            aucs[i] = resampled_auc(scores, draw_resample(scores.labels, options.seed, i), sc, lb);
    });
    std::sort(aucs.begin(), aucs.end());
    const double tail = (1.0 - options.confidence) / 2.0 * 100.0;
    r.ci_low = percentile_sorted(aucs, tail);
    r.ci_high = percentile_sorted(aucs, 100.0 - tail);
    return r;
}

double bootstrap_pvalue(const ScoreSet& a, const ScoreSet& b, const BootstrapOptions& options) {
    check_options(options);
    a.validate();
    b.validate();
    if (a.size() != b.size() || a.labels != b.labels || (!a.ids.empty() && !b.ids.empty() && a.ids != b.ids))
        throw DataError("bootstrap_pvalue: score sets are not aligned on the same subjects");
    if (!a.has_both_classes()) throw NumericError("AUC undefined: scores contain a single class");

    std::vector<double> delta(static_cast<std::size_t>(options.n_resamples));
    const int jobs = std::max(options.jobs, 1);
    parallel_for(static_cast<std::size_t>(jobs), jobs, [&](std::size_t w) {
        const std::size_t n = delta.size();
        std::vector<double> sc(a.size());
        std::vector<int> lb(a.size());
        for (std::size_t i = n * w / jobs; i < n * (w + 1) / jobs; ++i) {
            const auto idx = draw_resample(a.labels, options.seed, i);
            delta[i] = resampled_auc(a, idx, sc, lb) - resampled_auc(b, idx, sc, lb);
        }
    });
    std::size_t le = 0, ge = 0;
    for (double d : delta) {
        le += d <= 0.0;
        ge += d >= 0.0;
    }
    const double n = static_cast<double>(options.n_resamples);
    const double p = 2.0 * static_cast<double>(std::min(le, ge)) / n;
    return std::clamp(p, 1.0 / n, 1.0);
}

std::string format_auc_ci(const BootstrapResult& r, int digits) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.*f (%.*f-%.*f)", digits, r.point, digits, r.ci_low, digits, r.ci_high);
    return buf;
}

nlohmann::json to_json(const BootstrapResult& r) {
    nlohmann::json j{{"auc", r.point},
                     {"ci_low", r.ci_low},
                     {"ci_high", r.ci_high},
                     {"n_resamples", r.n_resamples},
                     {"seed", r.seed},
                     {"formatted", format_auc_ci(r)}};
    if (r.p_two_tailed) j["p_two_tailed"] = *r.p_two_tailed;
    return j;
}

} // namespace m3net::stats
