#ifndef M3NET_STATS_BOOTSTRAP_HPP_
#define M3NET_STATS_BOOTSTRAP_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "m3net/stats/auc.hpp"

namespace m3net::stats {

struct BootstrapOptions {
    int n_resamples = 2000;
    std::uint64_t seed = 42;
    int jobs = 1;
    double confidence = 0.95;
};

struct BootstrapResult {
    double point = 0.0;
    int n_resamples = 0;
    std::uint64_t seed = 0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<double> p_two_tailed;
};

/// Percentile bootstrap CI of the AUC. Resample i draws subjects with
/// replacement from a generator seeded by (seed, i); draws lacking either
/// class are redrawn. Percentiles use linear interpolation between order
/// statistics.
BootstrapResult bootstrap_ci(const ScoreSet& scores, const BootstrapOptions& options = {});

/**
 * Paired two-tailed bootstrap test of AUC(a) vs AUC(b) on the same subjects.
 * Each resample uses the same subject indices for both models;
 * p = 2 min(#{d <= 0}, #{d >= 0}) / n_resamples with d = AUC_a - AUC_b,
 * clipped to [1/n_resamples, 1].
 */
double bootstrap_pvalue(const ScoreSet& a, const ScoreSet& b, const BootstrapOptions& options = {});

/// "0.917 (0.857-0.966)"
std::string format_auc_ci(const BootstrapResult& r, int digits = 3);

nlohmann::json to_json(const BootstrapResult& r);

/// Linear-interpolation percentile of sorted data, q in [0, 100].
double percentile_sorted(const std::vector<double>& sorted, double q);

} // namespace m3net::stats

#endif // M3NET_STATS_BOOTSTRAP_HPP_
