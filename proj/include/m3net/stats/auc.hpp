#ifndef M3NET_STATS_AUC_HPP_
#define M3NET_STATS_AUC_HPP_

#include <span>
#include <string>
#include <vector>

namespace m3net::stats {

/// Aligned (id, label, score) triples for one model on one subject set.
struct ScoreSet {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<double> scores;

    std::size_t size() const { return labels.size(); }
    /// Throws DataError on misaligned arrays or labels outside {0, 1}.
    void validate() const;
    bool has_both_classes() const;
};

/**
 * Mann-Whitney AUC: fraction of (positive, negative) pairs where the
 * positive scores higher, ties counting one half. Computed from mid-ranks in
 * O(n log n); the result is bit-identical to explicit pair counting.
 * Throws NumericError when only one class is present.
 */
double auc(std::span<const double> scores, std::span<const int> labels);
double auc(const ScoreSet& s);

} // namespace m3net::stats

#endif // M3NET_STATS_AUC_HPP_
