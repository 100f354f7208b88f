#include "m3net/stats/auc.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "m3net/errors.hpp"

namespace m3net::stats {

void ScoreSet::validate() const {
    if (labels.size() != scores.size() || (!ids.empty() && ids.size() != labels.size()))
        throw DataError("score set: ids, labels and scores must have equal length");
    for (int y : labels)
        if (y != 0 && y != 1) throw DataError("score set: labels must be 0 or 1");
}

bool ScoreSet::has_both_classes() const {
    const bool pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
    return pos && neg;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the positive rank sum with mid-ranks, in exact integer arithmetic.
    std::int64_t twice_rank_sum = 0;
    std::int64_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        std::int64_t pos_in_group = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            pos_in_group += labels[order[j]] == 1;
            ++j;
        }
        // ranks i+1 .. j, mid-rank (i+1+j)/2
        twice_rank_sum += pos_in_group * static_cast<std::int64_t>(i + 1 + j);
        n_pos += pos_in_group;
        i = j;
    }
    const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw NumericError("AUC undefined: scores contain a single class");
    // 2U = 2R - n_pos (n_pos + 1); AUC = 2U / (2 n_pos n_neg)
    const std::int64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    return static_cast<double>(twice_u) / static_cast<double>(2 * n_pos * n_neg);
}

double auc(const ScoreSet& s) {
    s.validate();
    return auc(std::span<const double>(s.scores), std::span<const int>(s.labels));
}

} // namespace m3net::stats
