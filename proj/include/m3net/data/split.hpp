#ifndef M3NET_DATA_SPLIT_HPP_
#define M3NET_DATA_SPLIT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "m3net/data/cohort.hpp"

namespace m3net::data {

/// Assignment of every cohort subject (by position) to one of k folds.
struct FoldSplit {
    int k = 5;
    std::vector<int> fold_of;                 // indexed like the cohort
    std::map<std::string, int> assignments;   // id -> fold

    std::vector<std::size_t> fold(int f) const;
    std::vector<std::size_t> all_except(int f) const;
    std::vector<std::size_t> sizes() const;
};

/// Seeded shuffle then round-robin assignment, so fold sizes differ by at
/// most one. With `stratified`, each label is shuffled separately and the
/// round-robin runs over positives then negatives.
FoldSplit kfold_split(const Cohort& cohort, int k, std::uint64_t seed, bool stratified = false);

struct TrainValSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Seeded 3:1 split; |train| = round(0.75 n) with halves rounded up.
TrainValSplit split_train_val(const std::vector<std::size_t>& indices, std::uint64_t seed);

/// Fold file: JSON object id -> fold index.
void save_folds(const std::filesystem::path& path, const FoldSplit& split);
std::map<std::string, int> load_folds(const std::filesystem::path& path);

} // namespace m3net::data

#endif // M3NET_DATA_SPLIT_HPP_
