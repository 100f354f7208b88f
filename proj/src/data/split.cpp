#include "m3net/data/split.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "m3net/errors.hpp"

namespace m3net::data {

std::vector<std::size_t> FoldSplit::fold(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == f) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldSplit::all_except(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != f) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldSplit::sizes() const {
    std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
    for (int f : fold_of) ++out[static_cast<std::size_t>(f)];
    return out;
}

FoldSplit kfold_split(const Cohort& cohort, int k, std::uint64_t seed, bool stratified) {
    if (k < 2) throw ConfigError("kfold_split: k must be >= 2");
    if (cohort.size() < static_cast<std::size_t>(k))
        throw DataError("kfold_split: cohort of " + std::to_string(cohort.size()) + " subjects cannot form " +
                        std::to_string(k) + " folds");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order;
    if (stratified) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < cohort.size(); ++i) (cohort[i].label == 1 ? pos : neg).push_back(i);
        std::shuffle(pos.begin(), pos.end(), rng);
        std::shuffle(neg.begin(), neg.end(), rng);
        order = std::move(pos);
        order.insert(order.end(), neg.begin(), neg.end());
    } else {
        order.resize(cohort.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
    }
    FoldSplit split;
    split.k = k;
    split.fold_of.assign(cohort.size(), -1);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const int f = static_cast<int>(pos % static_cast<std::size_t>(k));
        split.fold_of[order[pos]] = f;
        split.assignments[cohort[order[pos]].id] = f;
    }
    return split;
}

TrainValSplit split_train_val(const std::vector<std::size_t>& indices, std::uint64_t seed) {
    std::vector<std::size_t> order = indices;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = (3 * order.size() + 2) / 4;
    TrainValSplit out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    return out;
}

void save_folds(const std::filesystem::path& path, const FoldSplit& split) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, f] : split.assignments) j[id] = f;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write fold file '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

std::map<std::string, int> load_folds(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fold file '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("fold file '" + path.string() + "': " + e.what());
    }
    if (!j.is_object()) throw DataError("fold file must hold a JSON object id -> fold");
    std::map<std::string, int> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_number_integer() || it.value().get<int>() < 0)
            throw DataError("fold file: fold index for '" + it.key() + "' must be a non-negative integer");
        out[it.key()] = it.value().get<int>();
    }
    return out;
}

} // namespace m3net::data
