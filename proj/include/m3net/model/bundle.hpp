#ifndef M3NET_MODEL_BUNDLE_HPP_
#define M3NET_MODEL_BUNDLE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "m3net/data/cohort.hpp"
#include "m3net/data/normalization.hpp"
#include "m3net/model/network.hpp"

namespace m3net {

/// A trained model ready for prediction on raw (unnormalized) records.
struct ModelBundle {
    M3NetParams<double> params;
    data::NormalizationStats normalization;
    std::uint64_t seed = 0;
    nlohmann::json metadata = nlohmann::json::object();

    ForwardOutput<double> forward(const data::SubjectRecord& r) const {
        return m3net_forward(data::to_features(r, normalization), params);
    }
    RoutedRisk<double> predict(const data::SubjectRecord& r) const {
        return predict_routed(data::to_features(r, normalization), params);
    }
};

inline constexpr int kModelFormatVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const nlohmann::json& j);

/// Versioned document: {"format": "m3net-model", "version": 1, "config",
/// "parameters": {name: {"shape": [r, c], "values": [column-major]}},
/// "normalization", "seed", "metadata"}. Doubles are written with
/// round-trip precision, so a reload predicts bit-identically.
nlohmann::json model_to_json(const ModelBundle& m);
ModelBundle model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ModelBundle& m);
ModelBundle load_model(const std::filesystem::path& path);

} // namespace m3net

#endif // M3NET_MODEL_BUNDLE_HPP_
