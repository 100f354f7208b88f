#ifndef M3NET_MODEL_CONFIG_HPP_
#define M3NET_MODEL_CONFIG_HPP_

#include <string>

#include "m3net/errors.hpp"

namespace m3net {

/// M3Net1 feeds the combined path the two sub-path probabilities;
/// M3Net2 feeds it the two dim-wide sub-path features.
enum class Variant { M3Net1, M3Net2 };

inline std::string to_string(Variant v) { return v == Variant::M3Net1 ? "m3net1" : "m3net2"; }

inline Variant parse_variant(const std::string& s) {
    if (s == "m3net1" || s == "M3Net1") return Variant::M3Net1;
    if (s == "m3net2" || s == "M3Net2") return Variant::M3Net2;
    throw ConfigError("unknown variant '" + s + "' (expected m3net1 or m3net2)");
}

struct ModelConfig {
    Variant variant = Variant::M3Net1;
    int dim = 5;
    int image_feature_width = 128;
    int bag_capacity = 5;
    int biomarker_width = 10;
    int attention_hidden = 64;
    int bio_hidden = 32;
    int combined_hidden = 16;
    int blood_index = 0;
    int mayo_index = 9;

    /// Width of the combined-path input vector.
    int combined_input_width() const { return variant == Variant::M3Net1 ? 4 : 2 * dim + 2; }

    /// Report tag, e.g. "M3Net1" or "M3Net2 (Dim=5)".
    std::string tag() const {
        return variant == Variant::M3Net1 ? "M3Net1" : "M3Net2 (Dim=" + std::to_string(dim) + ")";
    }

    void validate() const {
        if (dim < 1) throw ConfigError("model: dim must be >= 1");
        if (image_feature_width < 1 || bag_capacity < 1 || biomarker_width < 1 ||
            attention_hidden < 1 || bio_hidden < 1 || combined_hidden < 1)
            throw ConfigError("model: all widths must be >= 1");
        if (blood_index == mayo_index) throw ConfigError("model: blood_index must differ from mayo_index");
        if (blood_index < 0 || blood_index >= biomarker_width || mayo_index < 0 ||
            mayo_index >= biomarker_width)
            throw ConfigError("model: blood_index and mayo_index must lie inside the biomarker vector");
    }
};

} // namespace m3net

#endif // M3NET_MODEL_CONFIG_HPP_
