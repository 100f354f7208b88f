#ifndef M3NET_MODEL_GRADIENT_AUDIT_HPP_
#define M3NET_MODEL_GRADIENT_AUDIT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "m3net/model/config.hpp"

namespace m3net {

enum class Situation { ImageOnly, BioOnly, Complete };

std::string to_string(Situation s);

struct GradAuditOptions {
    std::vector<ModelConfig> models;  // empty: M3Net1 plus M3Net2 with Dim 1, 5, 20
    double h = 1e-5;
    double tolerance = 1e-4;
    int batch_size = 3;
    std::uint64_t seed = 2024;
    /// Negative control: scale every analytic gradient by 1.01 before comparing.
    bool corrupt_gradient = false;
};

struct GradAuditRow {
    std::string model;
    Situation situation;
    double max_relative_error;
    std::string worst_parameter;
    std::size_t entries_checked;
    bool passed;
    double max_entry_relative_error;  // diagnostic only
};

/// Central-difference check of the full masked loss for every model and
/// availability situation, on random parameters and random inputs.
std::vector<GradAuditRow> run_gradient_audit(const GradAuditOptions& options = {});

} // namespace m3net

#endif // M3NET_MODEL_GRADIENT_AUDIT_HPP_
