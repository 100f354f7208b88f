#ifndef M3NET_DATA_NORMALIZATION_HPP_
#define M3NET_DATA_NORMALIZATION_HPP_

#include <Eigen/Dense>
#include <json.hpp>

#include "m3net/data/cohort.hpp"
#include "m3net/model/features.hpp"

namespace m3net::data {

/// Per-channel mean and population std. Channels with std 0 map to 0.
struct NormalizationStats {
    Eigen::VectorXd bio_mean;
    Eigen::VectorXd bio_std;
    Eigen::VectorXd image_mean;
    Eigen::VectorXd image_std;

    bool operator==(const NormalizationStats&) const = default;
};

enum class EmptyStratum {
    Reject,    // a modality with no training subjects is an error
    Identity,  // use mean 0 / std 1 for that modality
};

/// Biomarker stats over subjects with biomarkers; image stats over the real
/// (non-padded) instances of subjects with images.
NormalizationStats compute_normalization(const Cohort& train, const CohortSchema& schema = {},
                                         EmptyStratum empty = EmptyStratum::Reject);

inline double normalize_value(double x, double mean, double std) { return std > 0.0 ? (x - mean) / std : 0.0; }

/// Normalized model inputs. Padded bag rows stay exactly zero.
SubjectFeatures<double> to_features(const SubjectRecord& r, const NormalizationStats& stats);

LabeledSubject<double> to_labeled(const SubjectRecord& r, const NormalizationStats& stats);

nlohmann::json stats_to_json(const NormalizationStats& s);
NormalizationStats stats_from_json(const nlohmann::json& j);

} // namespace m3net::data

#endif // M3NET_DATA_NORMALIZATION_HPP_
