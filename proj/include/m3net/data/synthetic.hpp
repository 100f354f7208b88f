#ifndef M3NET_DATA_SYNTHETIC_HPP_
#define M3NET_DATA_SYNTHETIC_HPP_

#include <cstdint>
#include <string>

#include "m3net/data/cohort.hpp"

namespace m3net::data {

/**
 * Synthetic cohort with three availability strata (both / image only /
 * biomarkers only) and complementary label signal in the two modalities.
 *
 * Biomarkers: per-channel affine-scaled Gaussians; `bio_informative`
 * channels (blood first, never mayo) sit at +bio_signal/2 for positives
 * expressing biomarker signal and at -bio_signal/2 otherwise; the mayo
 * channel is a noisy mix of those channels.
 * Image: 1..bag_capacity instances of Gaussian noise; positives expressing
 * image signal carry at least one key instance shifted by image_signal along
 * the first `image_key_channels` feature channels, everyone else carries none.
 * A `shared_signal_fraction` of positives expresses both; the others express
 * exactly one, so each modality alone misses part of the positives.
 * Availability is assigned by exact quota after a seeded shuffle.
 */
struct SynthConfig {
    int n = 1232;
    double frac_both = 383.0 / 1232.0;
    double frac_image_only = 647.0 / 1232.0;
    double frac_bio_only = 202.0 / 1232.0;
    double bio_signal = 2.0;
    int bio_informative = 3;
    double mayo_mix = 0.6;
    double image_signal = 2.0;
    int image_key_channels = 8;
    double key_instance_rate = 0.25;
    /// Fraction of positives whose signal shows in both modalities; the rest
    /// show it in exactly one, split evenly between image and biomarkers.
    double shared_signal_fraction = 0.2;
    /// 0 gives missing-completely-at-random availability; > 0 makes
    /// positives more likely to land in the complete stratum.
    double complete_label_bias = 0.0;
    int blood_index = 0;
    int mayo_index = 9;
    int min_folds = 5;
    std::uint64_t seed = 20200101;
    std::string site = "synthetic";
    std::string id_prefix = "S";
    CohortSchema schema;

    void validate() const;
};

struct StratumCounts {
    int both = 0;
    int image_only = 0;
    int bio_only = 0;
};

/// floor(n * fraction) for each missing-modality stratum, remainder to "both".
StratumCounts stratum_counts(const SynthConfig& config);

Cohort generate_synthetic_cohort(const SynthConfig& config);

} // namespace m3net::data

#endif // M3NET_DATA_SYNTHETIC_HPP_
