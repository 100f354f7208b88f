#ifndef M3NET_MODEL_FEATURES_HPP_
#define M3NET_MODEL_FEATURES_HPP_

#include <optional>

#include "m3net/nn/tensor.hpp"

namespace m3net {

/// Model-ready (normalized) inputs for one subject. Bag rows at or beyond
/// real_instance_count are zero padding.
template <typename Scalar>
struct SubjectFeatures {
    std::optional<nn::Matrix<Scalar>> image_bag;  // [bag rows x feature width]
    int real_instance_count = 0;
    std::optional<nn::Vector<Scalar>> biomarkers;

    bool has_image() const { return image_bag.has_value(); }
    bool has_bio() const { return biomarkers.has_value(); }
    bool complete() const { return has_image() && has_bio(); }
};

template <typename Scalar>
struct LabeledSubject {
    SubjectFeatures<Scalar> features;
    int label = 0;
};

} // namespace m3net

#endif // M3NET_MODEL_FEATURES_HPP_
