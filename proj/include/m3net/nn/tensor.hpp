#ifndef M3NET_NN_TENSOR_HPP_
#define M3NET_NN_TENSOR_HPP_

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace m3net::nn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Learnable array with an accumulated gradient of identical shape.
/// Vectors are stored as single-column matrices.
template <typename Scalar>
struct ParamTensor {
    Matrix<Scalar> value;
    Matrix<Scalar> grad;

    ParamTensor() = default;
    ParamTensor(Eigen::Index rows, Eigen::Index cols)
        : value(Matrix<Scalar>::Zero(rows, cols)), grad(Matrix<Scalar>::Zero(rows, cols)) {}

    Eigen::Index rows() const { return value.rows(); }
    Eigen::Index cols() const { return value.cols(); }
    Eigen::Index size() const { return value.size(); }

    void zero_grad() { grad.setZero(); }

    bool all_finite() const { return value.allFinite() && grad.allFinite(); }
};

/// Xavier/Glorot uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
void xavier_uniform(ParamTensor<Scalar>& p, Eigen::Index fan_in, Eigen::Index fan_out,
                    std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index j = 0; j < p.value.cols(); ++j)
        for (Eigen::Index i = 0; i < p.value.rows(); ++i)
            p.value(i, j) = static_cast<Scalar>(dist(rng));
    p.zero_grad();
}

} // namespace m3net::nn

#endif // M3NET_NN_TENSOR_HPP_
