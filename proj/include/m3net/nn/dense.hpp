#ifndef M3NET_NN_DENSE_HPP_
#define M3NET_NN_DENSE_HPP_

#include <random>
#include <string>

#include "m3net/errors.hpp"
#include "m3net/nn/tensor.hpp"

namespace m3net::nn {

enum class Activation { Identity, Tanh };

/// Values captured by a forward pass and consumed by the matching backward pass.
template <typename Scalar>
struct DenseTrace {
    Vector<Scalar> input;
    Vector<Scalar> output;

    bool empty() const { return input.size() == 0; }
};

/**
 * Fully connected layer y = act(W x + b) with W stored [out x in].
 *
 * forward() is const and records its inputs in an optional trace; backward()
 * accumulates into the parameter gradients so several traces (one per
 * subject) can be back-propagated into the same layer.
 */
template <typename Scalar>
class DenseLayer {
public:
    ParamTensor<Scalar> weight;
    ParamTensor<Scalar> bias;
    Activation activation = Activation::Identity;

    DenseLayer() = default;
    DenseLayer(Eigen::Index in, Eigen::Index out, Activation act)
        : weight(out, in), bias(out, 1), activation(act) {
        if (in < 1 || out < 1)
            throw ConfigError("DenseLayer: dimensions must be positive");
    }

    Eigen::Index in_dim() const { return weight.cols(); }
    Eigen::Index out_dim() const { return weight.rows(); }

    void init(std::mt19937_64& rng) {
        xavier_uniform(weight, in_dim(), out_dim(), rng);
        bias.value.setZero();
        bias.zero_grad();
    }

    template <typename Derived>
    Vector<Scalar> forward(const Eigen::MatrixBase<Derived>& x,
                           DenseTrace<Scalar>* trace = nullptr) const {
        if (x.size() != in_dim())
            throw ContractViolation("dense_forward: input length " + std::to_string(x.size()) +
                                    " != layer input dimension " + std::to_string(in_dim()));
        Vector<Scalar> y = weight.value * x + bias.value.col(0);
        if (activation == Activation::Tanh) y = y.array().tanh().matrix();
        if (trace) {
            trace->input = x;
            trace->output = y;
        }
        return y;
    }

    /// Accumulates dL/dW, dL/db and returns dL/dx.
    Vector<Scalar> backward(const DenseTrace<Scalar>& trace, const Vector<Scalar>& dy) {
        if (trace.empty())
            throw ContractViolation("dense backward called without a recorded forward pass");
        if (dy.size() != out_dim())
            throw ContractViolation("dense backward: output gradient has wrong length");
        Vector<Scalar> dz = dy;
        if (activation == Activation::Tanh)
            dz = (dy.array() * (Scalar(1) - trace.output.array().square())).matrix();
        weight.grad.noalias() += dz * trace.input.transpose();
        bias.grad.col(0) += dz;
        return weight.value.transpose() * dz;
    }
};

} // namespace m3net::nn

#endif // M3NET_NN_DENSE_HPP_
