#ifndef M3NET_NN_LOSS_HPP_
#define M3NET_NN_LOSS_HPP_

#include <cmath>

#include "m3net/errors.hpp"
#include "m3net/nn/tensor.hpp"

namespace m3net::nn {

/// Max-shifted softmax. Uses scalar std::exp: Eigen's packet exp clamps very
/// negative arguments to a denormal instead of 0, which would leak weight
/// onto masked entries.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
    using Scalar = typename Derived::Scalar;
    const Scalar shift = logits.maxCoeff();
    Vector<Scalar> e = (logits.array() - shift).unaryExpr([](Scalar v) { return std::exp(v); }).matrix();
    return e / e.sum();
}

template <typename Scalar>
struct CrossEntropy {
    Scalar loss;
    Vector<Scalar> probs;        // softmax(logits)
    Vector<Scalar> grad_logits;  // probs - onehot(label)
};

/// Two-class cross entropy on raw logits: -log softmax(logits)[label].
template <typename Scalar>
CrossEntropy<Scalar> softmax_cross_entropy(const Vector<Scalar>& logits, int label) {
    if (logits.size() != 2)
        throw ContractViolation("softmax_cross_entropy expects two logits");
    if (label != 0 && label != 1)
        throw ContractViolation("softmax_cross_entropy: label must be 0 or 1");
    if (!logits.allFinite())
        throw NumericError("softmax_cross_entropy: non-finite logits");
    const Scalar shift = logits.maxCoeff();
    const Vector<Scalar> shifted = (logits.array() - shift).matrix();
    const Scalar log_norm = std::log(shifted.array().exp().sum());
    CrossEntropy<Scalar> out;
    out.loss = log_norm - shifted(label);
    out.probs = (shifted.array() - log_norm).exp().matrix();
    out.grad_logits = out.probs;
    out.grad_logits(label) -= Scalar(1);
    return out;
}

} // namespace m3net::nn

#endif // M3NET_NN_LOSS_HPP_
