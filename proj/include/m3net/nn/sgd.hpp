#ifndef M3NET_NN_SGD_HPP_
#define M3NET_NN_SGD_HPP_

#include <span>
#include <vector>

#include "m3net/errors.hpp"
#include "m3net/nn/tensor.hpp"

namespace m3net::nn {

struct SgdOptions {
    double momentum = 0.0;
    double weight_decay = 0.0;
};

/**
 * Plain SGD with optional heavy-ball momentum and L2 weight decay:
 *   g' = grad + weight_decay * p
 *   v  = momentum * v + g'
 *   p  = p - lr * v
 * Gradients are zeroed after every step. With the defaults this is exactly
 * p <- p - lr * grad, so parameters with zero gradient never move.
 */
template <typename Scalar>
class Sgd {
public:
    Sgd(std::vector<ParamTensor<Scalar>*> params, SgdOptions options = {})
        : params_(std::move(params)), options_(options) {
        if (options_.momentum < 0.0 || options_.weight_decay < 0.0)
            throw ConfigError("sgd: momentum and weight decay must be non-negative");
        if (options_.momentum > 0.0) {
            velocity_.reserve(params_.size());
            for (const auto* p : params_) velocity_.push_back(Matrix<Scalar>::Zero(p->rows(), p->cols()));
        }
    }

    void step(Scalar learning_rate) {
        for (std::size_t i = 0; i < params_.size(); ++i) {
            ParamTensor<Scalar>& p = *params_[i];
            if (options_.weight_decay > 0.0)
                p.grad += static_cast<Scalar>(options_.weight_decay) * p.value;
            if (options_.momentum > 0.0) {
                velocity_[i] = static_cast<Scalar>(options_.momentum) * velocity_[i] + p.grad;
                p.value -= learning_rate * velocity_[i];
            } else {
                p.value -= learning_rate * p.grad;
            }
            p.zero_grad();
        }
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

private:
    std::vector<ParamTensor<Scalar>*> params_;
    SgdOptions options_;
    std::vector<Matrix<Scalar>> velocity_;
};

/// Stateless form: p <- p - lr * grad, then grads zeroed.
template <typename Scalar>
void sgd_step(std::span<ParamTensor<Scalar>* const> params, Scalar learning_rate) {
    for (auto* p : params) {
        p->value -= learning_rate * p->grad;
        p->zero_grad();
    }
}

} // namespace m3net::nn

#endif // M3NET_NN_SGD_HPP_
