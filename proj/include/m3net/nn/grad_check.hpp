#ifndef M3NET_NN_GRAD_CHECK_HPP_
#define M3NET_NN_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

#include "m3net/errors.hpp"
#include "m3net/nn/tensor.hpp"

namespace m3net::nn {

struct GradCheckResult {
    /// max over parameter tensors of ||ga - gfd|| / max(||ga||, ||gfd||, 1e-8), Euclidean norms
    double max_relative_error = 0.0;
    std::size_t worst_param = 0;  // index into the checked parameter list
    /// Per-entry diagnostic: worst |ga - gfd| / max(|ga|, |gfd|, 1e-8) over all entries.
    /// Roundoff (about eps * |loss| / h) dominates it wherever a true gradient entry is tiny.
    double max_entry_relative_error = 0.0;
    std::size_t worst_entry_param = 0;
    Eigen::Index worst_entry = 0;  // linear (column-major) index within that parameter
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t entries_checked = 0;
};

/**
 * Compares analytic gradients with central finite differences.
 *
 * `loss(accumulate)` must evaluate the scalar loss at the current parameter
 * values; when `accumulate` is true it must also add dloss/dparam into each
 * parameter's grad. Gradients are zeroed before the analytic pass and left
 * holding the analytic values afterwards. Parameter values are restored
 * exactly.
 */
template <typename Scalar>
GradCheckResult grad_check(const std::function<Scalar(bool accumulate)>& loss,
                           std::span<ParamTensor<Scalar>* const> params, Scalar h = Scalar(1e-5)) {
    if (!(h > Scalar(0))) throw ContractViolation("grad_check: step must be positive");
    for (auto* p : params) p->zero_grad();
    const Scalar base = loss(true);
    if (!std::isfinite(static_cast<double>(base)))
        throw NumericError("grad_check: non-finite loss at the evaluation point");

    auto relative = [](double diff, double a, double b) { return diff / std::max({a, b, 1e-8}); };

    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ParamTensor<Scalar>& p = *params[pi];
        double diff_sq = 0.0, analytic_sq = 0.0, numeric_sq = 0.0;
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            Scalar& v = p.value.data()[k];
            const Scalar saved = v;
            v = saved + h;
            const Scalar up = loss(false);
            v = saved - h;
            const Scalar down = loss(false);
            v = saved;
            if (!std::isfinite(static_cast<double>(up)) || !std::isfinite(static_cast<double>(down)))
                throw NumericError("grad_check: non-finite loss under perturbation of parameter " +
                                   std::to_string(pi));
            const double numeric = static_cast<double>((up - down) / (Scalar(2) * h));
            const double analytic = static_cast<double>(p.grad.data()[k]);
            diff_sq += (analytic - numeric) * (analytic - numeric);
            analytic_sq += analytic * analytic;
            numeric_sq += numeric * numeric;
            const double rel = relative(std::abs(analytic - numeric), std::abs(analytic), std::abs(numeric));
            ++result.entries_checked;
            if (rel > result.max_entry_relative_error) {
                result.max_entry_relative_error = rel;
                result.worst_entry_param = pi;
                result.worst_entry = k;
                result.analytic_at_worst = analytic;
                result.numeric_at_worst = numeric;
            }
        }
        const double rel = relative(std::sqrt(diff_sq), std::sqrt(analytic_sq), std::sqrt(numeric_sq));
        if (rel > result.max_relative_error) {
            result.max_relative_error = rel;
            result.worst_param = pi;
        }
    }
    return result;
}

} // namespace m3net::nn

#endif // M3NET_NN_GRAD_CHECK_HPP_
