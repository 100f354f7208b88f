#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "m3net/errors.hpp"
#include "m3net/nn/dense.hpp"
#include "m3net/nn/grad_check.hpp"
#include "m3net/nn/loss.hpp"
#include "m3net/nn/schedule.hpp"
#include "m3net/nn/sgd.hpp"
#include "oracles.hpp"

using namespace m3net;
using namespace m3net::nn;

namespace {

Vector<double> vec(std::initializer_list<double> v) {
    Vector<double> x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x(i++) = e;
    return x;
}

} // namespace

TEST(Dense, IdentityWeightsPassInputThrough) {
    DenseLayer<double> layer(2, 2, Activation::Identity);
    layer.weight.value.setIdentity();
    EXPECT_EQ(layer.forward(vec({3, -1})), vec({3, -1}));
}

TEST(Dense, ZeroTanhLayerGivesZeros) {
    DenseLayer<double> layer(3, 4, Activation::Tanh);
    EXPECT_TRUE(layer.forward(vec({0.3, -7, 2})).isZero(0));
}

TEST(Dense, AffineArithmetic) {
    DenseLayer<double> layer(2, 2, Activation::Identity);
    layer.weight.value << 1, 2, 0, 1;
    layer.bias.value << 1, 0;
    EXPECT_EQ(layer.forward(vec({1, 1})), vec({4, 1}));
}

TEST(Dense, OutputLengthMatchesOutDim) {
    std::mt19937_64 rng(3);
    for (int in = 1; in < 6; ++in)
        for (int out = 1; out < 6; ++out) {
            DenseLayer<double> layer(in, out, Activation::Tanh);
            layer.init(rng);
            EXPECT_EQ(layer.forward(Vector<double>::Ones(in)).size(), out);
        }
}

TEST(Dense, DimensionMismatchThrows) {
    DenseLayer<double> layer(3, 2, Activation::Identity);
    EXPECT_THROW(layer.forward(vec({1, 2})), ContractViolation);
}

TEST(Dense, BackwardWithoutForwardThrows) {
    DenseLayer<double> layer(2, 2, Activation::Identity);
    DenseTrace<double> empty;
    EXPECT_THROW(layer.backward(empty, vec({1, 1})), ContractViolation);
}

TEST(Dense, LinearGradientIsInput) {
    // loss = w . x with x = 2
    DenseLayer<double> layer(1, 1, Activation::Identity);
    layer.weight.value(0, 0) = 0.7;
    DenseTrace<double> t;
    layer.forward(vec({2.0}), &t);
    layer.backward(t, vec({1.0}));
    EXPECT_EQ(layer.weight.grad(0, 0), 2.0);
    EXPECT_EQ(layer.bias.grad(0, 0), 1.0);
}

TEST(Dense, XavierBoundsAndZeroBias) {
    std::mt19937_64 rng(11);
    DenseLayer<double> layer(10, 32, Activation::Tanh);
    layer.init(rng);
    const double bound = std::sqrt(6.0 / 42.0);
    EXPECT_LE(layer.weight.value.cwiseAbs().maxCoeff(), bound);
    EXPECT_TRUE(layer.bias.value.isZero(0));
}

TEST(Loss, SymmetricLogits) {
    EXPECT_NEAR(softmax_cross_entropy(vec({0, 0}), 1).loss, 0.6931472, 1e-7);
}

TEST(Loss, SaturatedCorrectClass) {
    EXPECT_LT(softmax_cross_entropy(vec({30, -30}), 0).loss, 1e-12);
}

TEST(Loss, DirectEvaluation) {
    const double expected = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(2.0)));
    EXPECT_NEAR(softmax_cross_entropy(vec({1, 2}), 0).loss, expected, 1e-15);
    EXPECT_NEAR(expected, 1.3132617, 1e-7);
}

TEST(Loss, GradientIsProbsMinusOneHot) {
    const auto ce = softmax_cross_entropy(vec({0.3, -1.2}), 1);
    EXPECT_DOUBLE_EQ(ce.grad_logits(0), ce.probs(0));
    EXPECT_DOUBLE_EQ(ce.grad_logits(1), ce.probs(1) - 1.0);
    for (int k = 0; k < 2; ++k) {
        auto f = [&](double x) {
            Vector<double> l = vec({0.3, -1.2});
            l(k) = x;
            return softmax_cross_entropy(l, 1).loss;
        };
        EXPECT_NEAR(ce.grad_logits(k), oracle::central_difference(f, k == 0 ? 0.3 : -1.2, 1e-6), 1e-9);
    }
}

TEST(Loss, RejectsBadInput) {
    EXPECT_THROW(softmax_cross_entropy(vec({0, 0, 0}), 0), ContractViolation);
    EXPECT_THROW(softmax_cross_entropy(vec({0, 0}), 2), ContractViolation);
    EXPECT_THROW(softmax_cross_entropy(vec({NAN, 0}), 0), NumericError);
}

TEST(Loss, SoftmaxSimplexAndNonNegativeLoss) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const Vector<double> l = vec({g(rng), g(rng)});
        const Vector<double> p = softmax(l);
        EXPECT_GE(p.minCoeff(), 0.0);
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        EXPECT_GE(softmax_cross_entropy(l, i % 2).loss, 0.0);
    }
}

TEST(Schedule, Values) {
    LrSchedule s;
    EXPECT_EQ(schedule_rate(s, 10), 0.01);
    EXPECT_EQ(schedule_rate(s, 39), 0.01);
    EXPECT_EQ(schedule_rate(s, 40), 0.002);
    EXPECT_EQ(schedule_rate(s, 45), 0.002);
    EXPECT_EQ(schedule_rate(s, 65), 0.0004);
    EXPECT_EQ(schedule_rate(s, 85), 0.00008);
}

TEST(Schedule, NonIncreasingAndRejectsNegative) {
    LrSchedule s;
    for (int e = 1; e < 200; ++e) EXPECT_LE(s.rate(e), s.rate(e - 1));
    EXPECT_THROW(s.rate(-1), ContractViolation);
}

TEST(Sgd, SingleStepArithmetic) {
    ParamTensor<double> p(1, 1);
    p.value(0, 0) = 1.0;
    p.grad(0, 0) = 0.5;
    ParamTensor<double>* ps[] = {&p};
    sgd_step<double>(ps, 0.01);
    EXPECT_DOUBLE_EQ(p.value(0, 0), 0.995);
    EXPECT_EQ(p.grad(0, 0), 0.0);
}

TEST(Sgd, ZeroGradLeavesParamsBitIdentical) {
    std::mt19937_64 rng(1);
    ParamTensor<double> p(3, 4);
    xavier_uniform(p, 4, 3, rng);
    const Matrix<double> before = p.value;
    Sgd<double> opt({&p});
    opt.step(0.01);
    EXPECT_EQ(p.value, before);
}

TEST(Sgd, TwoStepsVersusDoubledRateOnQuadratic) {
    // f(p) = p^2 / 2, grad = p: two steps of lr differ from one step of 2 lr.
    const double lr = 0.1, p0 = 1.0;
    ParamTensor<double> a(1, 1), b(1, 1), c(1, 1);
    a.value(0, 0) = b.value(0, 0) = p0;
    ParamTensor<double>* pa[] = {&a};
    ParamTensor<double>* pb[] = {&b};
    for (int i = 0; i < 2; ++i) {
        a.grad(0, 0) = a.value(0, 0);
        sgd_step<double>(pa, lr);
    }
    b.grad(0, 0) = b.value(0, 0);
    sgd_step<double>(pb, 2 * lr);
    EXPECT_DOUBLE_EQ(a.value(0, 0), p0 * (1 - lr) * (1 - lr));
    EXPECT_DOUBLE_EQ(b.value(0, 0), p0 * (1 - 2 * lr));
    EXPECT_NE(a.value(0, 0), b.value(0, 0));
    // Constant gradient: the two agree.
    c.value(0, 0) = p0;
    ParamTensor<double>* pc[] = {&c};
    for (int i = 0; i < 2; ++i) {
        c.grad(0, 0) = 0.5;
        sgd_step<double>(pc, lr);
    }
    EXPECT_DOUBLE_EQ(c.value(0, 0), p0 - 2 * lr * 0.5);
}

TEST(Sgd, MomentumAndWeightDecay) {
    ParamTensor<double> p(1, 1);
    p.value(0, 0) = 1.0;
    Sgd<double> opt({&p}, {0.9, 0.1});
    p.grad(0, 0) = 1.0;
    opt.step(0.1);  // v = 1 + 0.1 = 1.1
    EXPECT_DOUBLE_EQ(p.value(0, 0), 1.0 - 0.11);
    p.grad(0, 0) = 1.0;
    const double v2 = 0.9 * 1.1 + 1.0 + 0.1 * 0.89;
    opt.step(0.1);
    EXPECT_DOUBLE_EQ(p.value(0, 0), 0.89 - 0.1 * v2);
}

TEST(GradCheck, LinearModelIsExactToRoundoff) {
    ParamTensor<double> w(3, 1);
    w.value << 0.5, -1.5, 2.0;
    const Vector<double> x = vec({1.0, 2.0, -3.0});
    ParamTensor<double>* ps[] = {&w};
    auto loss = [&](bool accumulate) {
        if (accumulate) w.grad.col(0) += x;
        return w.value.col(0).dot(x);
    };
    const auto r = grad_check<double>(loss, ps, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-9);
    EXPECT_EQ(r.entries_checked, 3u);
    EXPECT_EQ(w.value(1, 0), -1.5);  // restored
}

TEST(GradCheck, RandomTwoLayerNet) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int draw = 0; draw < 20; ++draw) {
        DenseLayer<double> l1(6, 8, Activation::Tanh), l2(8, 2, Activation::Identity);
        l1.init(rng);
        l2.init(rng);
        for (Eigen::Index i = 0; i < 8; ++i) l1.bias.value(i) = 0.1 * g(rng);
        Vector<double> x(6);
        for (Eigen::Index i = 0; i < 6; ++i) x(i) = g(rng);
        const int y = draw % 2;
        auto loss = [&](bool accumulate) {
            DenseTrace<double> t1, t2;
            const auto ce = softmax_cross_entropy(l2.forward(l1.forward(x, &t1), &t2), y);
            if (accumulate) l1.backward(t1, l2.backward(t2, ce.grad_logits));
            return ce.loss;
        };
        ParamTensor<double>* ps[] = {&l1.weight, &l1.bias, &l2.weight, &l2.bias};
        const auto r = grad_check<double>(loss, ps, 1e-5);
        EXPECT_LT(r.max_relative_error, 1e-4) << "draw " << draw;
        EXPECT_LT(r.max_entry_relative_error, 1e-4) << "draw " << draw;
    }
}

TEST(GradCheck, DetectsWrongGradient) {
    ParamTensor<double> w(2, 1);
    w.value << 1.0, 2.0;
    ParamTensor<double>* ps[] = {&w};
    auto loss = [&](bool accumulate) {
        if (accumulate) w.grad.col(0) += 2.0 * w.value.col(0) * 1.01;
        return w.value.col(0).squaredNorm();
    };
    EXPECT_GT(grad_check<double>(loss, ps, 1e-5).max_relative_error, 1e-3);
}

TEST(GradCheck, NonFiniteLossThrows) {
    ParamTensor<double> w(1, 1);
    ParamTensor<double>* ps[] = {&w};
    auto loss = [&](bool) { return std::log(-1.0); };
    EXPECT_THROW(grad_check<double>(loss, ps, 1e-5), NumericError);
}
