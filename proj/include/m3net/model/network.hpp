#ifndef M3NET_MODEL_NETWORK_HPP_
#define M3NET_MODEL_NETWORK_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "m3net/errors.hpp"
#include "m3net/model/config.hpp"
#include "m3net/model/features.hpp"
#include "m3net/nn/dense.hpp"
#include "m3net/nn/loss.hpp"
#include "m3net/nn/tensor.hpp"

namespace m3net {

using nn::Matrix;
using nn::Vector;

/// Additive score mask for padded bag rows; exp() of it underflows to exactly 0.
inline constexpr double kPaddingMask = -1e30;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/**
 * All learnable weights of one model.
 *
 * Image path: attention (V, w) -> image_proj (tanh, width dim) -> image_head (2 logits).
 * Biomarker path: bio_layer1 (tanh) -> bio_proj (tanh, width dim) -> bio_head (2 logits).
 * Combined path: combined_layer1 (tanh) -> combined_head (2 logits), fed with
 * [p1, p2, blood, mayo] (M3Net1) or [image feature, bio feature, blood, mayo] (M3Net2).
 */
template <typename Scalar>
struct M3NetParams {
    ModelConfig config;
    nn::ParamTensor<Scalar> attention_v;  // [attention_hidden x image_feature_width]
    nn::ParamTensor<Scalar> attention_w;  // [attention_hidden x 1]
    nn::DenseLayer<Scalar> image_proj;
    nn::DenseLayer<Scalar> image_head;
    nn::DenseLayer<Scalar> bio_layer1;
    nn::DenseLayer<Scalar> bio_proj;
    nn::DenseLayer<Scalar> bio_head;
    nn::DenseLayer<Scalar> combined_layer1;
    nn::DenseLayer<Scalar> combined_head;

    using Named = std::pair<std::string, nn::ParamTensor<Scalar>*>;

    /// Zero-valued parameters shaped for `cfg`.
    explicit M3NetParams(const ModelConfig& cfg)
        : config(cfg),
          attention_v((cfg.validate(), cfg.attention_hidden), cfg.image_feature_width),
          attention_w(cfg.attention_hidden, 1),
          image_proj(cfg.image_feature_width, cfg.dim, nn::Activation::Tanh),
          image_head(cfg.dim, 2, nn::Activation::Identity),
          bio_layer1(cfg.biomarker_width, cfg.bio_hidden, nn::Activation::Tanh),
          bio_proj(cfg.bio_hidden, cfg.dim, nn::Activation::Tanh),
          bio_head(cfg.dim, 2, nn::Activation::Identity),
          combined_layer1(cfg.combined_input_width(), cfg.combined_hidden, nn::Activation::Tanh),
          combined_head(cfg.combined_hidden, 2, nn::Activation::Identity) {
        if (combined_layer1.in_dim() != cfg.combined_input_width())
            throw ConfigError("combined path input width inconsistent with variant/dim");
    }

    /// Xavier-uniform weights, zero biases, drawn in a fixed order from `seed`.
    void initialize(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        nn::xavier_uniform(attention_v, attention_v.cols(), attention_v.rows(), rng);
        nn::xavier_uniform(attention_w, attention_w.rows(), Eigen::Index{1}, rng);
        for (auto* layer : layers()) layer->init(rng);
    }

    std::vector<nn::DenseLayer<Scalar>*> layers() {
        return {&image_proj, &image_head, &bio_layer1, &bio_proj, &bio_head, &combined_layer1, &combined_head};
    }

    std::vector<Named> named_parameters() {
        return {{"attention.V", &attention_v},
                {"attention.w", &attention_w},
                {"image_proj.weight", &image_proj.weight},
                {"image_proj.bias", &image_proj.bias},
                {"image_head.weight", &image_head.weight},
                {"image_head.bias", &image_head.bias},
                {"bio_layer1.weight", &bio_layer1.weight},
                {"bio_layer1.bias", &bio_layer1.bias},
                {"bio_proj.weight", &bio_proj.weight},
                {"bio_proj.bias", &bio_proj.bias},
                {"bio_head.weight", &bio_head.weight},
                {"bio_head.bias", &bio_head.bias},
                {"combined_layer1.weight", &combined_layer1.weight},
                {"combined_layer1.bias", &combined_layer1.bias},
                {"combined_head.weight", &combined_head.weight},
                {"combined_head.bias", &combined_head.bias}};
    }

    std::vector<std::pair<std::string, const nn::ParamTensor<Scalar>*>> named_parameters() const {
        std::vector<std::pair<std::string, const nn::ParamTensor<Scalar>*>> out;
        for (auto& [name, p] : const_cast<M3NetParams*>(this)->named_parameters()) out.emplace_back(name, p);
        return out;
    }

    std::vector<nn::ParamTensor<Scalar>*> parameters() {
        std::vector<nn::ParamTensor<Scalar>*> out;
        for (auto& [name, p] : named_parameters()) out.push_back(p);
        return out;
    }

    std::vector<nn::ParamTensor<Scalar>*> image_path_parameters() {
        return {&attention_v,       &attention_w,      &image_proj.weight,
                &image_proj.bias,   &image_head.weight, &image_head.bias};
    }
    std::vector<nn::ParamTensor<Scalar>*> bio_path_parameters() {
        return {&bio_layer1.weight, &bio_layer1.bias, &bio_proj.weight,
                &bio_proj.bias,     &bio_head.weight, &bio_head.bias};
    }
    std::vector<nn::ParamTensor<Scalar>*> combined_path_parameters() {
        return {&combined_layer1.weight, &combined_layer1.bias, &combined_head.weight,
                &combined_head.bias};
    }

    void zero_grad() {
        for (auto* p : parameters()) p->zero_grad();
    }
};

// ---------------------------------------------------------------------------
// Attention-MIL pooling
// ---------------------------------------------------------------------------

template <typename Scalar>
struct AmilResult {
    Vector<Scalar> pooled;   // sum_k a_k h_k
    Vector<Scalar> weights;  // one per bag row, 0 on padded rows
    Matrix<Scalar> hidden;   // tanh(V h_k^T) for the real rows, [attention_hidden x real]
};

/**
 * a_k = softmax_k(w^T tanh(V h_k)), z = sum_k a_k h_k, over the rows of `bag`.
 * Rows at index >= real_count get a -1e30 additive mask before the softmax.
 */
template <typename Scalar, typename Derived>
AmilResult<Scalar> amil_pool(const Eigen::MatrixBase<Derived>& bag, int real_count,
                             const Matrix<Scalar>& V, const Vector<Scalar>& w) {
    if (real_count < 1 || real_count > bag.rows())
        throw ContractViolation("amil_pool: real instance count must be in [1, bag rows]");
    if (bag.cols() != V.cols() || V.rows() != w.size())
        throw ContractViolation("amil_pool: attention parameter shapes do not match the bag");

    const auto real = bag.topRows(real_count);
    AmilResult<Scalar> out;
    out.hidden = (V * real.transpose()).array().tanh().matrix();

    Vector<Scalar> scores = Vector<Scalar>::Zero(bag.rows());
    scores.head(real_count) = out.hidden.transpose() * w;
    for (Eigen::Index k = real_count; k < bag.rows(); ++k) scores(k) += static_cast<Scalar>(kPaddingMask);
    out.weights = nn::softmax(scores);
    out.pooled = real.transpose() * out.weights.head(real_count);
    return out;
}

// ---------------------------------------------------------------------------
// Forward traces
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ImageTrace {
    const Matrix<Scalar>* bag = nullptr;  // borrowed from the SubjectFeatures
    int real_count = 0;
    AmilResult<Scalar> amil;
    nn::DenseTrace<Scalar> proj;
    nn::DenseTrace<Scalar> head;
    Vector<Scalar> probs;
    Vector<Scalar> feature() const { return proj.output; }
};

template <typename Scalar>
struct BioTrace {
    nn::DenseTrace<Scalar> layer1;
    nn::DenseTrace<Scalar> proj;
    nn::DenseTrace<Scalar> head;
    Vector<Scalar> probs;
    Vector<Scalar> feature() const { return proj.output; }
};

template <typename Scalar>
struct CombinedTrace {
    nn::DenseTrace<Scalar> layer1;
    nn::DenseTrace<Scalar> head;
    Vector<Scalar> probs;
};

template <typename Scalar>
struct ForwardOutput {
    std::optional<Scalar> p1;          // image path
    std::optional<Scalar> p2;          // biomarker path
    std::optional<Scalar> p_combined;  // combined path
    std::optional<Vector<Scalar>> attention_weights;
};

/// Everything a backward pass needs. Holds a pointer into the input bag, so
/// the features must outlive the trace.
template <typename Scalar>
struct ForwardTrace {
    std::optional<ImageTrace<Scalar>> image;
    std::optional<BioTrace<Scalar>> bio;
    std::optional<CombinedTrace<Scalar>> combined;
    ForwardOutput<Scalar> output;
};

namespace detail {

template <typename Scalar>
void check_features(const SubjectFeatures<Scalar>& f, const ModelConfig& cfg) {
    if (f.image_bag) {
        const auto& bag = *f.image_bag;
        if (bag.cols() != cfg.image_feature_width)
            throw ContractViolation("image bag has " + std::to_string(bag.cols()) +
                                    " feature columns, model expects " +
                                    std::to_string(cfg.image_feature_width));
        if (f.real_instance_count < 1 || f.real_instance_count > bag.rows())
            throw ContractViolation("image bag real_instance_count out of range");
    }
    if (f.biomarkers && f.biomarkers->size() != cfg.biomarker_width)
        throw ContractViolation("biomarker vector has length " + std::to_string(f.biomarkers->size()) +
                                ", model expects " + std::to_string(cfg.biomarker_width));
}

template <typename Scalar>
ImageTrace<Scalar> trace_image(const SubjectFeatures<Scalar>& f, const M3NetParams<Scalar>& params) {
    if (!f.has_image()) throw ContractViolation("image_path_forward: subject has no image modality");
    check_features(f, params.config);
    ImageTrace<Scalar> t;
    t.bag = &*f.image_bag;
    t.real_count = f.real_instance_count;
    t.amil = amil_pool(*f.image_bag, f.real_instance_count, params.attention_v.value,
                       Vector<Scalar>(params.attention_w.value.col(0)));
    const Vector<Scalar> feature = params.image_proj.forward(t.amil.pooled, &t.proj);
    t.probs = nn::softmax(params.image_head.forward(feature, &t.head));
    return t;
}

template <typename Scalar>
BioTrace<Scalar> trace_bio(const SubjectFeatures<Scalar>& f, const M3NetParams<Scalar>& params) {
    if (!f.has_bio()) throw ContractViolation("bio_path_forward: subject has no biomarker modality");
    check_features(f, params.config);
    BioTrace<Scalar> t;
    const Vector<Scalar> hidden = params.bio_layer1.forward(*f.biomarkers, &t.layer1);
    const Vector<Scalar> feature = params.bio_proj.forward(hidden, &t.proj);
    t.probs = nn::softmax(params.bio_head.forward(feature, &t.head));
    return t;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Path forwards
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ImagePathResult {
    Scalar p1;
    Vector<Scalar> feature;  // dim-wide
    Vector<Scalar> attention_weights;
};

template <typename Scalar>
ImagePathResult<Scalar> image_path_forward(const SubjectFeatures<Scalar>& f,
                                           const M3NetParams<Scalar>& params) {
    auto t = detail::trace_image(f, params);
    return {t.probs(1), t.feature(), t.amil.weights};
}

template <typename Scalar>
struct BioPathResult {
    Scalar p2;
    Vector<Scalar> feature;
};

template <typename Scalar>
BioPathResult<Scalar> bio_path_forward(const SubjectFeatures<Scalar>& f, const M3NetParams<Scalar>& params) {
    auto t = detail::trace_bio(f, params);
    return {t.probs(1), t.feature()};
}

/// Combined-path input: [p1, p2, blood, mayo] for M3Net1,
/// [image feature, bio feature, blood, mayo] for M3Net2.
template <typename Scalar>
Vector<Scalar> combined_input(Scalar p1, Scalar p2, const Vector<Scalar>& image_feature,
                              const Vector<Scalar>& bio_feature, Scalar blood, Scalar mayo,
                              const ModelConfig& cfg) {
    Vector<Scalar> c(cfg.combined_input_width());
    if (cfg.variant == Variant::M3Net1) {
        c << p1, p2, blood, mayo;
    } else {
        if (image_feature.size() != cfg.dim || bio_feature.size() != cfg.dim)
            throw ContractViolation("combined_forward: sub-path features must be dim-wide");
        c << image_feature, bio_feature, blood, mayo;
    }
    return c;
}

template <typename Scalar>
Scalar combined_forward(Scalar p1, Scalar p2, const Vector<Scalar>& image_feature,
                        const Vector<Scalar>& bio_feature, Scalar blood, Scalar mayo,
                        const M3NetParams<Scalar>& params) {
    const Vector<Scalar> c = combined_input(p1, p2, image_feature, bio_feature, blood, mayo, params.config);
    return nn::softmax(params.combined_head.forward(params.combined_layer1.forward(c)))(1);
}

/// Runs exactly the paths the subject's modalities allow and records traces.
template <typename Scalar>
ForwardTrace<Scalar> trace_forward(const SubjectFeatures<Scalar>& f, const M3NetParams<Scalar>& params) {
    if (!f.has_image() && !f.has_bio()) throw ContractViolation("no usable modality");
    ForwardTrace<Scalar> t;
    if (f.has_image()) {
        t.image = detail::trace_image(f, params);
        t.output.p1 = t.image->probs(1);
        t.output.attention_weights = t.image->amil.weights;
    }
    if (f.has_bio()) {
        t.bio = detail::trace_bio(f, params);
        t.output.p2 = t.bio->probs(1);
    }
    if (t.image && t.bio) {
        const auto& cfg = params.config;
        const Vector<Scalar>& bio = *f.biomarkers;
        const Vector<Scalar> c = combined_input(*t.output.p1, *t.output.p2, t.image->feature(),
                                                t.bio->feature(), bio(cfg.blood_index),
                                                bio(cfg.mayo_index), cfg);
        CombinedTrace<Scalar> ct;
        const Vector<Scalar> hidden = params.combined_layer1.forward(c, &ct.layer1);
        ct.probs = nn::softmax(params.combined_head.forward(hidden, &ct.head));
        t.output.p_combined = ct.probs(1);
        t.combined = std::move(ct);
    }
    return t;
}

template <typename Scalar>
ForwardOutput<Scalar> m3net_forward(const SubjectFeatures<Scalar>& f, const M3NetParams<Scalar>& params) {
    return trace_forward(f, params).output;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

/// Per-subject loss-term coefficients (lambda / active count); 0 disables a term.
template <typename Scalar>
struct LossSeeds {
    Scalar image = 0;
    Scalar bio = 0;
    Scalar combined = 0;
};

namespace detail {

template <typename Scalar>
void amil_backward(M3NetParams<Scalar>& params, const ImageTrace<Scalar>& t, const Vector<Scalar>& d_pooled) {
    const int r = t.real_count;
    const auto real = t.bag->topRows(r);
    const Vector<Scalar> a = t.amil.weights.head(r);
    // dL/da_k = h_k . dz ; softmax Jacobian gives ds = a * (g - a.g)
    const Vector<Scalar> g = real * d_pooled;
    const Vector<Scalar> ds = (a.array() * (g.array() - a.dot(g))).matrix();
    params.attention_w.grad.col(0).noalias() += t.amil.hidden * ds;
    const Vector<Scalar> w = params.attention_w.value.col(0);
    const Matrix<Scalar> d_pre =
        ((w * ds.transpose()).array() * (Scalar(1) - t.amil.hidden.array().square())).matrix();
    params.attention_v.grad.noalias() += d_pre * real;
}

/// d p / d logits for p = softmax(logits)(1).
template <typename Scalar>
Vector<Scalar> prob1_jacobian(const Vector<Scalar>& probs) {
    const Scalar s = probs(1) * (Scalar(1) - probs(1));
    Vector<Scalar> j(2);
    j << -s, s;
    return j;
}

template <typename Scalar>
Vector<Scalar> ce_grad(const Vector<Scalar>& probs, int label) {
    Vector<Scalar> g = probs;
    g(label) -= Scalar(1);
    return g;
}

} // namespace detail

/**
 * Accumulates gradients of
 *   seeds.image * CE(p1) + seeds.bio * CE(p2) + seeds.combined * CE(p_combined)
 * for one traced subject. Terms whose path was not run are skipped, so
 * parameters exclusive to an inactive path receive no gradient.
 */
template <typename Scalar>
void backward(M3NetParams<Scalar>& params, const ForwardTrace<Scalar>& t, int label,
              const LossSeeds<Scalar>& seeds) {
    if (!t.image && !t.bio) throw ContractViolation("backward called without a forward pass");
    const auto& cfg = params.config;

    Scalar d_p1 = 0, d_p2 = 0;
    Vector<Scalar> d_img_feature = Vector<Scalar>::Zero(cfg.dim);
    Vector<Scalar> d_bio_feature = Vector<Scalar>::Zero(cfg.dim);

    if (t.combined && seeds.combined != Scalar(0)) {
        const Vector<Scalar> d_logits = seeds.combined * detail::ce_grad(t.combined->probs, label);
        const Vector<Scalar> d_hidden = params.combined_head.backward(t.combined->head, d_logits);
        const Vector<Scalar> d_c = params.combined_layer1.backward(t.combined->layer1, d_hidden);
        if (cfg.variant == Variant::M3Net1) {
            d_p1 = d_c(0);
            d_p2 = d_c(1);
        } else {
            d_img_feature += d_c.segment(0, cfg.dim);
            d_bio_feature += d_c.segment(cfg.dim, cfg.dim);
        }
    }

    if (t.image) {
        const auto& it = *t.image;
        const Vector<Scalar> d_logits =
            seeds.image * detail::ce_grad(it.probs, label) + d_p1 * detail::prob1_jacobian(it.probs);
        if (!d_logits.isZero(0) || !d_img_feature.isZero(0)) {
            d_img_feature += params.image_head.backward(it.head, d_logits);
            const Vector<Scalar> d_pooled = params.image_proj.backward(it.proj, d_img_feature);
            detail::amil_backward(params, it, d_pooled);
        }
    }

    if (t.bio) {
        const auto& bt = *t.bio;
        const Vector<Scalar> d_logits =
            seeds.bio * detail::ce_grad(bt.probs, label) + d_p2 * detail::prob1_jacobian(bt.probs);
        if (!d_logits.isZero(0) || !d_bio_feature.isZero(0)) {
            d_bio_feature += params.bio_head.backward(bt.head, d_logits);
            const Vector<Scalar> d_hidden = params.bio_proj.backward(bt.proj, d_bio_feature);
            params.bio_layer1.backward(bt.layer1, d_hidden);
        }
    }
}

// ---------------------------------------------------------------------------
// Masked loss and prediction
// ---------------------------------------------------------------------------

template <typename Scalar>
struct LossWeights {
    Scalar image = 1;
    Scalar bio = 1;
    Scalar combined = 1;
};

template <typename Scalar>
struct LossBreakdown {
    Scalar img_cel = 0;
    Scalar bio_cel = 0;
    Scalar cmb_cel = 0;
    Scalar total = 0;
    LossWeights<Scalar> weights;
    int image_count = 0;
    int bio_count = 0;
    int combined_count = 0;
};

enum class GradMode { None, Accumulate };

/**
 * Each cross-entropy term is averaged over the subjects for which it is
 * active (image term: has image; bio term: has biomarkers; combined term:
 * both). Terms with no active subject are exactly 0.
 */
template <typename Scalar>
LossBreakdown<Scalar> masked_loss(std::span<const LabeledSubject<Scalar>* const> batch,
                                  M3NetParams<Scalar>& params, const LossWeights<Scalar>& weights = {},
                                  GradMode mode = GradMode::None) {
    if (batch.empty()) throw ContractViolation("masked_loss: empty batch");
    LossBreakdown<Scalar> out;
    out.weights = weights;
    for (const auto* s : batch) {
        if (s->features.has_image()) ++out.image_count;
        if (s->features.has_bio()) ++out.bio_count;
        if (s->features.complete()) ++out.combined_count;
    }
    LossSeeds<Scalar> seeds;
    if (out.image_count) seeds.image = weights.image / Scalar(out.image_count);
    if (out.bio_count) seeds.bio = weights.bio / Scalar(out.bio_count);
    if (out.combined_count) seeds.combined = weights.combined / Scalar(out.combined_count);

    for (const auto* s : batch) {
        const ForwardTrace<Scalar> t = trace_forward(s->features, params);
        const int y = s->label;
        if (t.image) out.img_cel += -std::log(t.image->probs(y));
        if (t.bio) out.bio_cel += -std::log(t.bio->probs(y));
        if (t.combined) out.cmb_cel += -std::log(t.combined->probs(y));
        if (mode == GradMode::Accumulate) backward(params, t, y, seeds);
    }
    if (out.image_count) out.img_cel /= Scalar(out.image_count);
    if (out.bio_count) out.bio_cel /= Scalar(out.bio_count);
    if (out.combined_count) out.cmb_cel /= Scalar(out.combined_count);
    out.total = weights.image * out.img_cel + weights.bio * out.bio_cel + weights.combined * out.cmb_cel;
    return out;
}

template <typename Scalar>
LossBreakdown<Scalar> masked_loss(std::span<const LabeledSubject<Scalar>> batch, M3NetParams<Scalar>& params,
                                  const LossWeights<Scalar>& weights = {}, GradMode mode = GradMode::None) {
    std::vector<const LabeledSubject<Scalar>*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& s : batch) ptrs.push_back(&s);
    return masked_loss(std::span<const LabeledSubject<Scalar>* const>(ptrs), params, weights, mode);
}

enum class RiskSource { Combined, Image, Biomarker };

inline std::string to_string(RiskSource s) {
    switch (s) {
    case RiskSource::Combined: return "combined";
    case RiskSource::Image: return "image";
    case RiskSource::Biomarker: return "biomarker";
    }
    return "unknown";
}

template <typename Scalar>
struct RoutedRisk {
    Scalar risk;
    RiskSource source;
};

/// p_combined when both modalities are present, otherwise the single available path.
template <typename Scalar>
RoutedRisk<Scalar> predict_routed(const SubjectFeatures<Scalar>& f, const M3NetParams<Scalar>& params) {
    const ForwardOutput<Scalar> out = m3net_forward(f, params);
    if (out.p_combined) return {*out.p_combined, RiskSource::Combined};
    if (out.p1) return {*out.p1, RiskSource::Image};
    return {*out.p2, RiskSource::Biomarker};
}

template <typename Scalar>
Scalar predict_risk(const SubjectFeatures<Scalar>& f, const M3NetParams<Scalar>& params) {
    return predict_routed(f, params).risk;
}

} // namespace m3net

#endif // M3NET_MODEL_NETWORK_HPP_
