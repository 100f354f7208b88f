#include "m3net/model/gradient_audit.hpp"

#include <random>

#include "m3net/model/network.hpp"
#include "m3net/nn/grad_check.hpp"
#include "m3net/seed.hpp"

namespace m3net {

std::string to_string(Situation s) {
    switch (s) {
    case Situation::ImageOnly: return "image-only";
    case Situation::BioOnly: return "biomarker-only";
    case Situation::Complete: return "complete";
    }
    return "unknown";
}

namespace {

std::vector<LabeledSubject<double>> random_batch(const ModelConfig& cfg, Situation situation, int n,
                                                 std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> count(2, cfg.bag_capacity);
    std::vector<LabeledSubject<double>> batch(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& s = batch[static_cast<std::size_t>(i)];
        s.label = i % 2;
        if (situation != Situation::BioOnly) {
            const int r = count(rng);
            Matrix<double> bag = Matrix<double>::Zero(cfg.bag_capacity, cfg.image_feature_width);
            for (int k = 0; k < r; ++k)
                for (int c = 0; c < cfg.image_feature_width; ++c) bag(k, c) = gauss(rng);
            s.features.image_bag = std::move(bag);
            s.features.real_instance_count = r;
        }
        if (situation != Situation::ImageOnly) {
            Vector<double> b(cfg.biomarker_width);
            for (int c = 0; c < cfg.biomarker_width; ++c) b(c) = gauss(rng);
            s.features.biomarkers = std::move(b);
        }
    }
    return batch;
}

} // namespace

std::vector<GradAuditRow> run_gradient_audit(const GradAuditOptions& options) {
    std::vector<ModelConfig> models = options.models;
    if (models.empty()) {
        models.push_back(ModelConfig{});
        for (int dim : {1, 5, 20}) {
            ModelConfig c;
            c.variant = Variant::M3Net2;
            c.dim = dim;
            models.push_back(c);
        }
    }

    std::vector<GradAuditRow> rows;
    std::uint64_t stream = 0;
    for (const auto& cfg : models) {
        for (Situation situation : {Situation::ImageOnly, Situation::BioOnly, Situation::Complete}) {
            std::mt19937_64 rng(derive_seed(options.seed, stream++));
            M3NetParams<double> params(cfg);
            params.initialize(rng());
            // Non-zero biases so that every parameter is exercised away from the init point.
            std::normal_distribution<double> gauss(0.0, 0.1);
            for (auto* layer : params.layers())
                for (Eigen::Index i = 0; i < layer->bias.size(); ++i) layer->bias.value(i) = gauss(rng);
            const auto batch = random_batch(cfg, situation, options.batch_size, rng);

            auto all = params.parameters();
            auto loss = [&](bool accumulate) {
                const auto out = masked_loss(std::span<const LabeledSubject<double>>(batch), params, {},
                                             accumulate ? GradMode::Accumulate : GradMode::None);
                if (accumulate && options.corrupt_gradient)
                    for (auto* p : all) p->grad *= 1.01;
                return out.total;
            };
            const auto result = nn::grad_check<double>(loss, std::span<nn::ParamTensor<double>* const>(all), options.h);
            const auto names = params.named_parameters();
            rows.push_back({cfg.tag(), situation, result.max_relative_error, names[result.worst_param].first,
                            result.entries_checked, result.max_relative_error < options.tolerance,
                            result.max_entry_relative_error});
        }
    }
    return rows;
}

} // namespace m3net
