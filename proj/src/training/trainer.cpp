#include "m3net/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "m3net/errors.hpp"
#include "m3net/seed.hpp"
#include "m3net/stats/auc.hpp"

namespace m3net::training {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(schedule.initial >= 0.0) || !(schedule.decay_factor >= 0.0))
        throw ConfigError("train: learning rate and decay factor must be non-negative");
    if (loss_weights.image < 0 || loss_weights.bio < 0 || loss_weights.combined < 0)
        throw ConfigError("train: loss weights must be non-negative");
    model.validate();
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr_initial", c.schedule.initial},
            {"lr_decay_factor", c.schedule.decay_factor},
            {"lr_milestones", c.schedule.milestones},
            {"loss_weights", {c.loss_weights.image, c.loss_weights.bio, c.loss_weights.combined}},
            {"momentum", c.sgd.momentum},
            {"weight_decay", c.sgd.weight_decay},
            {"seed", c.seed},
            {"model", config_to_json(c.model)}};
}

double routed_auc(const ModelBundle& model, const data::Cohort& cohort) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(cohort.size());
    labels.reserve(cohort.size());
    for (const auto& r : cohort) {
        scores.push_back(model.predict(r).risk);
        labels.push_back(r.label);
    }
    return stats::auc(std::span<const double>(scores), std::span<const int>(labels));
}

Checkpoint train(const data::Cohort& train, const data::Cohort& validation, const TrainConfig& config,
                 const EpochCallback& on_epoch) {
    config.validate();
    if (train.empty()) throw DataError("train: training set is empty");
    if (validation.empty()) throw DataError("train: validation set is empty");

    const data::CohortSchema schema{config.model.biomarker_width, config.model.image_feature_width,
                                    config.model.bag_capacity};
    ModelBundle model{M3NetParams<double>(config.model),
                      data::compute_normalization(train, schema, data::EmptyStratum::Identity), config.seed,
                      nlohmann::json::object()};
    model.params.initialize(derive_seed(config.seed, 0));

    std::vector<LabeledSubject<double>> subjects;
    subjects.reserve(train.size());
    for (const auto& r : train) subjects.push_back(data::to_labeled(r, model.normalization));

    nn::Sgd<double> optimizer(model.params.parameters(), config.sgd);
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, 1));
    std::vector<std::size_t> order(subjects.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<const LabeledSubject<double>*> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));

    Checkpoint best{-1, model, -1.0, {}};
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.schedule.rate(epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        int n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&subjects[order[i]]);
            LossBreakdown<double> loss;
            try {
                loss = masked_loss(std::span<const LabeledSubject<double>* const>(batch), model.params,
                                   config.loss_weights, GradMode::Accumulate);
            } catch (const NumericError& e) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(n_batches) + ": " + e.what());
            }
            if (!std::isfinite(loss.total))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(n_batches));
            optimizer.step(lr);
            loss_sum += loss.total;
            ++n_batches;
        }

        const double val_auc = routed_auc(model, validation);
        best.validation_history.push_back(val_auc);
        if (val_auc > best.validation_auc) {
            best.epoch = epoch;
            best.validation_auc = val_auc;
            best.model = model;
        }
        if (on_epoch) on_epoch({epoch, lr, loss_sum / n_batches, val_auc});
    }
    best.model.metadata = {{"best_epoch", best.epoch}, {"validation_auc", best.validation_auc}};
    return best;
}

} // namespace m3net::training
