#ifndef M3NET_TRAINING_TRAINER_HPP_
#define M3NET_TRAINING_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "m3net/data/cohort.hpp"
#include "m3net/model/bundle.hpp"
#include "m3net/nn/schedule.hpp"
#include "m3net/nn/sgd.hpp"

namespace m3net::training {

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    nn::LrSchedule schedule;
    LossWeights<double> loss_weights;
    nn::SgdOptions sgd;
    std::uint64_t seed = 1;
    ModelConfig model;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);

/// Best-validation-AUC snapshot of a training run.
struct Checkpoint {
    int epoch = -1;
    ModelBundle model;
    double validation_auc = 0.0;
    std::vector<double> validation_history;  // one entry per epoch
};

struct EpochLog {
    int epoch;
    double learning_rate;
    double mean_train_loss;
    double validation_auc;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Routed-risk AUC over every subject in `cohort` (p_combined for complete
/// subjects, otherwise the single available path). Never mutates the model.
double routed_auc(const ModelBundle& model, const data::Cohort& cohort);

/**
 * Mini-batch SGD on the masked three-term loss.
 *
 * Normalization statistics come from `train` only. Each epoch reshuffles the
 * training subjects (batches mix all availability strata), steps with the
 * scheduled learning rate, then scores the validation set. Returns the epoch
 * with the highest validation AUC, ties going to the earlier epoch.
 * Throws NumericError naming epoch and batch if the loss becomes non-finite.
 */
Checkpoint train(const data::Cohort& train, const data::Cohort& validation, const TrainConfig& config,
                 const EpochCallback& on_epoch = {});

} // namespace m3net::training

#endif // M3NET_TRAINING_TRAINER_HPP_
