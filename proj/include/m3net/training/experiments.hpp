#ifndef M3NET_TRAINING_EXPERIMENTS_HPP_
#define M3NET_TRAINING_EXPERIMENTS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "m3net/data/cohort.hpp"
#include "m3net/stats/bootstrap.hpp"
#include "m3net/training/trainer.hpp"

namespace m3net::training {

/// Which score is evaluated on complete test subjects.
enum class Target { Combined, Image, Biomarker };

inline constexpr Target kAllTargets[] = {Target::Combined, Target::Image, Target::Biomarker};

std::string to_string(Target t);

enum class TrainingSubset {
    All,           // every subject, whatever its modalities
    CompleteOnly,  // only subjects with both modalities ("learning without imperfect data")
};

struct ExperimentOptions {
    int k = 5;
    std::uint64_t split_seed = 7;
    bool stratified = false;
    int jobs = 1;
    TrainingSubset subset = TrainingSubset::All;
    stats::BootstrapOptions bootstrap;
};

struct SubjectPrediction {
    std::string id;
    int label = 0;
    int fold = -1;  // test fold (CV) or model index (external)
    std::optional<double> p1, p2, p_combined;
    double risk = 0.0;
    RiskSource source = RiskSource::Combined;
};

struct FoldRecord {
    int fold = 0;
    std::uint64_t train_seed = 0;
    std::uint64_t split_seed = 0;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    std::size_t n_test = 0;
    std::size_t n_test_complete = 0;
    int best_epoch = -1;
    double validation_auc = 0.0;
    std::map<Target, double> test_auc;  // on complete test subjects
    std::vector<std::string> train_ids, validation_ids, test_ids;
};

struct TargetSummary {
    std::vector<double> fold_aucs;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation over folds
    double pooled_auc = 0.0;  // one AUC over all complete test predictions
    std::optional<stats::BootstrapResult> ensemble;  // external validation: AUC of the fold-averaged score
};

struct ExperimentReport {
    std::string kind;    // "cross_validation" or "external_validation"
    std::string method;  // e.g. "M3Net1", "Learning without imperfect data"
    std::vector<FoldRecord> folds;
    std::map<Target, TargetSummary> targets;
    std::vector<SubjectPrediction> predictions;  // every test subject (k times for external)
    std::vector<SubjectPrediction> ensembled;    // external only: mean over the k models
    std::map<std::string, double> p_values;      // paired tests of Combined vs other targets
    nlohmann::json config;                       // effective configuration echo, including seeds
};

/// Complete-subject scores for one target, ordered by subject id.
stats::ScoreSet target_scores(const std::vector<SubjectPrediction>& predictions, Target target);

/// Mean and population std of a sample.
std::pair<double, double> mean_std(const std::vector<double>& v);

/**
 * k-fold cross-validation: fold f is the test set, the other folds are split
 * 3:1 into train/validation, one model is trained per fold. Test AUCs are
 * computed on the complete test subjects for each target.
 * Throws DataError if some test fold has no complete subject.
 */
ExperimentReport cross_validate(const data::Cohort& cohort, const TrainConfig& config,
                                const ExperimentOptions& options = {});

/// cross_validate with incomplete subjects removed from every training set;
/// splits, seeds and test sets are unchanged so results pair with the full model.
ExperimentReport run_baseline_complete_only(const data::Cohort& cohort, const TrainConfig& config,
                                            ExperimentOptions options = {});

/// Combines the k models' predictions on one external set:
/// per-model AUC mean/std, and the AUC (+ bootstrap CI) of the per-subject mean.
/// `per_model[m][i]` scores subject i under model m.
struct EnsembleResult {
    std::vector<double> model_aucs;
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> ensemble_scores;
    stats::BootstrapResult ensemble;
};
EnsembleResult ensemble_protocols(const std::vector<std::vector<double>>& per_model, const std::vector<int>& labels,
                                  const stats::BootstrapOptions& bootstrap);

/**
 * k models, each trained on k-1 folds of `train_cohort` with the remaining
 * fold as validation, all scored on `test_cohort` (every subject must be
 * complete). Reports per-model AUC mean/std and the AUC with bootstrap CI of
 * the fold-averaged prediction.
 */
ExperimentReport external_validate(const data::Cohort& train_cohort, const data::Cohort& test_cohort,
                                   const TrainConfig& config, const ExperimentOptions& options = {});

nlohmann::json report_to_json(const ExperimentReport& report);

/// Text table with one row per evaluated target.
std::string format_report_table(const ExperimentReport& report);

} // namespace m3net::training

#endif // M3NET_TRAINING_EXPERIMENTS_HPP_
