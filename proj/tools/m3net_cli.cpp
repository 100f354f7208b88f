// m3net: command-line driver for cohort synthesis, training, cross-validation,
// external validation, prediction, AUC statistics and gradient checks.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "m3net/data/cohort.hpp"
#include "m3net/data/split.hpp"
#include "m3net/data/synthetic.hpp"
#include "m3net/errors.hpp"
#include "m3net/model/bundle.hpp"
#include "m3net/model/gradient_audit.hpp"
#include "m3net/seed.hpp"
#include "m3net/stats/auc.hpp"
#include "m3net/stats/bootstrap.hpp"
#include "m3net/training/experiments.hpp"
#include "m3net/training/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace m3net;

namespace {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kDataError = 3,
    kNumericError = 4,
};

/// Every tunable, settable from the config file or the command line.
struct RunConfig {
    // model
    std::string variant = "m3net1";
    ModelConfig model;
    // training
    training::TrainConfig train;
    std::vector<double> loss_weights{1.0, 1.0, 1.0};
    // experiment
    training::ExperimentOptions experiment;
    // synthetic cohort
    data::SynthConfig synth;
    // output
    std::string out_dir = ".";
    bool verbose = false;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
}

std::string slug(const std::string& tag) {
    std::string s;
    for (char c : tag) {
        if (std::isalnum(static_cast<unsigned char>(c))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        else if (!s.empty() && s.back() != '_') s += '_';
    }
    while (!s.empty() && s.back() == '_') s.pop_back();
    return s;
}

/// Resolves derived fields after parsing and validates everything up front.
void finalize(RunConfig& rc, const CLI::App& app) {
    rc.model.variant = parse_variant(rc.variant);
    rc.train.model = rc.model;
    if (rc.loss_weights.size() != 3) throw ConfigError("--loss-weights expects three values");
    rc.train.loss_weights = {rc.loss_weights[0], rc.loss_weights[1], rc.loss_weights[2]};
    rc.synth.schema = {rc.model.biomarker_width, rc.model.image_feature_width, rc.model.bag_capacity};
    rc.synth.blood_index = rc.model.blood_index;
    rc.synth.mayo_index = rc.model.mayo_index;
    rc.synth.min_folds = rc.experiment.k;

    // Fractions not given explicitly share the remainder in proportion to their defaults.
    const data::SynthConfig defaults;
    struct Frac {
        const char* flag;
        double* value;
        double fallback;
    };
    Frac fracs[] = {{"--frac-both", &rc.synth.frac_both, defaults.frac_both},
                    {"--frac-image-only", &rc.synth.frac_image_only, defaults.frac_image_only},
                    {"--frac-bio-only", &rc.synth.frac_bio_only, defaults.frac_bio_only}};
    double given = 0.0, unset_default = 0.0;
    bool any_given = false;
    for (auto& f : fracs) {
        if (app.count(f.flag)) {
            given += *f.value;
            any_given = true;
        } else {
            unset_default += f.fallback;
        }
    }
    if (any_given) {
        const double rest = std::max(0.0, 1.0 - given);
        for (auto& f : fracs)
            if (!app.count(f.flag)) *f.value = unset_default > 0.0 ? rest * f.fallback / unset_default : 0.0;
    }

    rc.model.validate();
    rc.train.validate();
    rc.synth.validate();
    if (rc.experiment.k < 2) throw ConfigError("--k must be >= 2");
    if (rc.experiment.jobs < 1) throw ConfigError("--jobs must be >= 1");
    if (rc.experiment.bootstrap.n_resamples < 1) throw ConfigError("--bootstrap-resamples must be >= 1");
    rc.experiment.bootstrap.jobs = rc.experiment.jobs;
}

json run_config_json(const RunConfig& rc, const CLI::App& app) {
    return {{"train", training::to_json(rc.train)},
            {"experiment",
             {{"k", rc.experiment.k},
              {"split_seed", rc.experiment.split_seed},
              {"stratified", rc.experiment.stratified},
              {"jobs", rc.experiment.jobs},
              {"bootstrap_resamples", rc.experiment.bootstrap.n_resamples},
              {"bootstrap_seed", rc.experiment.bootstrap.seed}}},
            {"effective_options", app.config_to_str(true, false)}};
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse integer list '" + s + "'");
        }
    }
    return out;
}

data::LoadOptions load_options(const RunConfig& rc) {
    data::LoadOptions o;
    o.schema = {rc.model.biomarker_width, rc.model.image_feature_width, rc.model.bag_capacity};
    return o;
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& rc, const std::string& out_path) {
    const auto cohort = data::generate_synthetic_cohort(rc.synth);
    if (fs::path(out_path).has_parent_path()) fs::create_directories(fs::path(out_path).parent_path());
    data::save_cohort(out_path, cohort);
    const auto counts = data::stratum_counts(rc.synth);
    std::cout << "wrote " << cohort.size() << " subjects to " << out_path << " (both " << counts.both
              << ", image-only " << counts.image_only << ", biomarker-only " << counts.bio_only << ")\n";
    return kOk;
}

void emit_report(const training::ExperimentReport& report, const json& run_config, const fs::path& dir,
                 const std::string& stem) {
    json j = training::report_to_json(report);
    j["run_config"] = run_config;
    write_text(dir / (stem + ".json"), j.dump(1) + "\n");
    const std::string table = training::format_report_table(report);
    write_text(dir / (stem + ".txt"), table);
    std::cout << table;
}

int cmd_cv(RunConfig rc, const CLI::App& app, const std::string& cohort_path, const std::string& baseline,
           const std::string& dim_sweep, const std::string& folds_out) {
    const auto cohort = data::load_cohort(cohort_path, load_options(rc));
    if (!folds_out.empty())
        data::save_folds(folds_out, data::kfold_split(cohort, rc.experiment.k, rc.experiment.split_seed,
                                                      rc.experiment.stratified));
    std::vector<int> dims = dim_sweep.empty() ? std::vector<int>{rc.model.dim} : parse_int_list(dim_sweep);
    for (int dim : dims) {
        RunConfig run = rc;
        run.model.dim = dim;
        run.train.model = run.model;
        run.train.validate();
        training::ExperimentReport report = baseline == "complete-only"
                                                ? training::run_baseline_complete_only(cohort, run.train, run.experiment)
                                                : training::cross_validate(cohort, run.train, run.experiment);
        const std::string stem = "cv_" + slug(report.method);
        std::cout << "== " << report.method << " (" << rc.experiment.k << "-fold cross-validation)\n";
        emit_report(report, run_config_json(run, app), rc.out_dir, stem);
    }
    return kOk;
}

int cmd_extval(const RunConfig& rc, const CLI::App& app, const std::string& train_path, const std::string& test_path,
               const std::string& baseline) {
    const auto train_cohort = data::load_cohort(train_path, load_options(rc));
    const auto test_cohort = data::load_cohort(test_path, load_options(rc));
    training::ExperimentOptions opts = rc.experiment;
    if (baseline == "complete-only") opts.subset = training::TrainingSubset::CompleteOnly;
    const auto report = training::external_validate(train_cohort, test_cohort, rc.train, opts);
    std::cout << "== " << report.method << " (external validation, " << rc.experiment.k << " models)\n";
    emit_report(report, run_config_json(rc, app), rc.out_dir, "extval_" + slug(report.method));
    return kOk;
}

int cmd_train(const RunConfig& rc, const std::string& cohort_path, const std::string& model_out) {
    const auto cohort = data::load_cohort(cohort_path, load_options(rc));
    std::vector<std::size_t> all(cohort.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto tv = data::split_train_val(all, rc.experiment.split_seed);
    auto log = [&](const training::EpochLog& e) {
        if (rc.verbose)
            std::fprintf(stderr, "epoch %3d  lr %.5g  loss %.5f  val AUC %.4f\n", e.epoch, e.learning_rate,
                         e.mean_train_loss, e.validation_auc);
    };
    auto ckpt = training::train(data::select(cohort, tv.train), data::select(cohort, tv.validation), rc.train, log);
    ckpt.model.metadata["train_config"] = training::to_json(rc.train);
    ckpt.model.metadata["split_seed"] = rc.experiment.split_seed;
    save_model(model_out, ckpt.model);
    std::printf("best epoch %d, validation AUC %.4f; model written to %s\n", ckpt.epoch, ckpt.validation_auc,
                model_out.c_str());
    return kOk;
}

int cmd_predict(const RunConfig& rc, const std::string& model_path, const std::string& cohort_path,
                const std::string& out_path) {
    const ModelBundle model = load_model(model_path);
    data::LoadOptions opts;
    opts.schema = {model.params.config.biomarker_width, model.params.config.image_feature_width,
                   model.params.config.bag_capacity};
    opts.allow_no_modality = true;
    const auto cohort = data::load_cohort(cohort_path, opts);
    (void)rc;

    std::ostringstream csv;
    csv << "id,label,risk,path\n";
    std::size_t failed = 0;
    char buf[64];
    for (const auto& r : cohort) {
        if (!r.has_image() && !r.has_bio()) {
            csv << r.id << ',' << r.label << ",,none\n";
            std::cerr << "unpredictable: subject '" << r.id << "' has no usable modality\n";
            ++failed;
            continue;
        }
        const auto routed = model.predict(r);
        std::snprintf(buf, sizeof buf, "%.17g", routed.risk);
        csv << r.id << ',' << r.label << ',' << buf << ',' << to_string(routed.source) << '\n';
    }
    write_text(out_path, csv.str());
    std::cout << "predicted " << cohort.size() - failed << " of " << cohort.size() << " subjects -> " << out_path
              << "\n";
    if (!cohort.empty() && failed == cohort.size()) return kDataError;
    return kOk;
}

stats::ScoreSet read_predictions(const std::string& path, const std::map<std::string, int>* labels) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions file '" + path + "'");
    stats::ScoreSet s;
    std::string line;
    std::getline(in, line);  // header
    std::size_t line_no = 1;
    std::vector<std::tuple<std::string, int, double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string id, label, risk, path_col;
        std::getline(ss, id, ',');
        std::getline(ss, label, ',');
        std::getline(ss, risk, ',');
        std::getline(ss, path_col, ',');
        if (risk.empty()) continue;  // unpredictable subject
        int y = 0;
        double score = 0.0;
        try {
            y = std::stoi(label);
            score = std::stod(risk);
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed prediction row");
        }
        if (labels) {
            const auto it = labels->find(id);
            if (it == labels->end()) throw DataError(path + ": subject '" + id + "' missing from label source");
            y = it->second;
        }
        rows.emplace_back(id, y, score);
    }
    std::sort(rows.begin(), rows.end());
    for (auto& [id, y, score] : rows) {
        s.ids.push_back(id);
        s.labels.push_back(y);
        s.scores.push_back(score);
    }
    return s;
}

int cmd_stats(const RunConfig& rc, const std::string& a_path, const std::string& b_path,
              const std::string& labels_path, const std::string& out_path) {
    std::map<std::string, int> labels;
    if (!labels_path.empty()) {
        data::LoadOptions opts = load_options(rc);
        opts.allow_no_modality = true;
        for (const auto& r : data::load_cohort(labels_path, opts)) labels[r.id] = r.label;
    }
    const auto* label_src = labels_path.empty() ? nullptr : &labels;
    const stats::ScoreSet a = read_predictions(a_path, label_src);
    stats::BootstrapResult ra = stats::bootstrap_ci(a, rc.experiment.bootstrap);

    json j{{"input_a", a_path}, {"n_subjects", a.size()}, {"a", stats::to_json(ra)}};
    std::cout << "A: " << stats::format_auc_ci(ra) << "\n";
    if (!b_path.empty()) {
        const stats::ScoreSet b = read_predictions(b_path, label_src);
        const stats::BootstrapResult rb = stats::bootstrap_ci(b, rc.experiment.bootstrap);
        const double p = stats::bootstrap_pvalue(a, b, rc.experiment.bootstrap);
        j["input_b"] = b_path;
        j["b"] = stats::to_json(rb);
        j["p_two_tailed"] = p;
        std::cout << "B: " << stats::format_auc_ci(rb) << "\n";
        std::printf("paired bootstrap two-tailed p = %.4g (%d resamples, seed %llu)\n", p,
                    rc.experiment.bootstrap.n_resamples,
                    static_cast<unsigned long long>(rc.experiment.bootstrap.seed));
    }
    j["n_resamples"] = rc.experiment.bootstrap.n_resamples;
    j["seed"] = rc.experiment.bootstrap.seed;
    j["confidence"] = rc.experiment.bootstrap.confidence;
    if (!out_path.empty()) write_text(out_path, j.dump(1) + "\n");
    return kOk;
}

int cmd_gradcheck(const RunConfig& rc, double h, double tolerance, bool corrupt) {
    GradAuditOptions opts;
    opts.h = h;
    opts.tolerance = tolerance;
    opts.corrupt_gradient = corrupt;
    opts.seed = rc.train.seed;
    const auto rows = run_gradient_audit(opts);
    bool ok = true;
    std::printf("%-18s  %-15s  %-12s  %-24s  %-14s  %s\n", "model", "situation", "max rel err", "worst parameter",
                "entry rel err", "result");
    for (const auto& r : rows) {
        std::printf("%-18s  %-15s  %-12.3e  %-24s  %-14.3e  %s\n", r.model.c_str(), to_string(r.situation).c_str(),
                    r.max_relative_error, r.worst_parameter.c_str(), r.max_entry_relative_error,
                    r.passed ? "pass" : "FAIL");
        ok = ok && r.passed;
    }
    std::printf("gradient check %s (tolerance %.1e, h = %.1e)\n", ok ? "passed" : "FAILED", tolerance, h);
    return ok ? kOk : kNumericError;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-path missing-modality fusion network: training and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Flat key = value config file (command-line flags take precedence)")
        ->envname("M3NET_CONFIG");

    RunConfig rc;
    // model
    app.add_option("--variant", rc.variant, "m3net1 | m3net2")->capture_default_str();
    app.add_option("--dim", rc.model.dim, "Sub-path feature width (Dim)")->capture_default_str();
    app.add_option("--attention-hidden", rc.model.attention_hidden)->capture_default_str();
    app.add_option("--bio-hidden", rc.model.bio_hidden)->capture_default_str();
    app.add_option("--combined-hidden", rc.model.combined_hidden)->capture_default_str();
    app.add_option("--blood-index", rc.model.blood_index)->capture_default_str();
    app.add_option("--mayo-index", rc.model.mayo_index)->capture_default_str();
    // training
    app.add_option("--epochs", rc.train.epochs)->capture_default_str();
    app.add_option("--batch-size", rc.train.batch_size)->capture_default_str();
    app.add_option("--lr", rc.train.schedule.initial, "Initial learning rate")->capture_default_str();
    app.add_option("--lr-decay", rc.train.schedule.decay_factor)->capture_default_str();
    app.add_option("--lr-milestones", rc.train.schedule.milestones)->capture_default_str()->delimiter(',');
    app.add_option("--momentum", rc.train.sgd.momentum)->capture_default_str();
    app.add_option("--weight-decay", rc.train.sgd.weight_decay)->capture_default_str();
    app.add_option("--loss-weights", rc.loss_weights, "image,bio,combined")->delimiter(',')->capture_default_str();
    app.add_option("--seed", rc.train.seed, "Training seed")->capture_default_str();
    // experiment
    app.add_option("--k", rc.experiment.k, "Number of folds")->capture_default_str();
    app.add_option("--split-seed", rc.experiment.split_seed)->capture_default_str();
    app.add_flag("--stratified", rc.experiment.stratified, "Label-stratified fold assignment");
    app.add_option("--jobs", rc.experiment.jobs, "Worker threads for folds and bootstrap")->capture_default_str();
    app.add_option("--bootstrap-resamples", rc.experiment.bootstrap.n_resamples)->capture_default_str();
    app.add_option("--bootstrap-seed", rc.experiment.bootstrap.seed)->capture_default_str();
    // synthetic cohort
    app.add_option("--n", rc.synth.n, "Synthetic cohort size")->capture_default_str();
    app.add_option("--frac-both", rc.synth.frac_both)->capture_default_str();
    app.add_option("--frac-image-only", rc.synth.frac_image_only)->capture_default_str();
    app.add_option("--frac-bio-only", rc.synth.frac_bio_only)->capture_default_str();
    app.add_option("--bio-signal", rc.synth.bio_signal)->capture_default_str();
    app.add_option("--image-signal", rc.synth.image_signal)->capture_default_str();
    app.add_option("--key-instance-rate", rc.synth.key_instance_rate)->capture_default_str();
    app.add_option("--shared-signal-fraction", rc.synth.shared_signal_fraction)->capture_default_str();
    app.add_option("--complete-label-bias", rc.synth.complete_label_bias)->capture_default_str();
    app.add_option("--synth-seed", rc.synth.seed)->capture_default_str();
    app.add_option("--site", rc.synth.site)->capture_default_str();
    app.add_option("--id-prefix", rc.synth.id_prefix)->capture_default_str();
    // output
    app.add_option("--out-dir", rc.out_dir, "Directory for reports")->capture_default_str();
    app.add_flag("-v,--verbose", rc.verbose);

    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort (JSON lines)");
    synth->add_option("--out", synth_out, "Output cohort path")->required();

    std::string cohort_path, baseline, dim_sweep, folds_out;
    auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
    cv->add_option("cohort", cohort_path, "Cohort file")->required();
    cv->add_option("--baseline", baseline, "complete-only: drop incomplete subjects from training")
        ->check(CLI::IsMember({"", "complete-only"}));
    cv->add_option("--dim-sweep", dim_sweep, "Comma-separated Dim values, one report each");
    cv->add_option("--folds-out", folds_out, "Write the id -> fold assignment");

    std::string train_path, test_path, ext_baseline;
    auto* extval = app.add_subcommand("extval", "External validation with k fold-trained models");
    extval->add_option("train", train_path, "Training cohort")->required();
    extval->add_option("test", test_path, "External test cohort (all subjects complete)")->required();
    extval->add_option("--baseline", ext_baseline)->check(CLI::IsMember({"", "complete-only"}));

    std::string model_out;
    auto* train = app.add_subcommand("train", "Train one model on a 3:1 split and save it");
    train->add_option("cohort", cohort_path, "Cohort file")->required();
    train->add_option("--model-out", model_out, "Model output path")->required();

    std::string model_path, pred_out = "predictions.csv";
    auto* predict = app.add_subcommand("predict", "Per-subject routed risk from a saved model");
    predict->add_option("model", model_path)->required();
    predict->add_option("cohort", cohort_path)->required();
    predict->add_option("--out", pred_out)->capture_default_str();

    std::string pred_a, pred_b, labels_path, stats_out;
    auto* stats_cmd = app.add_subcommand("stats", "AUC, bootstrap CI and paired p-value from prediction files");
    stats_cmd->add_option("predictions_a", pred_a)->required();
    stats_cmd->add_option("predictions_b", pred_b);
    stats_cmd->add_option("--labels", labels_path, "Cohort file supplying labels");
    stats_cmd->add_option("--out", stats_out, "JSON stats report");

    double h = 1e-5, tolerance = 1e-4;
    bool corrupt = false;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check of the full model");
    gradcheck->set_help_flag("--help", "Print this help message and exit");
    gradcheck->add_option("--h", h, "Central-difference step")->capture_default_str();
    gradcheck->add_option("--tolerance", tolerance)->capture_default_str();
    gradcheck->add_flag("--corrupt-gradient", corrupt, "Negative control: perturb analytic gradients");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc_code = app.exit(e);
        return rc_code == 0 ? kOk : kConfigError;
    }

    try {
        finalize(rc, app);
        if (*synth) return cmd_synth(rc, synth_out);
        if (*cv) return cmd_cv(rc, app, cohort_path, baseline, dim_sweep, folds_out);
        if (*extval) return cmd_extval(rc, app, train_path, test_path, ext_baseline);
        if (*train) return cmd_train(rc, cohort_path, model_out);
        if (*predict) return cmd_predict(rc, model_path, cohort_path, pred_out);
        if (*stats_cmd) return cmd_stats(rc, pred_a, pred_b, labels_path, stats_out);
        if (*gradcheck) return cmd_gradcheck(rc, h, tolerance, corrupt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kOk;
}
