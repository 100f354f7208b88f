#include "m3net/training/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "m3net/data/split.hpp"
#include "m3net/errors.hpp"
#include "m3net/parallel.hpp"
#include "m3net/seed.hpp"
#include "m3net/stats/auc.hpp"

namespace m3net::training {

namespace {

using nlohmann::json;

void check_options(const ExperimentOptions& o) {
    if (o.k < 2) throw ConfigError("experiment: k must be >= 2");
    if (o.jobs < 1) throw ConfigError("experiment: jobs must be >= 1");
}

std::optional<double> target_value(const SubjectPrediction& p, Target t) {
    switch (t) {
    case Target::Combined: return p.p_combined;
    case Target::Image: return p.p1;
    case Target::Biomarker: return p.p2;
    }
    return std::nullopt;
}

SubjectPrediction predict_subject(const ModelBundle& model, const data::SubjectRecord& r, int fold) {
    SubjectPrediction p;
    p.id = r.id;
    p.label = r.label;
    p.fold = fold;
    const auto features = data::to_features(r, model.normalization);
    const auto out = m3net_forward(features, model.params);
    p.p1 = out.p1;
    p.p2 = out.p2;
    p.p_combined = out.p_combined;
    const auto routed = predict_routed(features, model.params);
    p.risk = routed.risk;
    p.source = routed.source;
    return p;
}

std::vector<std::string> ids_of(const data::Cohort& c) {
    std::vector<std::string> ids;
    ids.reserve(c.size());
    for (const auto& r : c) ids.push_back(r.id);
    return ids;
}

json options_to_json(const ExperimentOptions& o) {
    return {{"k", o.k},
            {"split_seed", o.split_seed},
            {"stratified", o.stratified},
            {"jobs", o.jobs},
            {"training_subset", o.subset == TrainingSubset::All ? "all" : "complete_only"},
            {"bootstrap_resamples", o.bootstrap.n_resamples},
            {"bootstrap_seed", o.bootstrap.seed},
            {"confidence", o.bootstrap.confidence}};
}

std::string method_name(const TrainConfig& config, const ExperimentOptions& options) {
    if (options.subset == TrainingSubset::CompleteOnly)
        return "Learning without imperfect data (" + config.model.tag() + ")";
    return config.model.tag();
}

void add_paired_tests(ExperimentReport& report, const std::vector<SubjectPrediction>& preds,
                      const stats::BootstrapOptions& bootstrap) {
    const stats::ScoreSet combined = target_scores(preds, Target::Combined);
    if (!combined.has_both_classes()) return;
    for (Target t : {Target::Image, Target::Biomarker})
        report.p_values["combined_vs_" + to_string(t)] =
            stats::bootstrap_pvalue(combined, target_scores(preds, t), bootstrap);
}

json prediction_to_json(const SubjectPrediction& p) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"id", p.id},       {"label", p.label},           {"fold", p.fold},
            {"p1", opt(p.p1)},  {"p2", opt(p.p2)},            {"p_combined", opt(p.p_combined)},
            {"risk", p.risk},   {"source", to_string(p.source)}};
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

} // namespace

std::string to_string(Target t) {
    switch (t) {
    case Target::Combined: return "combined";
    case Target::Image: return "image";
    case Target::Biomarker: return "biomarker";
    }
    return "unknown";
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

stats::ScoreSet target_scores(const std::vector<SubjectPrediction>& predictions, Target target) {
    std::vector<const SubjectPrediction*> rows;
    for (const auto& p : predictions)
        if (p.p_combined && target_value(p, target)) rows.push_back(&p);
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->id < b->id; });
    stats::ScoreSet s;
    for (const auto* p : rows) {
        s.ids.push_back(p->id);
        s.labels.push_back(p->label);
        s.scores.push_back(*target_value(*p, target));
    }
    return s;
}

ExperimentReport cross_validate(const data::Cohort& cohort, const TrainConfig& config,
                                const ExperimentOptions& options) {
    check_options(options);
    config.validate();
    data::check_unique_ids(cohort);
    const data::FoldSplit split = data::kfold_split(cohort, options.k, options.split_seed, options.stratified);

    const auto k = static_cast<std::size_t>(options.k);
    std::vector<FoldRecord> folds(k);
    std::vector<std::vector<SubjectPrediction>> fold_preds(k);

    parallel_for(k, options.jobs, [&](std::size_t f) {
        const int fi = static_cast<int>(f);
        FoldRecord& rec = folds[f];
        rec.fold = fi;
        rec.split_seed = derive_seed(options.split_seed, 100 + f);
        rec.train_seed = derive_seed(config.seed, f);

        const data::TrainValSplit tv = data::split_train_val(split.all_except(fi), rec.split_seed);
        data::Cohort train_set = data::select(cohort, tv.train);
        if (options.subset == TrainingSubset::CompleteOnly) train_set = data::complete_only(train_set);
        const data::Cohort val_set = data::select(cohort, tv.validation);
        const data::Cohort test_set = data::select(cohort, split.fold(fi));

        rec.n_test_complete = static_cast<std::size_t>(
            std::count_if(test_set.begin(), test_set.end(), [](const auto& r) { return r.complete(); }));
        if (rec.n_test_complete == 0)
            throw DataError("cross_validate: test fold " + std::to_string(fi) + " has no complete subjects");

        TrainConfig fold_config = config;
        fold_config.seed = rec.train_seed;
        const Checkpoint ckpt = train(train_set, val_set, fold_config);

        rec.n_train = train_set.size();
        rec.n_validation = val_set.size();
        rec.n_test = test_set.size();
        rec.best_epoch = ckpt.epoch;
        rec.validation_auc = ckpt.validation_auc;
        rec.train_ids = ids_of(train_set);
        rec.validation_ids = ids_of(val_set);
        rec.test_ids = ids_of(test_set);

        auto& preds = fold_preds[f];
        for (const auto& r : test_set) preds.push_back(predict_subject(ckpt.model, r, fi));
        for (Target t : kAllTargets) rec.test_auc[t] = stats::auc(target_scores(preds, t));
    });

    ExperimentReport report;
    report.kind = "cross_validation";
    report.method = method_name(config, options);
    report.folds = std::move(folds);
    for (auto& preds : fold_preds)
        report.predictions.insert(report.predictions.end(), preds.begin(), preds.end());
    for (Target t : kAllTargets) {
        TargetSummary s;
        for (const auto& rec : report.folds) s.fold_aucs.push_back(rec.test_auc.at(t));
        std::tie(s.mean, s.std) = mean_std(s.fold_aucs);
        s.pooled_auc = stats::auc(target_scores(report.predictions, t));
        report.targets[t] = std::move(s);
    }
    add_paired_tests(report, report.predictions, options.bootstrap);
    report.config = {{"train", to_json(config)}, {"experiment", options_to_json(options)}};
    return report;
}

ExperimentReport run_baseline_complete_only(const data::Cohort& cohort, const TrainConfig& config,
                                            ExperimentOptions options) {
    options.subset = TrainingSubset::CompleteOnly;
    return cross_validate(cohort, config, options);
}

EnsembleResult ensemble_protocols(const std::vector<std::vector<double>>& per_model, const std::vector<int>& labels,
                                  const stats::BootstrapOptions& bootstrap) {
    if (per_model.empty()) throw ContractViolation("ensemble_protocols: no models");
    EnsembleResult out;
    const std::size_t n = labels.size();
    out.ensemble_scores.assign(n, 0.0);
    for (const auto& scores : per_model) {
        if (scores.size() != n) throw ContractViolation("ensemble_protocols: ragged prediction matrix");
        out.model_aucs.push_back(stats::auc(std::span<const double>(scores), std::span<const int>(labels)));
        for (std::size_t i = 0; i < n; ++i) out.ensemble_scores[i] += scores[i];
    }
    for (double& s : out.ensemble_scores) s /= static_cast<double>(per_model.size());
    std::tie(out.mean, out.std) = mean_std(out.model_aucs);
    stats::ScoreSet set;
    set.labels = labels;
    set.scores = out.ensemble_scores;
    out.ensemble = stats::bootstrap_ci(set, bootstrap);
    return out;
}

ExperimentReport external_validate(const data::Cohort& train_cohort, const data::Cohort& test_cohort,
                                   const TrainConfig& config, const ExperimentOptions& options) {
    check_options(options);
    config.validate();
    data::check_unique_ids(train_cohort);
    data::check_unique_ids(test_cohort);
    if (test_cohort.empty()) throw DataError("external_validate: test cohort is empty");
    for (const auto& r : test_cohort)
        if (!r.complete())
            throw DataError("external_validate: test subject '" + r.id +
                            "' lacks a modality (external test subjects must be complete)");

    const data::FoldSplit split = data::kfold_split(train_cohort, options.k, options.split_seed, options.stratified);
    const auto k = static_cast<std::size_t>(options.k);
    std::vector<FoldRecord> folds(k);
    std::vector<std::vector<SubjectPrediction>> model_preds(k);

    parallel_for(k, options.jobs, [&](std::size_t f) {
        const int fi = static_cast<int>(f);
        FoldRecord& rec = folds[f];
        rec.fold = fi;
        rec.split_seed = options.split_seed;
        rec.train_seed = derive_seed(config.seed, f);

        data::Cohort train_set = data::select(train_cohort, split.all_except(fi));
        if (options.subset == TrainingSubset::CompleteOnly) train_set = data::complete_only(train_set);
        const data::Cohort val_set = data::select(train_cohort, split.fold(fi));

        TrainConfig fold_config = config;
        fold_config.seed = rec.train_seed;
        const Checkpoint ckpt = train(train_set, val_set, fold_config);

        rec.n_train = train_set.size();
        rec.n_validation = val_set.size();
        rec.n_test = test_cohort.size();
        rec.n_test_complete = test_cohort.size();
        rec.best_epoch = ckpt.epoch;
        rec.validation_auc = ckpt.validation_auc;
        rec.train_ids = ids_of(train_set);
        rec.validation_ids = ids_of(val_set);
        rec.test_ids = ids_of(test_cohort);

        auto& preds = model_preds[f];
        for (const auto& r : test_cohort) preds.push_back(predict_subject(ckpt.model, r, fi));
        for (Target t : kAllTargets) rec.test_auc[t] = stats::auc(target_scores(preds, t));
    });

    ExperimentReport report;
    report.kind = "external_validation";
    report.method = method_name(config, options);
    report.folds = std::move(folds);
    for (auto& preds : model_preds) report.predictions.insert(report.predictions.end(), preds.begin(), preds.end());

    std::vector<int> labels;
    for (const auto& r : test_cohort) labels.push_back(r.label);
    for (Target t : kAllTargets) {
        std::vector<std::vector<double>> matrix;
        for (const auto& preds : model_preds) {
            std::vector<double> row;
            for (const auto& p : preds) row.push_back(*target_value(p, t));
            matrix.push_back(std::move(row));
        }
        const EnsembleResult e = ensemble_protocols(matrix, labels, options.bootstrap);
        TargetSummary s;
        s.fold_aucs = e.model_aucs;
        s.mean = e.mean;
        s.std = e.std;
        s.pooled_auc = stats::auc(target_scores(report.predictions, t));
        s.ensemble = e.ensemble;
        report.targets[t] = std::move(s);
    }

    for (std::size_t i = 0; i < test_cohort.size(); ++i) {
        SubjectPrediction e;
        e.id = test_cohort[i].id;
        e.label = test_cohort[i].label;
        double p1 = 0, p2 = 0, pc = 0;
        for (const auto& preds : model_preds) {
            p1 += *preds[i].p1;
            p2 += *preds[i].p2;
            pc += *preds[i].p_combined;
        }
        const double m = static_cast<double>(k);
        e.p1 = p1 / m;
        e.p2 = p2 / m;
        e.p_combined = pc / m;
        e.risk = *e.p_combined;
        e.source = RiskSource::Combined;
        report.ensembled.push_back(std::move(e));
    }
    add_paired_tests(report, report.ensembled, options.bootstrap);
    report.config = {{"train", to_json(config)}, {"experiment", options_to_json(options)}};
    return report;
}

json report_to_json(const ExperimentReport& report) {
    json j;
    j["kind"] = report.kind;
    j["method"] = report.method;
    j["config"] = report.config;

    json folds = json::array();
    for (const auto& f : report.folds) {
        json aucs = json::object();
        for (const auto& [t, v] : f.test_auc) aucs[to_string(t)] = v;
        folds.push_back({{"fold", f.fold},
                         {"train_seed", f.train_seed},
                         {"split_seed", f.split_seed},
                         {"n_train", f.n_train},
                         {"n_validation", f.n_validation},
                         {"n_test", f.n_test},
                         {"n_test_complete", f.n_test_complete},
                         {"best_epoch", f.best_epoch},
                         {"validation_auc", f.validation_auc},
                         {"test_auc", aucs}});
    }
    j["folds"] = std::move(folds);

    json targets = json::object();
    for (const auto& [t, s] : report.targets) {
        json e{{"fold_aucs", s.fold_aucs}, {"mean", s.mean}, {"std", s.std}, {"pooled_auc", s.pooled_auc}};
        if (s.ensemble) e["ensemble"] = stats::to_json(*s.ensemble);
        targets[to_string(t)] = std::move(e);
    }
    j["targets"] = std::move(targets);
    j["p_values"] = report.p_values;

    json preds = json::array();
    for (const auto& p : report.predictions) preds.push_back(prediction_to_json(p));
    j["predictions"] = std::move(preds);
    if (!report.ensembled.empty()) {
        json ens = json::array();
        for (const auto& p : report.ensembled) ens.push_back(prediction_to_json(p));
        j["ensembled_predictions"] = std::move(ens);
    }
    return j;
}

std::string format_report_table(const ExperimentReport& report) {
    const bool external = report.kind == "external_validation";
    auto label = [&](Target t) -> std::string {
        switch (t) {
        case Target::Image: return "Image only (p1)";
        case Target::Biomarker: return "Biomarkers only (p2)";
        case Target::Combined: return report.method;
        }
        return "";
    };
    auto marker = [&](Target t) -> std::string {
        if (t == Target::Combined) return "";
        const auto it = report.p_values.find("combined_vs_" + to_string(t));
        return it != report.p_values.end() && it->second < 0.05 ? " *" : "";
    };

    std::ostringstream os;
    char line[256];
    if (external) {
        std::snprintf(line, sizeof line, "%-48s  %-18s  %s\n", "Method", "Per-model AUC", "Fold-averaged AUC (95% CI)");
    } else {
        std::snprintf(line, sizeof line, "%-48s  %-18s  %s\n", "Method", "AUC (mean +- std)", "Pooled AUC");
    }
    os << line;
    for (Target t : {Target::Image, Target::Biomarker, Target::Combined}) {
        const TargetSummary& s = report.targets.at(t);
        const std::string ms = fixed3(s.mean) + " +- " + fixed3(s.std) + marker(t);
        const std::string right = external && s.ensemble ? stats::format_auc_ci(*s.ensemble) + marker(t)
                                                         : fixed3(s.pooled_auc);
        std::snprintf(line, sizeof line, "%-48s  %-18s  %s\n", label(t).c_str(), ms.c_str(), right.c_str());
        os << line;
    }
    os << "* p < 0.05 against the combined prediction (paired bootstrap, two-tailed)\n";
    return os.str();
}

} // namespace m3net::training
