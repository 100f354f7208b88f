// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "m3net/data/split.hpp"
#include "m3net/data/synthetic.hpp"
#include "m3net/model/bundle.hpp"
#include "m3net/model/gradient_audit.hpp"
#include "m3net/nn/schedule.hpp"
#include "m3net/seed.hpp"
#include "m3net/stats/auc.hpp"
#include "m3net/stats/bootstrap.hpp"
#include "m3net/training/experiments.hpp"
#include "oracles.hpp"

using namespace m3net;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

data::Cohort synth_cohort(int n, double both, double image_only, double bio_only, std::uint64_t seed) {
    data::SynthConfig c;
    c.n = n;
    c.frac_both = both;
    c.frac_image_only = image_only;
    c.frac_bio_only = bio_only;
    c.seed = seed;
    return data::generate_synthetic_cohort(c);
}

Outcome gradient_fidelity() {
    const auto t0 = Clock::now();
    const auto rows = run_gradient_audit();
    const double elapsed = seconds_since(t0);
    double worst = 0.0;
    bool ok = rows.size() == 12;
    for (const auto& r : rows) {
        worst = std::max(worst, r.max_relative_error);
        ok = ok && r.passed && r.max_relative_error < 1e-4;
    }
    return {ok && elapsed < 60.0, fmt("%.0f model/situation pairs, max rel err %.2e, %.1f s", double(rows.size()),
                                      worst, elapsed)};
}

Outcome amil_properties() {
    ModelConfig cfg;
    M3NetParams<double> p(cfg);
    p.initialize(77);
    const nn::Vector<double> w = p.attention_w.value.col(0);
    std::mt19937_64 rng(78);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    bool padded_zero = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const int real = 1 + static_cast<int>(rng() % 5);
        nn::Matrix<double> bag = nn::Matrix<double>::Zero(5, cfg.image_feature_width);
        for (int k = 0; k < real; ++k)
            for (int c = 0; c < cfg.image_feature_width; ++c) bag(k, c) = 2.0 * g(rng);
        const auto r = amil_pool<double>(bag, real, p.attention_v.value, w);

        worst = std::max(worst, std::abs(r.weights.sum() - 1.0));
        if (r.weights.minCoeff() < 0.0) worst = 1.0;
        for (int k = real; k < 5; ++k) padded_zero = padded_zero && r.weights(k) == 0.0;

        std::vector<int> perm(static_cast<std::size_t>(real));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        nn::Matrix<double> permuted = bag;
        for (int k = 0; k < real; ++k) permuted.row(k) = bag.row(perm[static_cast<std::size_t>(k)]);
        const auto rp = amil_pool<double>(permuted, real, p.attention_v.value, w);
        for (int k = 0; k < real; ++k)
            worst = std::max(worst, std::abs(rp.weights(k) - r.weights(perm[static_cast<std::size_t>(k)])));
        worst = std::max(worst, (rp.pooled - r.pooled).cwiseAbs().maxCoeff());

        const int extra = 1 + static_cast<int>(rng() % 6);
        nn::Matrix<double> padded = nn::Matrix<double>::Zero(5 + extra, cfg.image_feature_width);
        padded.topRows(5) = bag;
        const auto rz = amil_pool<double>(padded, real, p.attention_v.value, w);
        worst = std::max(worst, (rz.pooled - r.pooled).cwiseAbs().maxCoeff());
        worst = std::max(worst, (rz.weights.head(5) - r.weights).cwiseAbs().maxCoeff());
        padded_zero = padded_zero && rz.weights.tail(extra).isZero(0);
    }
    return {padded_zero && worst <= 1e-12, fmt("1000 bags, max deviation %.2e, padded weights exactly 0: ", worst) +
                                                (padded_zero ? "yes" : "no")};
}

Outcome auc_oracle() {
    std::mt19937_64 rng(3);
    int mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + rng() % 199;
        std::vector<double> s(n);
        std::vector<int> y(n);
        const int levels = 2 + static_cast<int>(rng() % 20);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % static_cast<std::uint64_t>(levels)) / levels;
            y[i] = static_cast<int>(rng() % 2);
        }
        y[0] = 0;
        y[1] = 1;
        if (stats::auc(std::span<const double>(s), std::span<const int>(y)) != oracle::pair_count_auc(s, y)) ++mismatches;
    }
    const std::vector<double> ws{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> wy{0, 0, 1, 1};
    const double worked = stats::auc(std::span<const double>(ws), std::span<const int>(wy));
    return {mismatches == 0 && worked == 0.75, fmt("%.0f/500 mismatches, worked example %.4f", mismatches, worked)};
}

bool same(const std::vector<nn::ParamTensor<double>*>& a, const std::vector<nn::ParamTensor<double>*>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i]->value == b[i]->value)) return false;
    return true;
}

Outcome path_isolation() {
    bool ok = true;
    std::string detail;
    for (const bool image_side : {true, false}) {
        const auto cohort = image_side ? synth_cohort(200, 0.0, 1.0, 0.0, 5) : synth_cohort(200, 0.0, 0.0, 1.0, 6);
        const data::Cohort tr(cohort.begin(), cohort.begin() + 150), va(cohort.begin() + 150, cohort.end());
        training::TrainConfig cfg;  // 100 epochs
        auto trained = training::train(tr, va, cfg).model.params;
        M3NetParams<double> init(cfg.model);
        init.initialize(derive_seed(cfg.seed, 0));
        const bool other = image_side ? same(trained.bio_path_parameters(), init.bio_path_parameters())
                                      : same(trained.image_path_parameters(), init.image_path_parameters());
        const bool combined = same(trained.combined_path_parameters(), init.combined_path_parameters());
        const bool moved = image_side ? !same(trained.image_path_parameters(), init.image_path_parameters())
                                      : !same(trained.bio_path_parameters(), init.bio_path_parameters());
        ok = ok && other && combined && moved;
        detail += std::string(image_side ? "image-only: " : "; biomarker-only: ") +
                  (other && combined ? "untouched paths bit-identical" : "untouched paths CHANGED") +
                  (moved ? ", trained path moved" : ", trained path static");
    }
    return {ok, detail};
}

double cv_seconds = -1.0;  // first full cross-validation, reused by criterion 10

Outcome desk_scale_ordering() {
    const auto cohort = data::generate_synthetic_cohort({});
    std::vector<double> full_aucs, base_aucs, p1_aucs, p2_aucs, pvals;
    for (std::uint64_t master = 1; master <= 5; ++master) {
        training::TrainConfig tc;
        tc.seed = master * 31 + 5;
        training::ExperimentOptions eo;
        eo.split_seed = master * 17 + 3;
        const auto t0 = Clock::now();
        const auto full = training::cross_validate(cohort, tc, eo);
        if (cv_seconds < 0) cv_seconds = seconds_since(t0);
        const auto base = training::run_baseline_complete_only(cohort, tc, eo);
        full_aucs.push_back(full.targets.at(training::Target::Combined).mean);
        p1_aucs.push_back(full.targets.at(training::Target::Image).mean);
        p2_aucs.push_back(full.targets.at(training::Target::Biomarker).mean);
        base_aucs.push_back(base.targets.at(training::Target::Combined).mean);
        pvals.push_back(full.p_values.at("combined_vs_image"));
        std::printf("  seed %llu: M3Net1 %.3f  baseline %.3f  p1 %.3f  p2 %.3f  p(combined vs image) %.4f\n",
                    static_cast<unsigned long long>(master), full_aucs.back(), base_aucs.back(), p1_aucs.back(),
                    p2_aucs.back(), pvals.back());
        std::fflush(stdout);
    }
    const double m = median(full_aucs), b = median(base_aucs), s = std::max(median(p1_aucs), median(p2_aucs));
    const double p = median(pvals);
    return {m > b && b > s && p < 0.05,
            fmt("medians M3Net1 %.3f > baseline %.3f > best single path %.3f; median p %.4f", m, b, s, p)};
}

Outcome lr_schedule() {
    const nn::LrSchedule s;
    const double expected[] = {0.01, 0.002, 0.0004, 0.00008};
    bool ok = true;
    for (int e = 0; e < 100; ++e) {
        const int band = e < 40 ? 0 : e < 60 ? 1 : e < 80 ? 2 : 3;
        ok = ok && nn::schedule_rate(s, e) == expected[band];
    }
    return {ok, fmt("epochs 0-99 checked, rates %g / %g / %g / %g", nn::schedule_rate(s, 0), nn::schedule_rate(s, 40),
                    nn::schedule_rate(s, 60), nn::schedule_rate(s, 80))};
}

Outcome splitting() {
    const auto cohort = data::generate_synthetic_cohort({});
    const auto split = data::kfold_split(cohort, 5, 7);
    auto sizes = split.sizes();
    std::sort(sizes.rbegin(), sizes.rend());
    bool ok = sizes == std::vector<std::size_t>{247, 247, 246, 246, 246};
    std::string detail = "fold sizes";
    for (auto s : split.sizes()) detail += " " + std::to_string(s);
    for (int f = 0; f < 5; ++f) {
        const auto rest = split.all_except(f);
        const auto tv = data::split_train_val(rest, derive_seed(7, 100 + static_cast<std::uint64_t>(f)));
        const auto want_train = static_cast<std::size_t>(std::floor(0.75 * static_cast<double>(rest.size()) + 0.5));
        ok = ok && tv.train.size() == want_train && tv.validation.size() == rest.size() - want_train;
        std::set<std::size_t> seen;
        for (const auto* part : {&tv.train, &tv.validation}) {
            for (auto i : *part) ok = ok && seen.insert(i).second;
        }
        for (auto i : split.fold(f)) ok = ok && seen.insert(i).second;
        ok = ok && seen.size() == cohort.size();
        if (f == 0) detail += "; train/val " + std::to_string(tv.train.size()) + "/" + std::to_string(tv.validation.size());
    }
    return {ok, detail + "; roles disjoint"};
}

Outcome statistics_sanity() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    stats::ScoreSet a, b, perfect;
    for (int i = 0; i < 200; ++i) {
        const int y = i % 2;
        a.ids.push_back("s" + std::to_string(i));
        a.labels.push_back(y);
        a.scores.push_back(y + g(rng));
        b.scores.push_back(0.6 * y + g(rng));
    }
    b.ids = a.ids;
    b.labels = a.labels;
    perfect = a;
    for (int i = 0; i < 200; ++i) perfect.scores[static_cast<std::size_t>(i)] = perfect.labels[static_cast<std::size_t>(i)] + 0.1 * (i % 7);

    const bool self = stats::bootstrap_pvalue(a, a) == 1.0;
    const bool symmetric = stats::bootstrap_pvalue(a, b) == stats::bootstrap_pvalue(b, a);
    const auto pc = stats::bootstrap_ci(perfect);
    const bool perfect_ci = pc.ci_low == 1.0 && pc.ci_high == 1.0;
    bool jobs_identical = true;
    const auto ref_ci = stats::bootstrap_ci(a);
    const double ref_p = stats::bootstrap_pvalue(a, b);
    for (int jobs : {2, 3, 8}) {
        stats::BootstrapOptions o;
        o.jobs = jobs;
        const auto ci = stats::bootstrap_ci(a, o);
        jobs_identical = jobs_identical && ci.ci_low == ref_ci.ci_low && ci.ci_high == ref_ci.ci_high &&
                         stats::bootstrap_pvalue(a, b, o) == ref_p;
    }
    return {self && symmetric && perfect_ci && jobs_identical,
            std::string("p(A,A)=1: ") + (self ? "yes" : "no") + ", symmetric: " + (symmetric ? "yes" : "no") +
                ", perfect CI [1,1]: " + (perfect_ci ? "yes" : "no") +
                ", identical across jobs 1/2/3/8: " + (jobs_identical ? "yes" : "no")};
}

Outcome serialization() {
    const auto cohort = synth_cohort(200, 0.4, 0.4, 0.2, 12);
    const data::Cohort tr(cohort.begin(), cohort.begin() + 150), va(cohort.begin() + 150, cohort.end());
    training::TrainConfig cfg;
    cfg.epochs = 3;
    const auto model = training::train(tr, va, cfg).model;
    const auto path = std::filesystem::temp_directory_path() / "m3net_acceptance_model.json";
    save_model(path, model);
    const auto loaded = load_model(path);
    std::filesystem::remove(path);

    const auto subjects = synth_cohort(100, 0.4, 0.4, 0.2, 13);
    int mismatches = 0;
    auto eq = [](const std::optional<double>& x, const std::optional<double>& y) { return x == y; };
    for (const auto& r : subjects) {
        const auto x = model.forward(r), y = loaded.forward(r);
        if (!eq(x.p1, y.p1) || !eq(x.p2, y.p2) || !eq(x.p_combined, y.p_combined) ||
            model.predict(r).risk != loaded.predict(r).risk)
            ++mismatches;
    }
    return {mismatches == 0, fmt("100 subjects, %.0f prediction mismatches", mismatches)};
}

Outcome runtime_budget() {
    if (cv_seconds < 0) {
        const auto t0 = Clock::now();
        training::cross_validate(data::generate_synthetic_cohort({}), {}, {});
        cv_seconds = seconds_since(t0);
    }
    return {cv_seconds < 600.0, fmt("full 5-fold CV, 100 epochs/fold: %.1f s", cv_seconds)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient fidelity", gradient_fidelity},
        {"AMIL properties", amil_properties},
        {"AUC oracle", auc_oracle},
        {"path isolation", path_isolation},
        {"desk-scale ordering", desk_scale_ordering},
        {"LR schedule", lr_schedule},
        {"splitting", splitting},
        {"statistics sanity", statistics_sanity},
        {"serialization", serialization},
        {"runtime budget", runtime_budget},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
