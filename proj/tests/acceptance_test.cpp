// End-to-end acceptance gate: one line per criterion, exit 0 only if every
// gated criterion holds. The tutor comparison (criteria 5-7) dominates the
// runtime; everything is sequential and seeded, so reruns are bit-stable.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "memtutor/memtutor.hpp"

using namespace memtutor;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int n, const std::string& what, bool pass, const std::string& detail) {
    if (!pass) ++g_failures;
    std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", n, what.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --- 1: analytic vs finite-difference gradients, per family -----------------

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    std::array<double, kFamilyCount> worst{};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const LossInstance in = make_loss_instance(900 + seed);
        const ParamSet analytic =
            loss_gradient(in.params, in.cache, in.priors, in.previous, in.cfg);
        auto fn = [&](const Eigen::VectorXd& flat) {
            ParamSet p = in.params.zeros_like();
            p.unflatten(flat);
            return total_loss(p, in.cache, in.priors, in.previous, in.cfg);
        };
        const Eigen::VectorXd fd =
            finite_difference_gradient(fn, in.params.flatten(), 1e-5);
        const Eigen::VectorXd an = analytic.flatten();
        for (ParamFamily f : kAllFamilies) {
            const auto off = in.params.family_offset(f);
            const auto len = in.params.family_size(f);
            const double m = gradient_mismatch(an.segment(off, len), fd.segment(off, len));
            auto& w = worst[static_cast<int>(f)];
            w = std::max(w, m);
        }
    }
    const double elapsed = seconds_since(t0);
    double overall = 0.0;
    std::string per;
    for (ParamFamily f : kAllFamilies) {
        const double w = worst[static_cast<int>(f)];
        overall = std::max(overall, w);
        per += std::string(family_name(f)) + "=" + fmt(w) + " ";
    }
    const bool pass = overall <= 1e-4 && elapsed < 60.0;
    report(1, "gradient oracle (20 instances/family, eps=1e-5)", pass,
           "worst rel err " + per + "in " + fmt(elapsed) + "s");
}

// --- 2: exact closed forms ---------------------------------------------------

void criterion_closed_forms() {
    SensoryMemoryConstants sensory;
    const bool a = inner_recall(0.5, 0.0, sensory) == 1.0;

    const ItemBank bank = ItemBank::uniform_mod(4, 2);
    const TimeWindows windows = TimeWindows::standard();
    MemoryModel model(bank, windows, ParamSet(4, 2, windows.count()), sensory);
    const bool b = model.recall(0, 1000) == 0.5;

    PriorDistributions priors;
    for (ParamFamily f : kAllFamilies) priors.of(f) = {0.25, 0.5};
    ParamSet at_mean(4, 2, windows.count());
    at_mean.alpha = 0.25;
    at_mean.delta.fill(0.25);
    at_mean.beta.fill(0.25);
    at_mean.theta.fill(0.25);
    at_mean.phi.fill(0.25);
    bool c = true;
    for (double v : loss_dist(at_mean, priors)) c = c && v == 0.0;

    const bool d = reward(std::vector<double>(30, 1.0)) == 0.0;

    const bool pass = a && b && c && d;
    report(2, "closed forms are exact", pass,
           std::string("inner_recall(0.5,0)=1:") + (a ? "y" : "n") +
               " das3h(zero,empty)=0.5:" + (b ? "y" : "n") + " loss_dist(mu)=0:" +
               (c ? "y" : "n") + " reward(all 1)=0:" + (d ? "y" : "n"));
}

// --- 3: incremental window counts vs brute force -----------------------------

void criterion_window_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed)
        if (!window_counts_agree(seed, 500)) ++mismatches;
    report(3, "window-count oracle (1000 histories)", mismatches == 0,
           std::to_string(mismatches) + " mismatches in " + fmt(seconds_since(t0)) + "s");
}

// --- 4: bandit convergence ----------------------------------------------------

void criterion_bandit() {
    const auto t0 = std::chrono::steady_clock::now();
    int converged = 0;
    std::string per;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const BanditResult r = run_bandit(seed);
        if (r.converged) ++converged;
        per += "s" + std::to_string(seed) + ":" + (r.converged ? "" : "NO ") +
               fmt(r.p_arm0) + "@" + std::to_string(r.iterations) + " ";
    }
    const double elapsed = seconds_since(t0);
    const bool pass = converged == 5 && elapsed < 300.0;
    report(4, "bandit policy > 0.95 on 5/5 seeds", pass,
           per + "in " + fmt(elapsed) + "s");
}

// --- 5-8: the full tutor comparison ------------------------------------------

struct ComparisonOutcome {
    std::map<std::string, std::vector<RunMetrics>> runs;
    std::map<std::string, AggregateCurve> agg;
    double elapsed = 0.0;
};

ComparisonOutcome run_comparison(const ExperimentConfig& base,
                                 const std::vector<std::uint64_t>& seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    ComparisonOutcome out;
    for (const std::string tutor : {"random", "leitner", "threshold", "rl"}) {
        ExperimentConfig cfg = base;
        cfg.tutor = tutor;
        std::vector<RunMetrics> runs;
        for (std::uint64_t seed : seeds) runs.push_back(run_experiment(cfg, seed));
        out.agg[tutor] = aggregate_seeds(runs);
        out.runs[tutor] = std::move(runs);
    }
    out.elapsed = seconds_since(t0);
    return out;
}

void criterion_retention(const ComparisonOutcome& cmp) {
    bool pass = true;
    std::string per;
    for (const auto& [tutor, agg] : cmp.agg) {
        const double first = agg.mean.front(), last = agg.mean.back();
        if (!(last > first)) pass = false;
        per += tutor + ":" + fmt(first) + "->" + fmt(last) + " ";
    }
    report(5, "mean retention rises for every tutor", pass, per);
}

void criterion_rl_ordering(const ComparisonOutcome& cmp) {
    const double rl = cmp.agg.at("rl").mean.back();
    const double random = cmp.agg.at("random").mean.back();
    const bool close = rl >= random - 0.02;
    const bool timely = cmp.elapsed < 3600.0;
    report(6, "rl final recall within 0.02 of random (desk scale)", close && timely,
           "rl " + fmt(rl) + " vs random " + fmt(random) + " (gap " + fmt(rl - random) +
               "), comparison took " + fmt(cmp.elapsed) + "s");
}

void criterion_threshold_reported(const ComparisonOutcome& cmp) {
    const bool present = cmp.agg.count("threshold") == 1;
    std::string table = "final means: ";
    for (const char* t : {"random", "leitner", "threshold", "rl"})
        table += std::string(t) + "=" +
                 (cmp.agg.count(t) ? fmt(cmp.agg.at(t).mean.back()) : "absent") + " ";
    report(7, "threshold tutor appears in the comparison table", present, table);
}

void criterion_determinism(const ExperimentConfig& base) {
    const std::string a = "/tmp/memtutor_acceptance/a";
    const std::string b = "/tmp/memtutor_acceptance/b";
    fs::remove_all("/tmp/memtutor_acceptance");
    fs::create_directories(a);
    fs::create_directories(b);
    ExperimentConfig cfg = base;
    cfg.tutor = "leitner";
    for (const std::string& dir : {a, b}) {
        std::vector<RunMetrics> runs;
        for (std::uint64_t seed : {0ull, 1ull}) runs.push_back(run_experiment(cfg, seed));
        TutorRuns group{cfg.tutor, runs, aggregate_seeds(runs)};
        emit_outputs({group}, dir);
    }
    const bool curves = read_file(a + "/curve.csv") == read_file(b + "/curve.csv");
    const bool events = read_file(a + "/events.csv") == read_file(b + "/events.csv");
    report(8, "identical rerun produces byte-identical CSVs", curves && events,
           std::string("curve.csv ") + (curves ? "match" : "DIFFER") + ", events.csv " +
               (events ? "match" : "DIFFER"));
}

void criterion_leitner_trace() {
    std::string detail;
    const bool pass = leitner_trace_matches(&detail);
    report(9, "hand-derived leitner schedule reproduced", pass,
           pass ? "12/12 presentations match" : detail);
}

}  // namespace

int main() {
    criterion_gradients();
    criterion_closed_forms();
    criterion_window_oracle();
    criterion_bandit();

    // Shared setup for the comparison criteria: synthetic-population priors,
    // then the default protocol for each tutor over five seeds.
    ConfigMap map;
    ExperimentConfig base = materialize_config(map);
    const PretrainConfig pc = materialize_pretrain(map);
    const PretrainResult pre =
        pretrain_priors(pc, base.bank, base.windows, base.sensory, base.student_gen, 12345);
    base.priors = pre.priors;
    base.initial_params = pre.initial;

    std::printf("... running the 4-tutor x 5-seed comparison (rl dominates; minutes)\n");
    std::fflush(stdout);
    const ComparisonOutcome cmp = run_comparison(base, {0, 1, 2, 3, 4});

    criterion_retention(cmp);
    criterion_rl_ordering(cmp);
    criterion_threshold_reported(cmp);
    criterion_determinism(base);
    criterion_leitner_trace();

    std::printf("%d of 9 criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
