// memtutor CLI: pretrain priors, run seeded experiments, compare run
// directories, re-render plots, and self-check the numeric core.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "memtutor/memtutor.hpp"

namespace {

using namespace memtutor;

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_u64(const std::string& s) {
    size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used, 10);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad seed '" + s + "'");
    }
    if (used != s.size()) throw std::invalid_argument("bad seed '" + s + "'");
    return v;
}

// "0..4" (inclusive range) or "0,1,7"; combinations split on commas.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = ConfigMap::trim(tok);
        if (tok.empty()) throw std::invalid_argument("seeds: empty entry in '" + text + "'");
        const size_t dots = tok.find("..");
        if (dots == std::string::npos) {
            seeds.push_back(parse_u64(tok));
            continue;
        }
        const std::uint64_t lo = parse_u64(ConfigMap::trim(tok.substr(0, dots)));
        const std::uint64_t hi = parse_u64(ConfigMap::trim(tok.substr(dots + 2)));
        if (hi < lo) throw std::invalid_argument("seeds: empty range '" + tok + "'");
        for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
    }
    if (seeds.empty()) throw std::invalid_argument("seeds: none given");
    return seeds;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(seeds[i]);
    }
    return out;
}

int thread_cap(int jobs) {
    int cap = jobs;
    if (const char* env = std::getenv("MEMTUTOR_THREADS")) {
        const std::string text(env);
        long long v = 0;
        try {
            v = parse_int(text);
        } catch (const std::exception&) {
            throw std::invalid_argument("MEMTUTOR_THREADS: not an integer: '" + text + "'");
        }
        if (v < 1) throw std::invalid_argument("MEMTUTOR_THREADS must be >= 1");
        cap = std::min<long long>(cap, v);
    } else {
        const unsigned hw = std::thread::hardware_concurrency();
        cap = std::min<int>(cap, hw == 0 ? 1 : static_cast<int>(hw));
    }
    return std::max(1, cap);
}

ConfigMap build_config(const std::string& config_path, const std::vector<std::string>& sets,
                       const std::string& tutor_flag) {
    ConfigMap map;
    if (!config_path.empty()) map = ConfigMap::load(config_path);
    for (const auto& kv : sets) map.set_override(kv);
    if (!tutor_flag.empty()) map.set("tutor", tutor_flag);
    return map;
}

// Seeds are independent; MEMTUTOR_THREADS caps how many run at once.
std::vector<RunMetrics> run_all_seeds(const ExperimentConfig& cfg,
                                      const std::vector<std::uint64_t>& seeds) {
    std::vector<RunMetrics> out(seeds.size());
    std::atomic<size_t> cursor{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto work = [&] {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= seeds.size()) return;
            try {
                out[i] = run_experiment(cfg, seeds[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    const int threads = thread_cap(static_cast<int>(seeds.size()));
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

struct CurveGroup {
    std::string label;
    std::vector<double> mean;
    std::vector<double> std;
};

std::vector<CurveGroup> load_curve_csv(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty() || lines[0] != "session,tutor,mean,std")
        throw std::invalid_argument(path + ": not a curve file");
    std::vector<CurveGroup> groups;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> cells = split_csv_line(lines[i]);
        if (cells.size() != 4)
            throw std::invalid_argument(path + ": bad row '" + lines[i] + "'");
        CurveGroup* g = nullptr;
        for (auto& existing : groups)
            if (existing.label == cells[1]) g = &existing;
        if (!g) {
            groups.push_back({cells[1], {}, {}});
            g = &groups.back();
        }
        if (parse_int(cells[0]) != static_cast<long long>(g->mean.size()))
            throw std::invalid_argument(path + ": non-contiguous sessions for " + cells[1]);
        g->mean.push_back(parse_double(cells[2]));
        g->std.push_back(parse_double(cells[3]));
    }
    if (groups.empty()) throw std::invalid_argument(path + ": no data rows");
    return groups;
}

int cmd_pretrain(const std::string& config_path, const std::string& seeds_text,
                 const std::string& out_dir, const std::vector<std::string>& sets) {
    const ConfigMap map = build_config(config_path, sets, "");
    const std::uint64_t seed = parse_seeds(seeds_text)[0];
    const ExperimentConfig exp = materialize_config(map);
    const PretrainConfig pre = materialize_pretrain(map);
    const GeneratorConfig gen =
        config_detail::read_generator(map, "generator", GeneratorConfig{});

    const PretrainResult result =
        pretrain_priors(pre, exp.bank, exp.windows, exp.sensory, gen, seed);

    std::filesystem::create_directories(out_dir);
    const std::string priors_path = out_dir + "/priors.csv";
    const std::string params_path = out_dir + "/params.csv";
    result.priors.save(priors_path);
    save_param_set(result.initial, params_path);

    std::printf("pretrained on %d synthetic learners (seed %llu)\n", pre.population,
                static_cast<unsigned long long>(seed));
    std::printf("%-8s %12s %12s\n", "family", "mu", "sigma");
    for (ParamFamily f : kAllFamilies) {
        const FamilyPrior& p = result.priors.of(f);
        std::printf("%-8s %12.6f %12.6f\n", family_name(f), p.mu, p.sigma);
    }
    std::printf("priors:  %s\nparams:  %s\n", priors_path.c_str(), params_path.c_str());
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& tutor_flag,
            const std::string& seeds_text, const std::string& out_dir,
            const std::vector<std::string>& sets) {
    ConfigMap map = build_config(config_path, sets, tutor_flag);
    const std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);
    const ExperimentConfig cfg = materialize_config(map);
    cfg.validate();
    if (cfg.tutor == "rl" && !map.has("priors.file"))
        throw std::invalid_argument(
            "tutor 'rl' needs pretrained priors: run `memtutor pretrain --out <dir>` first, "
            "then pass --set priors.file=<dir>/priors.csv "
            "(and optionally --set params.file=<dir>/params.csv)");

    ConfigMap stamped = map;
    stamped.set("seeds", join_seeds(seeds));
    const std::string run_dir = out_dir + "/" + cfg.tutor + "-" + hex16(stamped.hash());
    std::filesystem::create_directories(run_dir);

    const std::vector<RunMetrics> runs = run_all_seeds(cfg, seeds);
    AggregateCurve agg;
    if (runs.size() >= 2) {
        agg = aggregate_seeds(runs);
    } else {
        agg.mean = runs[0].session_curve;
        agg.stddev.assign(agg.mean.size(), 0.0);
    }
    emit_outputs({TutorRuns{cfg.tutor, runs, agg}}, run_dir);
    write_file(run_dir + "/config.txt", stamped.canonical());

    std::printf("tutor %s, %zu seed(s): final-session mean recall %.6f (std %.6f)\n",
                cfg.tutor.c_str(), runs.size(), agg.mean.back(), agg.stddev.back());
    std::printf("run dir: %s\n", run_dir.c_str());
    return 0;
}

int cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.size() < 2)
        throw std::invalid_argument("compare: need at least 2 run directories");
    std::vector<CurveGroup> groups;
    std::vector<std::string> sources;
    for (const auto& dir : run_dirs) {
        const std::string path =
            std::filesystem::is_directory(dir) ? dir + "/curve.csv" : dir;
        if (!std::filesystem::exists(path))
            throw std::invalid_argument("compare: missing " + path);
        for (auto& g : load_curve_csv(path)) {
            groups.push_back(std::move(g));
            sources.push_back(dir);
        }
    }
    // Same tutor from several dirs: suffix with the load index to keep
    // legend entries distinct.
    for (size_t i = 0; i < groups.size(); ++i) {
        bool dup = false;
        for (size_t k = 0; k < groups.size(); ++k)
            if (k != i && groups[k].label == groups[i].label) dup = true;
        if (dup) groups[i].label += "#" + std::to_string(i);
    }

    std::filesystem::create_directories(out_dir);
    std::vector<PlotSeries> series;
    for (const auto& g : groups) series.push_back({g.label, g.mean, g.std});
    write_plot(series, "Session-averaged memory rate", "session", "memory rate",
               out_dir + "/compare.svg");

    std::string table = "tutor,final_mean,final_std,source\n";
    std::printf("%-14s %12s %12s  %s\n", "tutor", "final_mean", "final_std", "source");
    for (size_t i = 0; i < groups.size(); ++i) {
        const auto& g = groups[i];
        table += g.label + "," + format_g17(g.mean.back()) + "," + format_g17(g.std.back()) +
                 "," + sources[i] + "\n";
        std::printf("%-14s %12.6f %12.6f  %s\n", g.label.c_str(), g.mean.back(),
                    g.std.back(), sources[i].c_str());
    }
    write_file(out_dir + "/table.csv", table);
    std::printf("compare dir: %s\n", out_dir.c_str());
    return 0;
}

int cmd_plot(const std::string& input, const std::string& out_file) {
    const std::string path =
        std::filesystem::is_directory(input) ? input + "/curve.csv" : input;
    if (!std::filesystem::exists(path))
        throw std::invalid_argument("plot: missing " + path);
    const std::vector<CurveGroup> groups = load_curve_csv(path);
    std::vector<PlotSeries> series;
    for (const auto& g : groups) series.push_back({g.label, g.mean, g.std});
    std::string target = out_file;
    if (target.empty())
        target = (std::filesystem::path(path).parent_path() / "plot.svg").string();
    write_plot(series, "Session-averaged memory rate", "session", "memory rate", target);
    std::printf("plot: %s\n", target.c_str());
    return 0;
}

int cmd_selftest() {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    bool ok = true;
    auto report = [&](const char* name, bool pass, const std::string& detail = "") {
        std::printf("%-22s %s%s%s\n", name, pass ? "ok" : "FAIL", detail.empty() ? "" : "  ",
                    detail.c_str());
        ok = ok && pass;
    };

    {
        double worst = 0.0;
        for (int i = 0; i < 5; ++i) {
            const LossInstance in = make_loss_instance(1000 + i);
            worst = std::max(worst, loss_gradient_fd_mismatch(in));
        }
        report("loss gradient", worst <= 1e-4, "max rel err " + std::to_string(worst));
    }
    {
        bool pass = true;
        for (int i = 0; i < 200 && pass; ++i) pass = window_counts_agree(2000 + i);
        report("window counts", pass);
    }
    {
        std::string detail;
        report("leitner trace", leitner_trace_matches(&detail), detail);
    }
    {
        const BanditResult r = run_bandit(0);
        report("bandit ppo", r.converged,
               "p(best arm) " + std::to_string(r.p_arm0) + " after " +
                   std::to_string(r.iterations) + " iters");
    }

    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    std::printf("selftest %s in %.1f s\n", ok ? "passed" : "FAILED", secs);
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memtutor: spaced-repetition tutors over a DAS3H student model"};
    app.require_subcommand(1);

    std::string config_path, tutor_flag, seeds_text = "0", out_dir;
    std::vector<std::string> sets;
    std::vector<std::string> run_dirs;
    std::string plot_input, plot_out;

    CLI::App* pretrain = app.add_subcommand("pretrain", "fit priors on a synthetic population");
    pretrain->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
    pretrain->add_option("--seeds", seeds_text, "root seed (first entry used)");
    pretrain->add_option("--out", out_dir, "output directory")->default_str("out/pretrain");
    pretrain->add_option("--set", sets, "override key=value (repeatable)");

    CLI::App* run = app.add_subcommand("run", "run seeded experiments for one tutor");
    run->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
    run->add_option("--tutor", tutor_flag, "random|leitner|threshold|rl");
    run->add_option("--seeds", seeds_text, "e.g. 0..4 or 0,1,2")->required();
    run->add_option("--out", out_dir, "output root")->default_str("out");
    run->add_option("--set", sets, "override key=value (repeatable)");

    CLI::App* compare = app.add_subcommand("compare", "overlay curves from run directories");
    compare->add_option("dirs", run_dirs, "run directories")->expected(-2);
    compare->add_option("--out", out_dir, "output directory")->default_str("out/compare");

    CLI::App* plot = app.add_subcommand("plot", "re-render plot.svg from a curve.csv");
    plot->add_option("input", plot_input, "run directory or curve.csv")->required();
    plot->add_option("--out", plot_out, "output svg path");

    CLI::App* selftest = app.add_subcommand("selftest", "numeric core sanity checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (out_dir.empty()) {
            if (pretrain->parsed()) out_dir = "out/pretrain";
            else if (compare->parsed()) out_dir = "out/compare";
            else out_dir = "out";
        }
        if (pretrain->parsed()) return cmd_pretrain(config_path, seeds_text, out_dir, sets);
        if (run->parsed()) return cmd_run(config_path, tutor_flag, seeds_text, out_dir, sets);
        if (compare->parsed()) return cmd_compare(run_dirs, out_dir);
        if (plot->parsed()) return cmd_plot(plot_input, plot_out);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        std::cerr << "run `memtutor --help` or `memtutor <command> --help` for usage\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
