#pragma once

#include <memory>
#include <string>
#include <vector>

#include "memtutor/fit.hpp"
#include "memtutor/plot.hpp"
#include "memtutor/pretrain.hpp"
#include "memtutor/rl_tutor.hpp"
#include "memtutor/tutors.hpp"

namespace memtutor {

// Fully materialized run description: every knob the protocol needs, already
// parsed and validated. Built from the key-value config by the config layer.
struct ExperimentConfig {
    ItemBank bank = ItemBank::uniform_mod(30, 10);
    TimeWindows windows = TimeWindows::standard();
    SensoryMemoryConstants sensory;
    SessionSchedule schedule;
    GeneratorConfig student_gen;
    PriorDistributions priors;
    ParamSet initial_params;
    LossConfig loss;
    int fit_epochs = 10;
    double fit_lr = 1e-2;
    std::string tutor = "random";
    int leitner_boxes = 5;
    std::vector<std::int64_t> leitner_intervals = {1, 2, 4, 8, 16};
    double threshold_value = 0.9;
    RlConfig rl;

    void validate() const {
        bank.validate();
        windows.validate();
        sensory.validate();
        schedule.validate();
        student_gen.validate();
        priors.validate();
        loss.validate();
        if (!initial_params.same_shape(ParamSet(bank.items, bank.skills, windows.count())))
            throw std::invalid_argument("ExperimentConfig: initial parameter shape mismatch");
        if (fit_epochs < 0) throw std::invalid_argument("ExperimentConfig: fit_epochs < 0");
        if (!(fit_lr >= 0.0)) throw std::invalid_argument("ExperimentConfig: bad fit_lr");
        if (tutor != "random" && tutor != "leitner" && tutor != "threshold" && tutor != "rl")
            throw std::invalid_argument("ExperimentConfig: unknown tutor '" + tutor + "'");
        if (!(threshold_value > 0.0 && threshold_value < 1.0))
            throw std::invalid_argument("ExperimentConfig: threshold must be in (0,1)");
        if (tutor == "rl") rl.validate();
    }
};

// The simulated learner: frozen ground-truth parameters, answering through
// the full response path, with its own interaction memory.
class GroundTruthStudent {
public:
    GroundTruthStudent(const ItemBank& bank, const TimeWindows& windows, ParamSet truth,
                       const SensoryMemoryConstants& sensory)
        : model_(bank, windows, std::move(truth), sensory) {}

    int answer(int item, std::int64_t now, Rng& rng) {
        return rng.bernoulli(model_.response_probability(item, now)) ? 1 : 0;
    }
    void observe(const InteractionRecord& rec) { model_.observe(rec); }
    Eigen::VectorXd recall_all(std::int64_t now) const { return model_.recall_all(now); }
    const ParamSet& params() const { return model_.params(); }

private:
    MemoryModel model_;
};

inline std::unique_ptr<ITutor> make_tutor(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.tutor == "random")
        return std::make_unique<RandomTutor>(cfg.bank, Rng::stream(seed, "tutor"));
    if (cfg.tutor == "leitner")
        return std::make_unique<LeitnerTutor>(
            LeitnerState::init(cfg.bank.items, cfg.leitner_boxes, cfg.leitner_intervals));
    if (cfg.tutor == "threshold") return std::make_unique<ThresholdTutor>(cfg.threshold_value);
    if (cfg.tutor == "rl")
        return std::make_unique<RLTutor<float>>(cfg.bank, cfg.windows, cfg.sensory, cfg.schedule,
                                                cfg.rl, seed);
    throw std::invalid_argument("make_tutor: unknown tutor '" + cfg.tutor + "'");
}

// Everything observed in one seeded run. `recall` row t holds the ground
// truth recall of every item just after presentation t; the curve is the
// item average then the session average of those rows.
struct RunMetrics {
    std::uint64_t seed = 0;
    std::string tutor;
    bool privileged = false;
    int items_per_session = 0;
    Eigen::MatrixXd recall;             // steps x J
    std::vector<double> step_mean;      // item average per step
    std::vector<double> session_curve;  // session average of step means
    History events;
    std::vector<int> event_session;
};

// The session loop: fit the inner model on all history, let the tutor
// optimize, then present ten items with sampled ground-truth responses,
// recording the student's full recall vector after each presentation.
inline RunMetrics run_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int J = cfg.bank.items, K = cfg.bank.skills, W = cfg.windows.count();
    const int sessions = cfg.schedule.total_sessions();
    const int ips = cfg.schedule.items_per_session;

    Rng student_rng = Rng::stream(seed, "student");
    GroundTruthStudent student(cfg.bank, cfg.windows,
                               cfg.student_gen.sample(J, K, W, student_rng), cfg.sensory);
    std::unique_ptr<ITutor> tutor = make_tutor(cfg, seed);

    RunMetrics rm;
    rm.seed = seed;
    rm.tutor = tutor->name();
    rm.privileged = tutor->privileged();
    rm.items_per_session = ips;
    rm.recall.resize(cfg.schedule.total_steps(), J);
    rm.step_mean.reserve(cfg.schedule.total_steps());
    rm.session_curve.reserve(sessions);
    rm.events.reserve(cfg.schedule.total_steps());

    FitState state = FitState::init(cfg.initial_params);
    History history;

    for (int s = 0; s < sessions; ++s) {
        if (!history.empty())
            state = fit_session(state,
                                FeatureCache::build(history, 0, cfg.bank, cfg.windows, cfg.sensory),
                                cfg.priors, cfg.loss, cfg.fit_epochs, cfg.fit_lr);
        tutor->session_begin(s, state.params);
        double session_sum = 0.0;
        for (int i = 0; i < ips; ++i) {
            const std::int64_t now = cfg.schedule.step_time(s, i);
            std::vector<double> oracle;
            TutorContext ctx;
            ctx.session = s;
            ctx.step_in_session = i;
            ctx.now = now;
            if (tutor->privileged()) {
                const Eigen::VectorXd r = student.recall_all(now);
                oracle.assign(r.data(), r.data() + r.size());
                ctx.oracle_recall = &oracle;
            }
            const int item = tutor->next_item(ctx);
            if (item < 0 || item >= J) throw std::logic_error("run_experiment: tutor item range");
            InteractionRecord rec;
            rec.learner = 0;
            rec.item = item;
            rec.timestamp = now;
            rec.outcome = student.answer(item, now, student_rng);
            student.observe(rec);
            history.push_back(rec);
            tutor->observe(rec, s);

            const Eigen::VectorXd snap = student.recall_all(now + 1);
            const int row = s * ips + i;
            rm.recall.row(row) = snap.transpose();
            double mean = 0.0;
            for (int j = 0; j < J; ++j) mean += snap[j];
            mean /= static_cast<double>(J);
            rm.step_mean.push_back(mean);
            session_sum += mean;
            rm.events.push_back(rec);
            rm.event_session.push_back(s);
        }
        rm.session_curve.push_back(session_sum / static_cast<double>(ips));
    }
    return rm;
}

struct AggregateCurve {
    std::vector<double> mean;
    std::vector<double> stddev;  // population
};

inline AggregateCurve aggregate_seeds(const std::vector<RunMetrics>& runs) {
    if (runs.size() < 2) throw std::invalid_argument("aggregate_seeds: need at least 2 runs");
    const size_t n = runs[0].session_curve.size();
    for (const auto& r : runs)
        if (r.session_curve.size() != n)
            throw std::invalid_argument("aggregate_seeds: ragged curves");
    AggregateCurve out;
    out.mean.assign(n, 0.0);
    out.stddev.assign(n, 0.0);
    const double S = static_cast<double>(runs.size());
    for (size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (const auto& r : runs) m += r.session_curve[i];
        m /= S;
        double v = 0.0;
        for (const auto& r : runs)
            v += (r.session_curve[i] - m) * (r.session_curve[i] - m);
        out.mean[i] = m;
        out.stddev[i] = std::sqrt(v / S);
    }
    return out;
}

// One tutor's set of seeded runs plus their aggregate, ready for output.
struct TutorRuns {
    std::string tutor;
    std::vector<RunMetrics> runs;
    AggregateCurve aggregate;
};

// Writes curve.csv (session,tutor,mean,std), events.csv (the full logs, with
// the oracle-access flag and the step's item-averaged recall), and plot.svg.
inline void emit_outputs(const std::vector<TutorRuns>& groups, const std::string& dir) {
    if (groups.empty()) throw std::invalid_argument("emit_outputs: nothing to write");
    std::string curve = "session,tutor,mean,std\n";
    for (const auto& g : groups)
        for (size_t i = 0; i < g.aggregate.mean.size(); ++i)
            curve += std::to_string(i) + "," + g.tutor + "," + format_g17(g.aggregate.mean[i]) +
                     "," + format_g17(g.aggregate.stddev[i]) + "\n";
    write_file(dir + "/curve.csv", curve);

    std::string events = "seed,session,step,learner_id,item_id,timestamp,outcome,privileged,mean_recall\n";
    for (const auto& g : groups)
        for (const auto& r : g.runs) {
            const int ips = r.items_per_session;
            for (size_t e = 0; e < r.events.size(); ++e) {
                const auto& rec = r.events[e];
                events += std::to_string(r.seed) + "," + std::to_string(r.event_session[e]) + "," +
                          std::to_string(static_cast<int>(e) % ips) + "," +
                          std::to_string(rec.learner) + "," + std::to_string(rec.item) + "," +
                          std::to_string(rec.timestamp) + "," + std::to_string(rec.outcome) + "," +
                          (r.privileged ? "1" : "0") + "," + format_g17(r.step_mean[e]) + "\n";
            }
        }
    write_file(dir + "/events.csv", events);

    std::vector<PlotSeries> series;
    for (const auto& g : groups)
        series.push_back({g.tutor, g.aggregate.mean, g.aggregate.stddev});
    write_plot(series, "Session-averaged memory rate", "session", "memory rate",
               dir + "/plot.svg");
}

}  // namespace memtutor
