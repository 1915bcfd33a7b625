#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "memtutor/gae.hpp"
#include "memtutor/gru.hpp"
#include "memtutor/memory_model.hpp"
#include "memtutor/observation.hpp"
#include "memtutor/schedule.hpp"

namespace memtutor {

// Training environment: the frozen inner model plays the student. One episode
// is the whole scheduled study (every session, every step) starting from an
// empty history; only the interaction log evolves, never the parameters.
class InnerEnv {
public:
    InnerEnv(const ItemBank& bank, const TimeWindows& windows, const ParamSet& params,
             const SensoryMemoryConstants& sensory, const SessionSchedule& schedule)
        : model_(bank, windows, params, sensory), schedule_(schedule) {
        schedule_.validate();
    }

    void reset() {
        model_.reset();
        pos_ = 0;
        last_time_ = 0;
    }

    int steps_per_episode() const { return schedule_.total_steps(); }
    int position() const { return pos_; }
    const MemoryModel& model() const { return model_; }

    struct StepResult {
        int outcome = 0;
        double reward = 0.0;
        double dt = 1.0;  // seconds since the previous interaction of this episode
        bool done = false;
    };

    // Presents `item` at the scheduled time of the current step; the response
    // is sampled from the inner model and the reward is the mean log recall
    // over all items immediately after.
    StepResult step(int item, Rng& rng) {
        if (pos_ >= schedule_.total_steps()) throw std::logic_error("InnerEnv: episode over");
        const int ips = schedule_.items_per_session;
        const std::int64_t now = schedule_.step_time(pos_ / ips, pos_ % ips);
        StepResult res;
        res.dt = pos_ == 0 ? 1.0 : static_cast<double>(now - last_time_);
        const double p = model_.response_probability(item, now);
        res.outcome = rng.bernoulli(p) ? 1 : 0;
        InteractionRecord rec;
        rec.learner = 0;
        rec.item = item;
        rec.timestamp = now;
        rec.outcome = res.outcome;
        model_.observe(rec);
        res.reward = reward(model_.recall_all(now + 1));
        last_time_ = now;
        ++pos_;
        res.done = pos_ == schedule_.total_steps();
        return res;
    }

private:
    MemoryModel model_;
    SessionSchedule schedule_;
    int pos_ = 0;
    std::int64_t last_time_ = 0;
};

struct RolloutConfig {
    int horizon = 4000;
    int workers = 20;
    int chunk = 10;  // truncated-backprop sequence length
    double gamma = 0.85;
    double gae_lambda = 0.95;

    void validate() const {
        if (horizon < 1 || workers < 1 || chunk < 1)
            throw std::invalid_argument("RolloutConfig: sizes must be positive");
        if (horizon % workers != 0)
            throw std::invalid_argument("RolloutConfig: horizon must divide evenly over workers");
        if ((horizon / workers) % chunk != 0)
            throw std::invalid_argument("RolloutConfig: worker stream must be whole chunks");
    }
};

// One batch of experience: `horizon` steps stored worker-major (all of worker
// 0's stream, then worker 1's, ...), chopped into fixed-length chunks whose
// entry hidden states are snapshotted for truncated-backprop replay.
template <typename Scalar>
struct TrajectoryBatch {
    using Mat = typename PolicyNet<Scalar>::Mat;

    int chunk = 0;       // steps per chunk
    int worker_len = 0;  // steps per worker stream
    Mat obs;             // in x T
    std::vector<int> action;
    std::vector<double> logp_old;
    std::vector<double> reward;
    std::vector<double> value;
    std::vector<char> episode_start;  // step begins a fresh episode
    std::vector<char> done;           // step ends its episode
    Mat hidden0;                      // H x (T / chunk), state entering each chunk
    std::vector<double> advantage;    // normalized
    std::vector<double> ret;

    int steps() const { return static_cast<int>(action.size()); }
    int chunks() const { return steps() / chunk; }

    void validate() const {
        const size_t T = action.size();
        if (T == 0 || chunk <= 0 || worker_len <= 0) throw std::invalid_argument("batch: empty");
        if (static_cast<size_t>(obs.cols()) != T || logp_old.size() != T || reward.size() != T ||
            value.size() != T || episode_start.size() != T || done.size() != T ||
            advantage.size() != T || ret.size() != T)
            throw std::invalid_argument("batch: misaligned arrays");
        if (static_cast<int>(T) % chunk != 0 || static_cast<int>(T) % worker_len != 0)
            throw std::invalid_argument("batch: ragged chunks");
        if (hidden0.cols() != static_cast<Eigen::Index>(T) / chunk)
            throw std::invalid_argument("batch: hidden snapshots mismatch");
    }
};

// Samples an action index from a probability column.
template <typename Scalar>
int sample_action(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& probs, Rng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int a = 0; a < n; ++a) {
        acc += static_cast<double>(probs[a]);
        if (u < acc) return a;
    }
    return n - 1;
}

// Persistent rollout workers for one session's optimization: each owns a
// private copy of the inner model, its own rng stream, and its recurrent
// state, all of which carry over between successive collect() calls so
// episodes can span update iterations.
template <typename Scalar>
class RolloutSet {
public:
    using Vec = typename PolicyNet<Scalar>::Vec;
    using Mat = typename PolicyNet<Scalar>::Mat;

    RolloutSet(const ItemBank& bank, const TimeWindows& windows, const ParamSet& inner_params,
               const SensoryMemoryConstants& sensory, const SessionSchedule& schedule,
               const ProjectionMatrix& projection, const RolloutConfig& cfg, int hidden,
               std::uint64_t root_seed, int session)
        : cfg_(cfg), projection_(&projection), items_(bank.items), hidden_(hidden) {
        cfg_.validate();
        if (projection.items() != bank.items)
            throw std::invalid_argument("RolloutSet: projection built for a different bank");
        proj_hash_ = projection.hash();
        workers_.reserve(cfg_.workers);
        for (int w = 0; w < cfg_.workers; ++w) {
            const std::uint64_t ws = stream_seed(
                stream_seed(root_seed, "rollout-w" + std::to_string(w)),
                "s" + std::to_string(session));
            workers_.push_back(Worker{InnerEnv(bank, windows, inner_params, sensory, schedule),
                                      Rng(ws), Vec::Zero(hidden), Vec::Zero(0), true});
            workers_.back().env.reset();
        }
    }

    std::uint64_t projection_hash() const { return proj_hash_; }

    TrajectoryBatch<Scalar> collect(const PolicyNet<Scalar>& net) {
        if (projection_->hash() != proj_hash_)
            throw std::logic_error("RolloutSet: projection changed mid-run");
        if (net.hidden != hidden_ || net.actions != items_)
            throw std::invalid_argument("RolloutSet: network shape mismatch");
        const int stream_len = cfg_.horizon / cfg_.workers;
        const int in_dim = net.in;

        TrajectoryBatch<Scalar> batch;
        batch.chunk = cfg_.chunk;
        batch.worker_len = stream_len;
        batch.obs.resize(in_dim, cfg_.horizon);
        batch.hidden0.resize(hidden_, cfg_.horizon / cfg_.chunk);
        batch.action.reserve(cfg_.horizon);

        for (int w = 0; w < cfg_.workers; ++w) {
            Worker& wk = workers_[w];
            std::vector<double> rewards, values;
            std::vector<char> dones;
            rewards.reserve(stream_len), values.reserve(stream_len), dones.reserve(stream_len);
            for (int t = 0; t < stream_len; ++t) {
                const int s = w * stream_len + t;
                const bool fresh = wk.fresh;
                if (t % cfg_.chunk == 0) {
                    const int c = s / cfg_.chunk;
                    batch.hidden0.col(c) = fresh ? Vec::Zero(hidden_) : wk.hidden;
                }
                if (fresh) {
                    wk.hidden.setZero();
                    wk.env.reset();
                    wk.fresh = false;
                }
                Vec obs = fresh || wk.prev_obs.size() == 0 ? Vec::Zero(in_dim) : wk.prev_obs;
                const auto out = policy_forward(net, obs, wk.hidden);
                const int a = sample_action(out.probs, wk.rng);
                const auto sr = wk.env.step(a, wk.rng);
                batch.obs.col(s) = obs;
                batch.action.push_back(a);
                batch.logp_old.push_back(std::log(static_cast<double>(out.probs[a])));
                batch.episode_start.push_back(fresh ? 1 : 0);
                batch.done.push_back(sr.done ? 1 : 0);
                rewards.push_back(sr.reward);
                values.push_back(static_cast<double>(out.value));
                dones.push_back(sr.done ? 1 : 0);
                wk.prev_obs = build_observation(a, sr.outcome, sr.dt, items_, *projection_)
                                  .template cast<Scalar>();
                if (sr.done) wk.fresh = true;
            }
            // Bootstrap with the value of the upcoming state when the stream
            // stops mid-episode. Uses a scratch hidden copy; the worker's own
            // recurrent state is untouched.
            double boot = 0.0;
            if (!wk.fresh) {
                Vec h = wk.hidden;
                boot = static_cast<double>(policy_forward(net, Vec(wk.prev_obs), h).value);
            }
            const GaeOut gae =
                compute_gae(rewards, values, dones, boot, cfg_.gamma, cfg_.gae_lambda);
            batch.reward.insert(batch.reward.end(), rewards.begin(), rewards.end());
            batch.value.insert(batch.value.end(), values.begin(), values.end());
            batch.advantage.insert(batch.advantage.end(), gae.advantages.begin(),
                                   gae.advantages.end());
            batch.ret.insert(batch.ret.end(), gae.returns.begin(), gae.returns.end());
        }
        normalize_advantages(batch.advantage);
        batch.validate();
        return batch;
    }

private:
    struct Worker {
        InnerEnv env;
        Rng rng;
        Vec hidden;
        Vec prev_obs;
        bool fresh = true;  // next step starts a new episode
    };

    static void normalize_advantages(std::vector<double>& adv) {
        const double n = static_cast<double>(adv.size());
        double mean = 0.0;
        for (double a : adv) mean += a;
        mean /= n;
        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / n);
        for (double& a : adv) a = (a - mean) / (sd + 1e-8);
    }

    RolloutConfig cfg_;
    const ProjectionMatrix* projection_;
    int items_;
    int hidden_;
    std::uint64_t proj_hash_ = 0;
    std::vector<Worker> workers_;
};

}  // namespace memtutor
