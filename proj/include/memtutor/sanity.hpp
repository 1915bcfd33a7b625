#pragma once

#include <functional>
#include <string>
#include <vector>

#include "memtutor/loss.hpp"
#include "memtutor/ppo.hpp"
#include "memtutor/pretrain.hpp"
#include "memtutor/tutors.hpp"
#include "memtutor/window_counts.hpp"

namespace memtutor {

// Central finite differences of a scalar function over a flat vector.
inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x,
    double eps = 1e-5) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + eps;
        const double hi = fn(p);
        p[i] = keep - eps;
        const double lo = fn(p);
        p[i] = keep;
        g[i] = (hi - lo) / (2.0 * eps);
    }
    return g;
}

// Worst entry-wise relative disagreement; tiny entries fall back to an
// absolute scale so exact zeros do not divide by zero.
inline double gradient_mismatch(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                double floor = 1e-6) {
    if (a.size() != b.size()) throw std::invalid_argument("gradient_mismatch: size");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double denom = std::max(std::max(std::abs(a[i]), std::abs(b[i])), floor);
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

// A randomized instance of the full fitting problem, used by the gradient
// oracle and the optimizer tests.
struct LossInstance {
    ItemBank bank;
    TimeWindows windows;
    SensoryMemoryConstants sensory;
    FeatureCache cache;
    ParamSet params;
    ParamSet previous;
    PriorDistributions priors;
    LossConfig cfg;
};

inline LossInstance make_loss_instance(std::uint64_t seed, int items = 6, int skills = 3,
                                       int records = 25) {
    LossInstance in;
    Rng rng(seed);
    in.bank = ItemBank::uniform_mod(items, skills);
    in.windows = TimeWindows::standard();
    History history;
    std::int64_t t = 1000;
    for (int i = 0; i < records; ++i) {
        InteractionRecord rec;
        rec.learner = 0;
        rec.item = static_cast<int>(rng.uniform_int(items));
        t += 60 + static_cast<std::int64_t>(rng.uniform_int(200000));
        rec.timestamp = t;
        rec.outcome = rng.bernoulli(0.5) ? 1 : 0;
        history.push_back(rec);
    }
    in.cache = FeatureCache::build(history, 0, in.bank, in.windows, in.sensory);
    const int W = in.windows.count();
    GeneratorConfig gen;
    in.params = gen.sample(items, skills, W, rng);
    in.previous = gen.sample(items, skills, W, rng);
    for (ParamFamily f : kAllFamilies)
        in.priors.of(f) = {rng.normal(0.0, 0.3), 0.3 + rng.uniform01()};
    in.cfg.lambda = 0.5;
    return in;
}

// Analytic-vs-numeric check of the total loss gradient on one instance.
inline double loss_gradient_fd_mismatch(const LossInstance& in, double eps = 1e-5) {
    const ParamSet analytic = loss_gradient(in.params, in.cache, in.priors, in.previous, in.cfg);
    auto fn = [&](const Eigen::VectorXd& flat) {
        ParamSet p = in.params.zeros_like();
        p.unflatten(flat);
        return total_loss(p, in.cache, in.priors, in.previous, in.cfg);
    };
    const Eigen::VectorXd fd = finite_difference_gradient(fn, in.params.flatten(), eps);
    return gradient_mismatch(analytic.flatten(), fd);
}

// Brute-force vs incremental window counting over one random history.
inline bool window_counts_agree(std::uint64_t seed, int max_events = 500) {
    Rng rng(seed);
    const int items = 2 + static_cast<int>(rng.uniform_int(8));
    const int skills = 1 + static_cast<int>(rng.uniform_int(items));
    const ItemBank bank = ItemBank::uniform_mod(items, skills);
    const TimeWindows windows = TimeWindows::standard();
    const int events = 1 + static_cast<int>(rng.uniform_int(max_events));
    History history;
    WindowCounterTable table(bank, 0);
    std::int64_t t = 0;
    for (int i = 0; i < events; ++i) {
        InteractionRecord rec;
        rec.learner = 0;
        rec.item = static_cast<int>(rng.uniform_int(items));
        t += 1 + static_cast<std::int64_t>(rng.uniform_int(400000));
        rec.timestamp = t;
        rec.outcome = rng.bernoulli(0.6) ? 1 : 0;
        history.push_back(rec);
        table.observe(rec, bank);
        const std::int64_t now = t + 1 + static_cast<std::int64_t>(rng.uniform_int(100000));
        for (int k = 0; k < skills; ++k) {
            const WindowCounts naive = count_windows(history, bank, 0, k, now, windows);
            const WindowCounts fast = table.counts(k, now, windows);
            if (naive.attempts != fast.attempts || naive.correct != fast.correct) return false;
        }
    }
    return true;
}

// Hand-derived 3-item, 4-session schedule with scripted outcomes. Walks the
// priority rules (due/lowest-box/least-recent/lowest-id), promotion with the
// new box's interval, demotion, and the nothing-due fallback.
inline bool leitner_trace_matches(std::string* detail = nullptr) {
    LeitnerState st = LeitnerState::init(3);
    const std::vector<int> expected = {0, 1, 2, 1, 0, 2, 2, 1, 2, 0, 0, 0};
    const std::vector<int> outcomes = {1, 0, 1, 1, 1, 0, 1, 1, 1, 0, 0, 1};
    int p = 0;
    for (int s = 0; s < 4; ++s)
        for (int i = 0; i < 3; ++i, ++p) {
            const int item = leitner_tutor_next(st, s);
            if (item != expected[p]) {
                if (detail)
                    *detail = "presentation " + std::to_string(p) + ": got item " +
                              std::to_string(item) + ", expected " + std::to_string(expected[p]);
                return false;
            }
            leitner_observe(st, item, outcomes[p], s);
        }
    return true;
}

// Two-armed bandit exercised through the real trajectory/PPO machinery: arm 0
// always pays 1, arm 1 pays 0, one step per episode, constant observation.
template <typename Scalar>
TrajectoryBatch<Scalar> collect_bandit(const PolicyNet<Scalar>& net, int steps, Rng& rng,
                                       double gamma, double lam) {
    using Vec = typename PolicyNet<Scalar>::Vec;
    using Mat = typename PolicyNet<Scalar>::Mat;
    TrajectoryBatch<Scalar> batch;
    batch.chunk = 1;
    batch.worker_len = steps;
    batch.obs = Mat::Zero(net.in, steps);
    batch.hidden0 = Mat::Zero(net.hidden, steps);
    std::vector<double> rewards, values;
    std::vector<char> dones;
    for (int t = 0; t < steps; ++t) {
        Vec h = Vec::Zero(net.hidden);
        const auto out = policy_forward(net, Vec(Vec::Zero(net.in)), h);
        const int a = sample_action(out.probs, rng);
        batch.action.push_back(a);
        batch.logp_old.push_back(std::log(static_cast<double>(out.probs[a])));
        batch.episode_start.push_back(1);
        batch.done.push_back(1);
        rewards.push_back(a == 0 ? 1.0 : 0.0);
        values.push_back(static_cast<double>(out.value));
        dones.push_back(1);
    }
    const GaeOut gae = compute_gae(rewards, values, dones, 0.0, gamma, lam);
    batch.reward = rewards;
    batch.value = values;
    batch.advantage = gae.advantages;
    batch.ret = gae.returns;
    double mean = 0.0;
    for (double a : batch.advantage) mean += a;
    mean /= static_cast<double>(batch.advantage.size());
    double var = 0.0;
    for (double a : batch.advantage) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(batch.advantage.size()));
    for (double& a : batch.advantage) a = (a - mean) / (sd + 1e-8);
    batch.validate();
    return batch;
}

template <typename Scalar>
double bandit_arm0_probability(const PolicyNet<Scalar>& net) {
    using Vec = typename PolicyNet<Scalar>::Vec;
    Vec h = Vec::Zero(net.hidden);
    return static_cast<double>(policy_forward(net, Vec(Vec::Zero(net.in)), h).probs[0]);
}

struct BanditResult {
    bool converged = false;
    int iterations = 0;  // update iterations used
    double p_arm0 = 0.0;
};

inline BanditResult run_bandit(std::uint64_t seed, int max_iters = 50, int steps_per_iter = 200,
                               double lr = 0.02) {
    Rng init = Rng::stream(seed, "policy-init");
    PolicyNet<float> net = PolicyNet<float>::init(1, 8, 2, init);
    Adam<float> opt(net.param_count());
    Rng env_rng = Rng::stream(seed, "rollout-w0");
    Rng shuffle = Rng::stream(seed, "ppo-shuffle");
    PpoConfig cfg;
    cfg.minibatch = 50;
    cfg.lr = lr;
    BanditResult res;
    for (int it = 0; it < max_iters; ++it) {
        const auto batch = collect_bandit(net, steps_per_iter, env_rng, 0.85, 0.95);
        ppo_update(net, opt, batch, cfg, shuffle, lr);
        res.iterations = it + 1;
        res.p_arm0 = bandit_arm0_probability(net);
        if (res.p_arm0 > 0.95) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace memtutor
