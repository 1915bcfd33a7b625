#pragma once

#include <string>
#include <vector>

#include "memtutor/fit.hpp"
#include "memtutor/rng.hpp"
#include "memtutor/schedule.hpp"

namespace memtutor {

// Sampling distributions for ground-truth learner parameters. Shared between
// prior calibration and the simulated students, with independent instances so
// a distribution-shift study can diverge them.
struct GeneratorConfig {
    FamilyPrior alpha{0.0, 0.5};
    FamilyPrior delta{0.0, 1.0};
    FamilyPrior beta{0.0, 0.5};
    FamilyPrior theta{0.1, 0.1};
    FamilyPrior phi{0.1, 0.1};

    const FamilyPrior& of(ParamFamily f) const {
        switch (f) {
            case ParamFamily::alpha: return alpha;
            case ParamFamily::delta: return delta;
            case ParamFamily::beta: return beta;
            case ParamFamily::theta: return theta;
            default: return phi;
        }
    }

    void validate() const {
        for (ParamFamily f : kAllFamilies)
            if (!(of(f).sigma > 0.0))
                throw std::invalid_argument("GeneratorConfig: sigma must be positive");
    }

    ParamSet sample(int items, int skills, int windows, Rng& rng) const {
        validate();
        ParamSet p(items, skills, windows);
        p.alpha = alpha.mu + alpha.sigma * rng.normal();
        for (Eigen::Index i = 0; i < p.delta.size(); ++i)
            p.delta[i] = delta.mu + delta.sigma * rng.normal();
        for (Eigen::Index i = 0; i < p.beta.size(); ++i)
            p.beta[i] = beta.mu + beta.sigma * rng.normal();
        for (Eigen::Index i = 0; i < p.theta.size(); ++i)
            p.theta.data()[i] = theta.mu + theta.sigma * rng.normal();
        for (Eigen::Index i = 0; i < p.phi.size(); ++i)
            p.phi.data()[i] = phi.mu + phi.sigma * rng.normal();
        return p;
    }
};

struct PretrainConfig {
    int population = 40;
    SessionSchedule schedule;  // defaults to the standard 15-day protocol
    int fit_epochs = 150;
    double fit_lr = 0.05;
};

struct PretrainResult {
    PriorDistributions priors;
    ParamSet initial;
};

// Simulates one learner studying uniformly random items over the schedule,
// answering from their ground-truth model.
inline History simulate_learner_history(const ParamSet& truth, int learner, const ItemBank& bank,
                                        const TimeWindows& windows,
                                        const SensoryMemoryConstants& sensory,
                                        const SessionSchedule& schedule, Rng& rng) {
    MemoryModel model(bank, windows, truth, sensory, learner);
    History history;
    const int J = bank.items;
    for (int s = 0; s < schedule.total_sessions(); ++s) {
        for (int i = 0; i < schedule.items_per_session; ++i) {
            InteractionRecord rec;
            rec.learner = learner;
            rec.item = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(J)));
            rec.timestamp = schedule.step_time(s, i);
            const double p = model.response_probability(rec.item, rec.timestamp);
            rec.outcome = rng.bernoulli(p) ? 1 : 0;
            model.observe(rec);
            history.push_back(rec);
        }
    }
    return history;
}

// Calibrates the parameter priors: samples a synthetic population, fits each
// learner's history by squared error alone, then pools the fitted entries per
// family into (mu, sigma). Also returns the model initialized at the means.
inline PretrainResult pretrain_priors(const PretrainConfig& cfg, const ItemBank& bank,
                                      const TimeWindows& windows,
                                      const SensoryMemoryConstants& sensory,
                                      const GeneratorConfig& gen, std::uint64_t seed) {
    if (cfg.population < 10)
        throw std::invalid_argument("pretrain_priors: population must be >= 10");
    cfg.schedule.validate();
    gen.validate();

    const int J = bank.items, K = bank.skills, W = windows.count();

    LossConfig mse_only;
    mse_only.c.fill(0.0);
    PriorDistributions unit;  // inert under c=0, but fit_session validates it

    std::vector<ParamSet> fitted;
    fitted.reserve(cfg.population);
    for (int l = 0; l < cfg.population; ++l) {
        Rng rng(stream_seed(seed, "pretrain-l" + std::to_string(l)));
        const ParamSet truth = gen.sample(J, K, W, rng);
        const History history =
            simulate_learner_history(truth, l, bank, windows, sensory, cfg.schedule, rng);
        FitState state = FitState::init(ParamSet(J, K, W));
        state = fit_session(state, FeatureCache::build(history, l, bank, windows, sensory), unit,
                            mse_only, cfg.fit_epochs, cfg.fit_lr);
        fitted.push_back(state.params);
    }

    PretrainResult out;
    for (ParamFamily f : kAllFamilies) {
        double sum = 0.0;
        long n = 0;
        for (const auto& p : fitted)
            detail::for_each_family_entry(p, f, [&](double v) {
                sum += v;
                ++n;
            });
        const double mu = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& p : fitted)
            detail::for_each_family_entry(p, f, [&](double v) { ss += (v - mu) * (v - mu); });
        const double sigma = std::sqrt(ss / static_cast<double>(n));
        out.priors.of(f) = {mu, sigma < 1e-3 ? 1e-3 : sigma};
    }
    out.initial = out.priors.mean_params(J, K, W);
    return out;
}

}  // namespace memtutor
