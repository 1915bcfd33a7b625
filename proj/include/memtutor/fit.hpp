#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "memtutor/adam.hpp"
#include "memtutor/loss.hpp"
#include "memtutor/priors.hpp"

namespace memtutor {

// Linear sawtooth: full rate at the start of each cycle, decayed toward zero
// across `cycle` positions, then reset.
inline double sawtooth_lr(double base, long pos, long cycle) {
    if (cycle <= 0) return base;
    const long p = pos % cycle;
    return base * (1.0 - static_cast<double>(p) / static_cast<double>(cycle));
}

// Mutable state of the continual inner-model fit: current parameters, the
// previous session's parameters anchoring the L1 constraint, optimizer
// moments, and a session counter driving the learning-rate schedule.
struct FitState {
    ParamSet params;
    ParamSet previous;
    Adam<double> opt;
    long sessions_fit = 0;
    double last_loss = std::numeric_limits<double>::quiet_NaN();

    static FitState init(const ParamSet& initial) {
        FitState s;
        s.params = initial;
        s.previous = initial;
        s.opt = Adam<double>(initial.size());
        return s;
    }
};

// One session of continual fitting: anchor the L1 term at the pre-session
// parameters, then run `epochs` full-batch optimizer steps. The learning rate
// decays linearly across a two-session cycle (epoch granularity) and resets.
inline FitState fit_session(const FitState& state, const FeatureCache& cache,
                            const PriorDistributions& priors, const LossConfig& cfg,
                            int epochs = 10, double lr = 1e-2) {
    if (epochs < 0) throw std::invalid_argument("fit_session: epochs must be >= 0");
    if (!(lr >= 0.0) || !std::isfinite(lr))
        throw std::invalid_argument("fit_session: lr must be finite and >= 0");
    cfg.validate();
    priors.validate();

    FitState next = state;
    next.previous = state.params;
    if (epochs == 0) {
        ++next.sessions_fit;
        return next;
    }

    const long cycle = 2L * epochs;
    const long cycle_base = (state.sessions_fit % 2) * epochs;
    Eigen::VectorXd flat = next.params.flatten();
    for (int e = 0; e < epochs; ++e) {
        const double loss = total_loss(next.params, cache, priors, next.previous, cfg);
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "fit_session: non-finite loss " << loss << " at session " << state.sessions_fit
                << ", epoch " << e;
            throw std::runtime_error(msg.str());
        }
        next.last_loss = loss;
        const ParamSet grad = loss_gradient(next.params, cache, priors, next.previous, cfg);
        if (!grad.all_finite()) {
            std::ostringstream msg;
            msg << "fit_session: non-finite gradient at session " << state.sessions_fit
                << ", epoch " << e;
            throw std::runtime_error(msg.str());
        }
        const Eigen::VectorXd g = grad.flatten();
        next.opt.step(flat, g, sawtooth_lr(lr, cycle_base + e, cycle));
        next.params.unflatten(flat);
    }
    next.last_loss = total_loss(next.params, cache, priors, next.previous, cfg);
    if (!std::isfinite(next.last_loss))
        throw std::runtime_error("fit_session: non-finite loss after final epoch");
    ++next.sessions_fit;
    return next;
}

inline FitState fit_session(const FitState& state, const History& history, int learner,
                            const ItemBank& bank, const TimeWindows& windows,
                            const SensoryMemoryConstants& sensory, const PriorDistributions& priors,
                            const LossConfig& cfg, int epochs = 10, double lr = 1e-2) {
    return fit_session(state, FeatureCache::build(history, learner, bank, windows, sensory),
                       priors, cfg, epochs, lr);
}

}  // namespace memtutor
