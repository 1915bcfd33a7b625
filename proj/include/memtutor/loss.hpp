#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "memtutor/memory_model.hpp"
#include "memtutor/priors.hpp"

namespace memtutor {

// Weights of the constrained fitting loss: per-family coefficients c_m and the
// mix lambda between the distribution term and the previous-value term.
struct LossConfig {
    std::array<double, kFamilyCount> c = {1.0, 1.0, 1.0, 1.0, 1.0};
    double lambda = 0.5;

    void validate() const {
        for (double v : c)
            if (!(v >= 0.0)) throw std::invalid_argument("LossConfig: c_m must be >= 0");
        if (!(lambda >= 0.0 && lambda <= 1.0))
            throw std::invalid_argument("LossConfig: lambda must lie in [0,1]");
    }
};

// Everything about one record that the loss needs and that does not depend on
// the parameters: the window features of strictly earlier records and the gap
// to the preceding interaction. Computing these once makes a fitting epoch
// pure arithmetic.
struct RecordFeatures {
    int item = 0;
    int outcome = 0;
    double decay = 0.0;  // (1 + h*dt)^(-f); 0 when there is no preceding interaction
    std::vector<int> skill_ids;
    std::vector<std::vector<double>> ln1_correct;   // per skill, per window
    std::vector<std::vector<double>> ln1_attempts;  // per skill, per window
};

class FeatureCache {
public:
    static FeatureCache build(const History& history, int learner, const ItemBank& bank,
                              const TimeWindows& windows, const SensoryMemoryConstants& sensory) {
        FeatureCache cache;
        WindowCounterTable table(bank, learner);
        const int W = windows.count();
        for (const auto& rec : history) {
            if (rec.learner != learner) continue;
            RecordFeatures rf;
            rf.item = rec.item;
            rf.outcome = rec.outcome;
            if (!table.empty()) {
                if (rec.timestamp <= table.last_timestamp())
                    throw std::invalid_argument(
                        "FeatureCache: per-learner timestamps must be strictly increasing");
                const double dt =
                    static_cast<double>(rec.timestamp - table.last_timestamp()) / sensory.dt_unit;
                rf.decay = std::pow(1.0 + sensory.h * dt, -sensory.f);
            }
            rf.skill_ids = bank.kc_map.at(rec.item);
            for (int k : rf.skill_ids) {
                const auto wc = table.counts(k, rec.timestamp, windows);
                std::vector<double> lc(W), ln(W);
                for (int w = 0; w < W; ++w) {
                    lc[w] = std::log1p(static_cast<double>(wc.correct[w]));
                    ln[w] = std::log1p(static_cast<double>(wc.attempts[w]));
                }
                rf.ln1_correct.push_back(std::move(lc));
                rf.ln1_attempts.push_back(std::move(ln));
            }
            cache.records_.push_back(std::move(rf));
            table.observe(rec, bank);
        }
        return cache;
    }

    bool empty() const { return records_.empty(); }
    size_t size() const { return records_.size(); }
    const std::vector<RecordFeatures>& records() const { return records_; }

private:
    std::vector<RecordFeatures> records_;
};

// Predicted response probability of one record under the full model
// (sensory-memory correction over the DAS3H rate).
inline double predict_record(const ParamSet& params, const RecordFeatures& rf) {
    double logit = params.alpha - params.delta[rf.item];
    const int W = params.windows();
    for (size_t i = 0; i < rf.skill_ids.size(); ++i) {
        const int k = rf.skill_ids[i];
        logit += params.beta[k];
        for (int w = 0; w < W; ++w)
            logit += params.theta(k, w) * rf.ln1_correct[i][w] +
                     params.phi(k, w) * rf.ln1_attempts[i][w];
    }
    const double p_d = sigmoid(logit);
    return p_d + (1.0 - p_d) * rf.decay;
}

inline std::vector<double> predict_history(const ParamSet& params, const FeatureCache& cache) {
    std::vector<double> out;
    out.reserve(cache.size());
    for (const auto& rf : cache.records()) out.push_back(predict_record(params, rf));
    return out;
}

// Sum of squared response errors over the history.
inline double loss_mse(const ParamSet& params, const FeatureCache& cache) {
    if (cache.empty()) throw std::invalid_argument("loss_mse: history is empty");
    double sum = 0.0;
    for (const auto& rf : cache.records()) {
        const double e = static_cast<double>(rf.outcome) - predict_record(params, rf);
        sum += e * e;
    }
    return sum;
}

inline double loss_mse(const ParamSet& params, const History& history, int learner,
                       const ItemBank& bank, const TimeWindows& windows,
                       const SensoryMemoryConstants& sensory) {
    return loss_mse(params, FeatureCache::build(history, learner, bank, windows, sensory));
}

namespace detail {

template <typename Fn>
void for_each_family_entry(const ParamSet& p, ParamFamily f, Fn&& fn) {
    switch (f) {
        case ParamFamily::alpha:
            fn(p.alpha);
            break;
        case ParamFamily::delta:
            for (Eigen::Index i = 0; i < p.delta.size(); ++i) fn(p.delta[i]);
            break;
        case ParamFamily::beta:
            for (Eigen::Index i = 0; i < p.beta.size(); ++i) fn(p.beta[i]);
            break;
        case ParamFamily::theta:
            for (Eigen::Index i = 0; i < p.theta.size(); ++i) fn(p.theta.data()[i]);
            break;
        case ParamFamily::phi:
            for (Eigen::Index i = 0; i < p.phi.size(); ++i) fn(p.phi.data()[i]);
            break;
    }
}

template <typename Fn>
void for_each_family_entry(ParamSet& p, ParamFamily f, Fn&& fn) {
    switch (f) {
        case ParamFamily::alpha:
            fn(p.alpha);
            break;
        case ParamFamily::delta:
            for (Eigen::Index i = 0; i < p.delta.size(); ++i) fn(p.delta[i]);
            break;
        case ParamFamily::beta:
            for (Eigen::Index i = 0; i < p.beta.size(); ++i) fn(p.beta[i]);
            break;
        case ParamFamily::theta:
            for (Eigen::Index i = 0; i < p.theta.size(); ++i) fn(p.theta.data()[i]);
            break;
        case ParamFamily::phi:
            for (Eigen::Index i = 0; i < p.phi.size(); ++i) fn(p.phi.data()[i]);
            break;
    }
}

}  // namespace detail

// Distribution constraint per family: sum over entries of
// 1 - f_m(rho)/f_m(mu) = 1 - exp(-(rho - mu)^2 / (2 sigma^2)), each in [0,1).
inline std::array<double, kFamilyCount> loss_dist(const ParamSet& params,
                                                  const PriorDistributions& priors) {
    priors.validate();
    std::array<double, kFamilyCount> out{};
    for (ParamFamily f : kAllFamilies) {
        const auto& fp = priors.of(f);
        double sum = 0.0;
        detail::for_each_family_entry(params, f, [&](double rho) {
            const double z = (rho - fp.mu) / fp.sigma;
            sum += 1.0 - std::exp(-0.5 * z * z);
        });
        out[static_cast<int>(f)] = sum;
    }
    return out;
}

// Previous-value constraint per family: L1 distance to the last session's
// parameters.
inline std::array<double, kFamilyCount> loss_fix(const ParamSet& params,
                                                 const ParamSet& previous) {
    if (!params.same_shape(previous))
        throw std::invalid_argument("loss_fix: parameter shapes do not match");
    std::array<double, kFamilyCount> out{};
    const Eigen::VectorXd d = params.flatten() - previous.flatten();
    Eigen::Index at = 0;
    for (ParamFamily f : kAllFamilies) {
        const Eigen::Index n = params.family_size(f);
        out[static_cast<int>(f)] = d.segment(at, n).cwiseAbs().sum();
        at += n;
    }
    return out;
}

// L = L_MSE + sum_m c_m [ (1-lambda) L_m^DIST + lambda L_m^FIX ].
inline double total_loss(const ParamSet& params, const FeatureCache& cache,
                         const PriorDistributions& priors, const ParamSet& previous,
                         const LossConfig& cfg) {
    cfg.validate();
    double total = loss_mse(params, cache);
    const auto dist = loss_dist(params, priors);
    const auto fix = loss_fix(params, previous);
    for (int m = 0; m < kFamilyCount; ++m)
        total += cfg.c[m] * ((1.0 - cfg.lambda) * dist[m] + cfg.lambda * fix[m]);
    return total;
}

// Analytic gradient of total_loss with respect to every parameter entry.
// L1 subgradient convention: sign(0) = 0, which keeps rho = rho_prev a fixed
// point of the constraint term.
inline ParamSet loss_gradient(const ParamSet& params, const FeatureCache& cache,
                              const PriorDistributions& priors, const ParamSet& previous,
                              const LossConfig& cfg) {
    cfg.validate();
    priors.validate();
    if (!params.same_shape(previous))
        throw std::invalid_argument("loss_gradient: parameter shapes do not match");
    if (cache.empty()) throw std::invalid_argument("loss_gradient: history is empty");

    ParamSet grad = params.zeros_like();
    const int W = params.windows();

    // MSE part. p_o = p_D + (1 - p_D) g, so dp_o/dlogit = (1 - g) p_D (1 - p_D).
    for (const auto& rf : cache.records()) {
        double logit = params.alpha - params.delta[rf.item];
        for (size_t i = 0; i < rf.skill_ids.size(); ++i) {
            const int k = rf.skill_ids[i];
            logit += params.beta[k];
            for (int w = 0; w < W; ++w)
                logit += params.theta(k, w) * rf.ln1_correct[i][w] +
                         params.phi(k, w) * rf.ln1_attempts[i][w];
        }
        const double p_d = sigmoid(logit);
        const double p_o = p_d + (1.0 - p_d) * rf.decay;
        const double dlogit =
            2.0 * (p_o - static_cast<double>(rf.outcome)) * (1.0 - rf.decay) * p_d * (1.0 - p_d);
        grad.alpha += dlogit;
        grad.delta[rf.item] -= dlogit;
        for (size_t i = 0; i < rf.skill_ids.size(); ++i) {
            const int k = rf.skill_ids[i];
            grad.beta[k] += dlogit;
            for (int w = 0; w < W; ++w) {
                grad.theta(k, w) += dlogit * rf.ln1_correct[i][w];
                grad.phi(k, w) += dlogit * rf.ln1_attempts[i][w];
            }
        }
    }

    // Constraint parts, entry-wise per family.
    Eigen::VectorXd flat = grad.flatten();
    const Eigen::VectorXd rho = params.flatten();
    const Eigen::VectorXd rho_prev = previous.flatten();
    Eigen::Index at = 0;
    for (ParamFamily f : kAllFamilies) {
        const auto& fp = priors.of(f);
        const double cm = cfg.c[static_cast<int>(f)];
        const Eigen::Index n = params.family_size(f);
        for (Eigen::Index i = at; i < at + n; ++i) {
            const double z = (rho[i] - fp.mu) / fp.sigma;
            flat[i] += cm * (1.0 - cfg.lambda) * std::exp(-0.5 * z * z) * z / fp.sigma;
            const double d = rho[i] - rho_prev[i];
            flat[i] += cm * cfg.lambda * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
        }
        at += n;
    }
    grad.unflatten(flat);
    return grad;
}

}  // namespace memtutor
