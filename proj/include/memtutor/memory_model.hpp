#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "memtutor/history.hpp"
#include "memtutor/item_bank.hpp"
#include "memtutor/params.hpp"
#include "memtutor/rng.hpp"
#include "memtutor/window_counts.hpp"

namespace memtutor {

// Numerically stable logistic; exact 0.5 at x = 0, no overflow for |x| <= 500.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Plain logistic item response: ability minus difficulty.
inline double irt_recall(double alpha, double delta) { return sigmoid(alpha - delta); }

// Wickelgren power-law correction constants. dt is measured in units of
// dt_unit seconds (one day by default).
struct SensoryMemoryConstants {
    double h = 0.3;
    double f = 0.7;
    double dt_unit = 86400.0;

    void validate() const {
        if (!(h > 0.0) || !(f > 0.0) || !(dt_unit > 0.0))
            throw std::invalid_argument("SensoryMemoryConstants: h, f, dt_unit must be positive");
    }
};

// Recall logit of one item from window counts of its skills:
// alpha - delta_j + sum_k beta_k + sum_k sum_w [theta ln(1+c) + phi ln(1+n)].
inline double das3h_logit(const ParamSet& params, int item, const ItemBank& bank,
                          const std::vector<WindowCounts>& counters_per_skill) {
    if (item < 0 || item >= params.items())
        throw std::invalid_argument("das3h: item id out of range");
    const auto& kcs = bank.kc_map.at(item);
    if (counters_per_skill.size() != kcs.size())
        throw std::invalid_argument("das3h: one counter set per skill of the item expected");
    double logit = params.alpha - params.delta[item];
    const int W = params.windows();
    for (size_t i = 0; i < kcs.size(); ++i) {
        const int k = kcs[i];
        logit += params.beta[k];
        const auto& wc = counters_per_skill[i];
        if (static_cast<int>(wc.attempts.size()) != W)
            throw std::invalid_argument("das3h: window count width mismatch");
        for (int w = 0; w < W; ++w) {
            logit += params.theta(k, w) * std::log1p(static_cast<double>(wc.correct[w])) +
                     params.phi(k, w) * std::log1p(static_cast<double>(wc.attempts[w]));
        }
    }
    return logit;
}

inline double das3h_recall(const ParamSet& params, int item, const ItemBank& bank,
                           const std::vector<WindowCounts>& counters_per_skill) {
    return sigmoid(das3h_logit(params, item, bank, counters_per_skill));
}

// Response probability with the sensory-memory correction:
// (1 - p_D)(1 + h*dt)^(-f) + p_D. Equals 1 at dt = 0 and decays toward p_D.
inline double inner_recall(double p_das3h, double dt, const SensoryMemoryConstants& c) {
    if (!(p_das3h > 0.0 && p_das3h < 1.0))
        throw std::invalid_argument("inner_recall: p_D must lie in (0,1)");
    if (!(dt >= 0.0)) throw std::invalid_argument("inner_recall: dt must be non-negative");
    const double decay = std::pow(1.0 + c.h * dt, -c.f);
    return (1.0 - p_das3h) * decay + p_das3h;
}

// Bernoulli draw of a simulated answer.
inline int sample_response(double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_response: p outside [0,1]");
    return rng.bernoulli(p) ? 1 : 0;
}

// One parameterized memory (a simulated student, or the tutor's fitted copy of
// one): parameters plus the live counter table over the learner's history.
//
// Two kinds of query:
//   recall(j, now)      - the DAS3H memory rate of item j at `now`; this is the
//                         quantity the experiment curves average.
//   response_probability(j, now) - the probability that the learner answers j
//                         correctly when it is posed at `now`; DAS3H blended
//                         toward 1 by the sensory-memory term, with dt measured
//                         from the learner's immediately preceding interaction.
class MemoryModel {
public:
    MemoryModel(const ItemBank& bank, const TimeWindows& windows, ParamSet params,
                SensoryMemoryConstants sensory = {}, int learner = 0)
        : bank_(&bank),
          windows_(&windows),
          params_(std::move(params)),
          sensory_(sensory),
          table_(bank, learner) {
        if (params_.items() != bank.items || params_.skills() != bank.skills ||
            params_.windows() != windows.count())
            throw std::invalid_argument("MemoryModel: parameter shapes do not match bank/windows");
        sensory_.validate();
    }

    const ParamSet& params() const { return params_; }
    const WindowCounterTable& table() const { return table_; }
    const SensoryMemoryConstants& sensory() const { return sensory_; }
    bool has_history() const { return !table_.empty(); }
    std::int64_t last_timestamp() const { return table_.last_timestamp(); }

    void observe(const InteractionRecord& rec) { table_.observe(rec, *bank_); }

    void reset() { table_.clear(); }

    double recall(int item, std::int64_t now) const {
        std::vector<WindowCounts> wc;
        wc.reserve(bank_->kc_map[item].size());
        for (int k : bank_->kc_map[item]) wc.push_back(table_.counts(k, now, *windows_));
        return das3h_recall(params_, item, *bank_, wc);
    }

    // Memory rates of all items at once; skill counts are shared across items.
    Eigen::VectorXd recall_all(std::int64_t now) const {
        const int K = bank_->skills;
        const int W = windows_->count();
        // Per-skill window features ln(1+c), ln(1+n).
        Eigen::MatrixXd ln_c(K, W), ln_n(K, W);
        for (int k = 0; k < K; ++k) {
            const auto wc = table_.counts(k, now, *windows_);
            for (int w = 0; w < W; ++w) {
                ln_c(k, w) = std::log1p(static_cast<double>(wc.correct[w]));
                ln_n(k, w) = std::log1p(static_cast<double>(wc.attempts[w]));
            }
        }
        Eigen::VectorXd out(bank_->items);
        for (int j = 0; j < bank_->items; ++j) {
            double logit = params_.alpha - params_.delta[j];
            for (int k : bank_->kc_map[j]) {
                logit += params_.beta[k];
                for (int w = 0; w < W; ++w)
                    logit += params_.theta(k, w) * ln_c(k, w) + params_.phi(k, w) * ln_n(k, w);
            }
            out[j] = sigmoid(logit);
        }
        return out;
    }

    double response_probability(int item, std::int64_t now) const {
        const double p_d = recall(item, now);
        if (!has_history()) return p_d;  // no preceding interaction, no sensory trace
        const double dt = static_cast<double>(now - table_.last_timestamp()) / sensory_.dt_unit;
        return inner_recall(p_d, dt, sensory_);
    }

private:
    const ItemBank* bank_;
    const TimeWindows* windows_;
    ParamSet params_;
    SensoryMemoryConstants sensory_;
    WindowCounterTable table_;
};

}  // namespace memtutor
