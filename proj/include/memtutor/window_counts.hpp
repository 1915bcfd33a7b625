#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "memtutor/history.hpp"
#include "memtutor/item_bank.hpp"

namespace memtutor {

// Per-window attempt/correct counts for one (learner, skill) at a query time.
struct WindowCounts {
    std::vector<long> attempts;
    std::vector<long> correct;
};

// Naive recount straight from the definition: for each window w, count prior
// attempts on the skill with now - t <= tau_w. This is the reference the
// incremental table is checked against.
inline WindowCounts count_windows(const History& history, const ItemBank& bank, int learner,
                                  int skill, std::int64_t now, const TimeWindows& windows) {
    const int W = windows.count();
    WindowCounts out;
    out.attempts.assign(W, 0);
    out.correct.assign(W, 0);
    for (const auto& rec : history) {
        if (rec.timestamp >= now)
            throw std::invalid_argument("count_windows: record at or after query time");
        if (rec.learner != learner) continue;
        const auto& kcs = bank.kc_map.at(rec.item);
        if (std::find(kcs.begin(), kcs.end(), skill) == kcs.end()) continue;
        const double age = static_cast<double>(now - rec.timestamp);
        for (int w = 0; w < W; ++w) {
            if (age <= windows.tau[w]) {
                ++out.attempts[w];
                out.correct[w] += rec.outcome;
            }
        }
    }
    return out;
}

// Incremental per-skill event index for one learner. Appends are O(|KC|);
// window counts are two binary searches per window. Equivalent to
// count_windows over the same records (property-tested against it).
class WindowCounterTable {
public:
    WindowCounterTable() = default;
    WindowCounterTable(const ItemBank& bank, int learner)
        : learner_(learner), by_skill_(bank.skills) {}

    int learner() const { return learner_; }
    std::int64_t last_timestamp() const { return last_t_; }
    bool empty() const { return total_ == 0; }
    long total() const { return total_; }

    void observe(const InteractionRecord& rec, const ItemBank& bank) {
        if (rec.learner != learner_)
            throw std::invalid_argument("WindowCounterTable: record for a different learner");
        if (total_ > 0 && rec.timestamp < last_t_)
            throw std::invalid_argument("WindowCounterTable: timestamps must be non-decreasing");
        for (int k : bank.kc_map.at(rec.item)) {
            auto& sk = by_skill_[k];
            sk.times.push_back(rec.timestamp);
            sk.cum_correct.push_back((sk.cum_correct.empty() ? 0L : sk.cum_correct.back()) + rec.outcome);
        }
        last_t_ = rec.timestamp;
        ++total_;
    }

    WindowCounts counts(int skill, std::int64_t now, const TimeWindows& windows) const {
        if (total_ > 0 && last_t_ >= now)
            throw std::invalid_argument("WindowCounterTable: record at or after query time");
        const auto& sk = by_skill_.at(skill);
        const int W = windows.count();
        WindowCounts out;
        out.attempts.assign(W, 0);
        out.correct.assign(W, 0);
        if (sk.times.empty()) return out;
        const long n_all = static_cast<long>(sk.times.size());
        const long c_all = sk.cum_correct.back();
        for (int w = 0; w < W; ++w) {
            long lo = 0;  // first event with now - t <= tau_w
            if (std::isfinite(windows.tau[w])) {
                const double cutoff = static_cast<double>(now) - windows.tau[w];
                lo = static_cast<long>(std::lower_bound(sk.times.begin(), sk.times.end(), cutoff) -
                                       sk.times.begin());
            }
            out.attempts[w] = n_all - lo;
            out.correct[w] = c_all - (lo > 0 ? sk.cum_correct[lo - 1] : 0L);
        }
        return out;
    }

    void clear() {
        for (auto& sk : by_skill_) {
            sk.times.clear();
            sk.cum_correct.clear();
        }
        last_t_ = 0;
        total_ = 0;
    }

private:
    struct SkillEvents {
        std::vector<std::int64_t> times;
        std::vector<long> cum_correct;
    };

    int learner_ = 0;
    std::vector<SkillEvents> by_skill_;
    std::int64_t last_t_ = 0;
    long total_ = 0;
};

}  // namespace memtutor
