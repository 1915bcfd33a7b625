#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "memtutor/history.hpp"
#include "memtutor/item_bank.hpp"
#include "memtutor/rng.hpp"

namespace memtutor {

// What a tutor may look at when choosing the next item. `oracle_recall` is
// ground-truth per-item recall and is only populated for the privileged
// threshold tutor.
struct TutorContext {
    int session = 0;
    int step_in_session = 0;
    std::int64_t now = 0;
    const std::vector<double>* oracle_recall = nullptr;
};

// Forward declaration only; defined with the model types.
struct ParamSet;

class ITutor {
public:
    virtual ~ITutor() = default;
    virtual std::string name() const = 0;
    virtual int next_item(const TutorContext& ctx) = 0;
    virtual void observe(const InteractionRecord& rec, int session) { (void)rec, (void)session; }
    // Called after the session's inner-model fit, before any presentation;
    // the learned tutor runs its optimization here.
    virtual void session_begin(int session, const ParamSet& inner_params) {
        (void)session, (void)inner_params;
    }
    // Whether the tutor reads ground-truth student state (flagged in event logs).
    virtual bool privileged() const { return false; }
};

inline int random_tutor_next(const ItemBank& bank, Rng& rng) {
    return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(bank.items)));
}

class RandomTutor final : public ITutor {
public:
    RandomTutor(const ItemBank& bank, Rng rng) : bank_(&bank), rng_(std::move(rng)) {}
    std::string name() const override { return "random"; }
    int next_item(const TutorContext&) override { return random_tutor_next(*bank_, rng_); }

private:
    const ItemBank* bank_;
    Rng rng_;
};

// Spaced-repetition boxes. Items sit in boxes 1..B; correct answers promote,
// mistakes demote to box 1; an item's next review is interval(box) sessions
// away. Unseen items start in box 1, due immediately.
struct LeitnerState {
    int boxes = 5;
    std::vector<std::int64_t> intervals = {1, 2, 4, 8, 16};  // sessions, indexed by box-1
    std::vector<int> box;                                    // per item
    std::vector<std::int64_t> due_session;                   // per item
    std::vector<long> last_seen;                             // presentation counter, -1 = never
    long presentations = 0;

    static LeitnerState init(int items, int boxes = 5,
                             std::vector<std::int64_t> intervals = {1, 2, 4, 8, 16}) {
        LeitnerState s;
        s.boxes = boxes;
        s.intervals = std::move(intervals);
        s.box.assign(items, 1);
        s.due_session.assign(items, 0);
        s.last_seen.assign(items, -1);
        s.validate();
        return s;
    }

    void validate() const {
        if (boxes < 1) throw std::invalid_argument("LeitnerState: boxes must be >= 1");
        if (intervals.size() != static_cast<size_t>(boxes))
            throw std::invalid_argument("LeitnerState: need one interval per box");
        for (auto iv : intervals)
            if (iv < 1) throw std::invalid_argument("LeitnerState: intervals must be >= 1");
        if (box.size() != due_session.size() || box.size() != last_seen.size() || box.empty())
            throw std::invalid_argument("LeitnerState: inconsistent per-item arrays");
        for (int b : box)
            if (b < 1 || b > boxes) throw std::invalid_argument("LeitnerState: box out of range");
    }
};

// Deterministic priority: among due items the lowest box wins, ties go to the
// least-recently-seen and then the lowest id; with nothing due, the soonest
// due item wins with the same tie cascade.
inline int leitner_tutor_next(const LeitnerState& state, std::int64_t session) {
    state.validate();
    const int J = static_cast<int>(state.box.size());
    int best = -1;
    auto better = [&](int a, int b) {  // true if a beats b
        const bool a_due = state.due_session[a] <= session;
        const bool b_due = state.due_session[b] <= session;
        if (a_due != b_due) return a_due;
        if (!a_due && state.due_session[a] != state.due_session[b])
            return state.due_session[a] < state.due_session[b];
        if (state.box[a] != state.box[b]) return state.box[a] < state.box[b];
        if (state.last_seen[a] != state.last_seen[b]) return state.last_seen[a] < state.last_seen[b];
        return a < b;
    };
    for (int j = 0; j < J; ++j)
        if (best < 0 || better(j, best)) best = j;
    return best;
}

inline void leitner_observe(LeitnerState& state, int item, int outcome, std::int64_t session) {
    state.validate();
    if (item < 0 || item >= static_cast<int>(state.box.size()))
        throw std::invalid_argument("leitner_observe: item out of range");
    int& b = state.box[item];
    b = outcome ? std::min(b + 1, state.boxes) : 1;
    state.due_session[item] = session + state.intervals[b - 1];
    state.last_seen[item] = state.presentations++;
}

class LeitnerTutor final : public ITutor {
public:
    LeitnerTutor(LeitnerState state) : state_(std::move(state)) {}
    std::string name() const override { return "leitner"; }
    int next_item(const TutorContext& ctx) override {
        return leitner_tutor_next(state_, ctx.session);
    }
    void observe(const InteractionRecord& rec, int session) override {
        leitner_observe(state_, rec.item, rec.outcome, session);
    }
    const LeitnerState& state() const { return state_; }

private:
    LeitnerState state_;
};

// Picks the item whose ground-truth recall is closest to the threshold; the
// oracle access is what makes this tutor privileged.
inline int threshold_tutor_next(const std::vector<double>& recall, double threshold) {
    if (recall.empty()) throw std::invalid_argument("threshold_tutor_next: empty recall vector");
    int best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < recall.size(); ++j) {
        const double gap = std::abs(recall[j] - threshold);
        if (gap < best_gap) {
            best_gap = gap;
            best = static_cast<int>(j);
        }
    }
    return best;
}

class ThresholdTutor final : public ITutor {
public:
    explicit ThresholdTutor(double threshold = 0.9) : threshold_(threshold) {}
    std::string name() const override { return "threshold"; }
    bool privileged() const override { return true; }
    int next_item(const TutorContext& ctx) override {
        if (ctx.oracle_recall == nullptr)
            throw std::invalid_argument("ThresholdTutor: oracle recall not provided");
        return threshold_tutor_next(*ctx.oracle_recall, threshold_);
    }
    double threshold() const { return threshold_; }

private:
    double threshold_;
};

}  // namespace memtutor
