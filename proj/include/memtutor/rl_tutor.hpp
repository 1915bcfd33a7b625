#pragma once

#include <string>
#include <vector>

#include "memtutor/fit.hpp"
#include "memtutor/observation.hpp"
#include "memtutor/ppo.hpp"
#include "memtutor/rollout.hpp"
#include "memtutor/tutors.hpp"

namespace memtutor {

struct RlConfig {
    RolloutConfig rollout;
    PpoConfig ppo;
    int iters_per_session = 3;
    int hidden = 512;

    void validate() const {
        rollout.validate();
        ppo.validate();
        if (iters_per_session < 0)
            throw std::invalid_argument("RlConfig: iters_per_session must be >= 0");
        if (hidden < 1) throw std::invalid_argument("RlConfig: hidden must be positive");
        if (ppo.minibatch % rollout.chunk != 0)
            throw std::invalid_argument("RlConfig: minibatch must be whole chunks");
        if (rollout.horizon % ppo.minibatch != 0)
            throw std::invalid_argument("RlConfig: horizon must divide into minibatches");
    }
};

// The learned tutor. Before each session it refreshes its policy with PPO
// against the newly fitted inner model, then replays the real interaction
// stream to rebuild its recurrent state under the new weights. Weights and
// optimizer moments persist across sessions (warm start); the deployment
// stream is one long episode.
template <typename Scalar = float>
class RLTutor final : public ITutor {
public:
    using Vec = typename PolicyNet<Scalar>::Vec;

    RLTutor(const ItemBank& bank, const TimeWindows& windows,
            const SensoryMemoryConstants& sensory, const SessionSchedule& schedule, RlConfig cfg,
            std::uint64_t root_seed)
        : bank_(&bank),
          windows_(&windows),
          sensory_(sensory),
          schedule_(schedule),
          cfg_(cfg),
          root_seed_(root_seed),
          projection_(ProjectionMatrix::make(bank.items, root_seed)),
          instruct_rng_(Rng::stream(root_seed, "instruct")) {
        cfg_.validate();
        proj_hash_ = projection_.hash();
        Rng init_rng = Rng::stream(root_seed, "policy-init");
        net_ = PolicyNet<Scalar>::init(observation_dim(bank.items), cfg_.hidden, bank.items,
                                       init_rng);
        opt_ = Adam<Scalar>(net_.param_count());
        hidden_ = Vec::Zero(cfg_.hidden);
    }

    std::string name() const override { return "rl"; }

    // Session step 2: policy optimization against the frozen inner model.
    void session_begin(int session, const ParamSet& inner_params) override {
        if (projection_.hash() != proj_hash_)
            throw std::logic_error("RLTutor: projection drifted");
        RolloutSet<Scalar> rollouts(*bank_, *windows_, inner_params, sensory_, schedule_,
                                    projection_, cfg_.rollout, cfg_.hidden, root_seed_, session);
        Rng shuffle = Rng::stream(stream_seed(root_seed_, "ppo-shuffle"),
                                  "s" + std::to_string(session));
        const int iters = cfg_.iters_per_session;
        for (int it = 0; it < iters; ++it) {
            const TrajectoryBatch<Scalar> batch = rollouts.collect(net_);
            const double lr =
                sawtooth_lr(cfg_.ppo.lr, static_cast<long>(session % 2) * iters + it, 2L * iters);
            last_diag_ = ppo_update(net_, opt_, batch, cfg_.ppo, shuffle, lr);
        }
        replay_hidden();
    }

    int next_item(const TutorContext&) override {
        if (awaiting_observe_) throw std::logic_error("RLTutor: next_item called twice");
        const Vec obs = obs_log_.empty() ? Vec::Zero(net_.in) : obs_log_.back();
        const auto out = policy_forward(net_, obs, hidden_);
        awaiting_observe_ = true;
        return sample_action(out.probs, instruct_rng_);
    }

    void observe(const InteractionRecord& rec, int) override {
        if (!awaiting_observe_) throw std::logic_error("RLTutor: observe without next_item");
        const double dt =
            obs_log_.empty() ? 1.0 : static_cast<double>(rec.timestamp - last_time_);
        obs_log_.push_back(
            build_observation(rec.item, rec.outcome, dt, bank_->items, projection_)
                .template cast<Scalar>());
        last_time_ = rec.timestamp;
        awaiting_observe_ = false;
    }

    const PolicyNet<Scalar>& net() const { return net_; }
    const ProjectionMatrix& projection() const { return projection_; }
    const PpoDiagnostics& last_diagnostics() const { return last_diag_; }

private:
    // Recomputes the deployment hidden state by replaying every decision's
    // observation through the updated network.
    void replay_hidden() {
        hidden_.setZero();
        for (size_t d = 0; d < obs_log_.size(); ++d) {
            const Vec obs = d == 0 ? Vec::Zero(net_.in) : obs_log_[d - 1];
            policy_forward(net_, obs, hidden_);
        }
    }

    const ItemBank* bank_;
    const TimeWindows* windows_;
    SensoryMemoryConstants sensory_;
    SessionSchedule schedule_;
    RlConfig cfg_;
    std::uint64_t root_seed_;
    ProjectionMatrix projection_;
    std::uint64_t proj_hash_ = 0;
    PolicyNet<Scalar> net_;
    Adam<Scalar> opt_;
    Rng instruct_rng_;
    Vec hidden_;
    std::vector<Vec> obs_log_;
    std::int64_t last_time_ = 0;
    bool awaiting_observe_ = false;
    PpoDiagnostics last_diag_{};
};

}  // namespace memtutor
