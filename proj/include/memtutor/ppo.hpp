#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "memtutor/adam.hpp"
#include "memtutor/gru.hpp"
#include "memtutor/rollout.hpp"

namespace memtutor {

struct PpoConfig {
    double clip = 0.2;
    double vf_coef = 0.5;
    double ent_coef = 0.01;
    int epochs = 10;
    int minibatch = 200;  // steps per minibatch
    double lr = 1e-4;

    void validate() const {
        if (!(clip > 0.0)) throw std::invalid_argument("PpoConfig: clip must be positive");
        if (vf_coef < 0.0 || ent_coef < 0.0)
            throw std::invalid_argument("PpoConfig: coefficients must be >= 0");
        if (epochs < 0) throw std::invalid_argument("PpoConfig: epochs must be >= 0");
        if (minibatch < 1) throw std::invalid_argument("PpoConfig: minibatch must be positive");
        if (!(lr >= 0.0)) throw std::invalid_argument("PpoConfig: lr must be >= 0");
    }
};

struct PpoDiagnostics {
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

// Clipped-surrogate loss and its gradient over the given chunks, replayed
// from the snapshotted hidden states with truncated backprop. Returns the
// scalar loss (to minimize); gradients accumulate into *grad when non-null.
template <typename Scalar>
double ppo_loss_and_grad(const PolicyNet<Scalar>& net, const TrajectoryBatch<Scalar>& batch,
                         const std::vector<int>& chunk_ids, const PpoConfig& cfg,
                         PolicyNet<Scalar>* grad, PpoDiagnostics* diag = nullptr) {
    cfg.validate();
    batch.validate();
    using Mat = typename PolicyNet<Scalar>::Mat;
    const int L = batch.chunk;
    const int B = static_cast<int>(chunk_ids.size());
    if (B == 0) throw std::invalid_argument("ppo_loss_and_grad: no chunks");
    for (int c : chunk_ids)
        if (c < 0 || c >= batch.chunks())
            throw std::invalid_argument("ppo_loss_and_grad: chunk id out of range");
    const double N = static_cast<double>(L) * B;

    std::vector<Mat> xs(L);
    std::vector<std::vector<char>> reset(L, std::vector<char>(B, 0));
    for (int t = 0; t < L; ++t) {
        xs[t].resize(net.in, B);
        for (int b = 0; b < B; ++b) {
            const int s = chunk_ids[b] * L + t;
            xs[t].col(b) = batch.obs.col(s);
            reset[t][b] = batch.episode_start[s];
        }
    }
    Mat h(net.hidden, B);
    for (int b = 0; b < B; ++b) h.col(b) = batch.hidden0.col(chunk_ids[b]);

    GruTape<Scalar> tape = gru_forward_chunk(net, xs, reset, h);

    double pol_sum = 0.0, val_sum = 0.0, ent_sum = 0.0;
    std::vector<Mat> dh;
    if (grad) dh.assign(L, Mat::Zero(net.hidden, B));
    for (int t = 0; t < L; ++t) {
        const Mat logits = net.policy_logits(tape.hpost[t]);
        const Mat values = net.value_of(tape.hpost[t]);
        Mat dlogits, dvalue;
        if (grad) {
            dlogits = Mat::Zero(net.actions, B);
            dvalue = Mat::Zero(1, B);
        }
        for (int b = 0; b < B; ++b) {
            const int s = chunk_ids[b] * L + t;
            const auto probs = softmax(logits.col(b).eval());
            const int a = batch.action[s];
            const double logp_new = std::log(static_cast<double>(probs[a]));
            const double ratio = std::exp(logp_new - batch.logp_old[s]);
            const double adv = batch.advantage[s];
            const double clipped =
                std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
            const double surr1 = ratio * adv;
            const double surr2 = clipped * adv;
            pol_sum -= std::min(surr1, surr2);
            double entropy = 0.0;
            for (int j = 0; j < net.actions; ++j) {
                const double p = static_cast<double>(probs[j]);
                if (p > 0.0) entropy -= p * std::log(p);
            }
            ent_sum += entropy;
            const double v = static_cast<double>(values(0, b));
            const double verr = v - batch.ret[s];
            val_sum += verr * verr;
            if (grad) {
                // Surrogate gradient flows only while the unclipped branch
                // attains the min; inside the clip band both branches agree.
                if (surr1 <= surr2) {
                    const double scale = -ratio * adv / N;
                    for (int j = 0; j < net.actions; ++j) {
                        const double onehot = j == a ? 1.0 : 0.0;
                        dlogits(j, b) += static_cast<Scalar>(
                            scale * (onehot - static_cast<double>(probs[j])));
                    }
                }
                // d(-ent_coef H)/dlogit_j = ent_coef p_j (log p_j + H)
                for (int j = 0; j < net.actions; ++j) {
                    const double p = static_cast<double>(probs[j]);
                    if (p > 0.0)
                        dlogits(j, b) += static_cast<Scalar>(cfg.ent_coef * p *
                                                             (std::log(p) + entropy) / N);
                }
                dvalue(0, b) = static_cast<Scalar>(2.0 * cfg.vf_coef * verr / N);
            }
        }
        if (grad) {
            grad->w_pi.noalias() += dlogits * tape.hpost[t].transpose();
            grad->b_pi += dlogits.rowwise().sum();
            grad->w_v.noalias() += dvalue * tape.hpost[t].transpose();
            grad->b_v += dvalue.rowwise().sum();
            dh[t].noalias() += net.w_pi.transpose() * dlogits;
            dh[t].noalias() += net.w_v.transpose() * dvalue;
        }
    }
    if (grad) gru_backward_chunk(net, tape, dh, reset, *grad);

    const double loss =
        pol_sum / N + cfg.vf_coef * val_sum / N - cfg.ent_coef * ent_sum / N;
    if (diag) {
        diag->loss = loss;
        diag->policy_loss = pol_sum / N;
        diag->value_loss = val_sum / N;
        diag->entropy = ent_sum / N;
    }
    return loss;
}

// One PPO update iteration: `epochs` sweeps over the batch in shuffled
// minibatches of whole chunks, each step applied through the shared
// moment-based optimizer at the given rate.
template <typename Scalar>
PpoDiagnostics ppo_update(PolicyNet<Scalar>& net, Adam<Scalar>& opt,
                          const TrajectoryBatch<Scalar>& batch, const PpoConfig& cfg,
                          Rng& shuffle_rng, double lr) {
    cfg.validate();
    batch.validate();
    if (cfg.minibatch % batch.chunk != 0)
        throw std::invalid_argument("ppo_update: minibatch must be whole chunks");
    if (batch.steps() % cfg.minibatch != 0)
        throw std::invalid_argument("ppo_update: batch must divide into minibatches");
    const int chunks_per_mb = cfg.minibatch / batch.chunk;
    const int n_chunks = batch.chunks();

    std::vector<int> order(n_chunks);
    std::iota(order.begin(), order.end(), 0);
    using Vec = typename PolicyNet<Scalar>::Vec;
    Vec flat = net.flatten();
    PpoDiagnostics last{};
    double diag_n = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = n_chunks - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.uniform_int(i + 1));
            std::swap(order[i], order[j]);
        }
        if (epoch == cfg.epochs - 1) last = PpoDiagnostics{};
        for (int mb = 0; mb * chunks_per_mb < n_chunks; ++mb) {
            const std::vector<int> ids(order.begin() + mb * chunks_per_mb,
                                       order.begin() + (mb + 1) * chunks_per_mb);
            PolicyNet<Scalar> grad = net.zeros_like();
            PpoDiagnostics d{};
            const double loss = ppo_loss_and_grad(net, batch, ids, cfg, &grad, &d);
            if (!std::isfinite(loss)) throw std::runtime_error("ppo_update: non-finite loss");
            if (!grad.all_finite()) throw std::runtime_error("ppo_update: non-finite gradient");
            opt.step(flat, grad.flatten(), lr);
            net.unflatten(flat);
            if (epoch == cfg.epochs - 1) {
                last.loss += d.loss;
                last.policy_loss += d.policy_loss;
                last.value_loss += d.value_loss;
                last.entropy += d.entropy;
                diag_n += 1.0;
            }
        }
    }
    if (diag_n > 0.0) {
        last.loss /= diag_n;
        last.policy_loss /= diag_n;
        last.value_loss /= diag_n;
        last.entropy /= diag_n;
    }
    return last;
}

}  // namespace memtutor
