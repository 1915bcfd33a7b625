#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "memtutor/memtutor.hpp"

using namespace memtutor;
using Catch::Approx;

namespace {

using NetD = PolicyNet<double>;
using MatD = NetD::Mat;
using VecD = NetD::Vec;

// A small double-precision batch with episode boundaries inside chunks and
// old log-probs close to (but not exactly) the net's own.
struct FdSetup {
    NetD net;
    TrajectoryBatch<double> batch;
};

FdSetup make_fd_setup(std::uint64_t seed) {
    FdSetup s;
    const int in = 5, H = 4, A = 3;
    const int workers = 2, worker_len = 8, chunk = 4;
    const int T = workers * worker_len;
    Rng rng(seed);
    s.net = NetD::init(in, H, A, rng);
    // break the zero-head symmetry so value/policy heads carry signal
    s.net.w_pi = MatD::NullaryExpr(A, H, [&] { return rng.normal(0.0, 0.4); });
    s.net.w_v = MatD::NullaryExpr(1, H, [&] { return rng.normal(0.0, 0.4); });
    s.net.b_pi = MatD::NullaryExpr(A, 1, [&] { return rng.normal(0.0, 0.1); });
    s.net.b_v(0, 0) = rng.normal(0.0, 0.1);

    auto& b = s.batch;
    b.chunk = chunk;
    b.worker_len = worker_len;
    b.obs = MatD::NullaryExpr(in, T, [&] { return rng.normal(); });
    b.hidden0 = MatD::NullaryExpr(H, T / chunk, [&] { return rng.normal(0.0, 0.5); });
    b.action.resize(T);
    b.logp_old.resize(T);
    b.reward.assign(T, 0.0);
    b.value.assign(T, 0.0);
    b.episode_start.assign(T, 0);
    b.done.assign(T, 0);
    b.advantage.resize(T);
    b.ret.resize(T);
    // worker 0: episodes [0,4] and [5,7]; worker 1: [8,9] and [10,15]
    b.episode_start[0] = 1;
    b.episode_start[5] = 1;
    b.done[4] = 1;
    b.episode_start[8] = 1;
    b.episode_start[10] = 1;
    b.done[9] = 1;
    b.done[7] = b.done[15] = 1;
    for (int t = 0; t < T; ++t) {
        b.action[t] = static_cast<int>(rng.uniform_int(A));
        b.advantage[t] = rng.normal();
        b.ret[t] = rng.uniform(0.0, 2.0);
    }
    // replay each chunk to get the net's own log-probs, then jitter them so
    // every ratio sits well inside the clip band
    for (int c = 0; c < b.chunks(); ++c) {
        std::vector<MatD> xs(chunk);
        std::vector<std::vector<char>> reset(chunk, std::vector<char>(1, 0));
        for (int t = 0; t < chunk; ++t) {
            xs[t] = b.obs.col(c * chunk + t);
            reset[t][0] = b.episode_start[c * chunk + t];
        }
        MatD h = b.hidden0.col(c);
        const GruTape<double> tape = gru_forward_chunk(s.net, xs, reset, h);
        for (int t = 0; t < chunk; ++t) {
            const int at = c * chunk + t;
            const VecD probs = softmax(s.net.policy_logits(tape.hpost[t]).col(0).eval());
            b.logp_old[at] = std::log(probs[b.action[at]]) + rng.uniform(-0.05, 0.05);
        }
    }
    return s;
}

ExperimentConfig tiny_cfg() {
    ExperimentConfig cfg;
    cfg.bank = ItemBank::uniform_mod(4, 2);
    cfg.initial_params = ParamSet(4, 2, cfg.windows.count());
    return cfg;
}

}  // namespace

TEST_CASE("observation pieces") {
    REQUIRE(embedding_dim(30) == 6);  // ceil(log2(60))
    REQUIRE(observation_dim(30) == 9);
    REQUIRE(embedding_dim(1) == 1);
    REQUIRE(embedding_dim(2) == 2);

    const ProjectionMatrix g = ProjectionMatrix::make(30, 0);
    REQUIRE(g.dim() == 6);
    SECTION("item embedding selects outcome-dependent columns") {
        const Eigen::VectorXd a = embed_item(3, 0, 30, g);
        const Eigen::VectorXd b = embed_item(3, 1, 30, g);
        REQUIRE(a == g.g.col(3));
        REQUIRE(b == g.g.col(33));
        REQUIRE((a - b).norm() > 1e-12);
    }
    SECTION("projection is seed-stable and seed-sensitive") {
        REQUIRE(g.hash() == ProjectionMatrix::make(30, 0).hash());
        REQUIRE(g.hash() != ProjectionMatrix::make(30, 1).hash());
    }
    SECTION("time embedding routes ln(dt) by outcome") {
        const Eigen::Vector2d t0 = embed_time(std::exp(1.0), 0);
        REQUIRE(t0[0] == Approx(1.0));
        REQUIRE(t0[1] == 0.0);
        const Eigen::Vector2d t1 = embed_time(std::exp(2.0), 1);
        REQUIRE(t1[0] == 0.0);
        REQUIRE(t1[1] == Approx(2.0));
        // sub-second gaps clamp to one second
        REQUIRE(embed_time(0.25, 0)[0] == 0.0);
    }
    SECTION("full observation layout is [item; time; outcome]") {
        const Eigen::VectorXd obs = build_observation(2, 1, 10.0, 30, g);
        REQUIRE(obs.size() == 9);
        REQUIRE(obs.head(6) == g.g.col(32));
        REQUIRE(obs[6] == 0.0);
        REQUIRE(obs[7] == Approx(std::log(10.0)));
        REQUIRE(obs[8] == 1.0);
    }
}

TEST_CASE("reward is mean log recall") {
    REQUIRE(reward(std::vector<double>{1.0, 1.0}) == 0.0);
    REQUIRE(reward(std::vector<double>{1.0, std::exp(-2.0)}) == Approx(-1.0));
    REQUIRE(reward(std::vector<double>{0.0}) == Approx(std::log(1e-9)));
    REQUIRE_THROWS_AS(reward(std::vector<double>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(reward(std::vector<double>{1.5}), std::invalid_argument);
    Eigen::VectorXd v(2);
    v << 1.0, 1.0;
    REQUIRE(reward(v) == 0.0);
}

TEST_CASE("gae matches the hand recursion") {
    SECTION("three unit rewards, zero values") {
        const GaeOut out = compute_gae({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, {0, 0, 1}, 0.0);
        REQUIRE(out.advantages[2] == Approx(1.0));
        REQUIRE(out.advantages[1] == Approx(1.8075));
        REQUIRE(out.advantages[0] == Approx(2.45955625));
        for (int t = 0; t < 3; ++t) REQUIRE(out.returns[t] == Approx(out.advantages[t]));
    }
    SECTION("gamma zero reduces to td errors") {
        const GaeOut out = compute_gae({1.0, 2.0}, {0.5, 0.25}, {0, 1}, 9.0, 0.0, 0.95);
        REQUIRE(out.advantages[0] == Approx(0.5));
        REQUIRE(out.advantages[1] == Approx(1.75));
    }
    SECTION("bootstrap feeds the last step when the episode continues") {
        const GaeOut out = compute_gae({0.0}, {0.0}, {0}, 1.0, 0.85, 0.95);
        REQUIRE(out.advantages[0] == Approx(0.85));
    }
    SECTION("done masks the bootstrap") {
        const GaeOut out = compute_gae({0.0}, {0.0}, {1}, 1.0, 0.85, 0.95);
        REQUIRE(out.advantages[0] == Approx(0.0));
    }
}

TEST_CASE("softmax and policy basics") {
    Eigen::VectorXd z(3);
    z << 1000.0, 1000.0, 1000.0;
    const Eigen::VectorXd p = softmax(z);
    REQUIRE(p.sum() == Approx(1.0));
    REQUIRE(p[0] == Approx(1.0 / 3.0));

    SECTION("zero-weight net is uniform with zero value") {
        NetD net = NetD::sized(4, 6, 5);
        VecD h = VecD::Zero(6);
        const auto out = policy_forward(net, VecD(VecD::Random(4)), h);
        for (int a = 0; a < 5; ++a) REQUIRE(out.probs[a] == Approx(0.2));
        REQUIRE(out.value == 0.0);
    }
    SECTION("sampling follows the distribution support") {
        Rng rng(7);
        Eigen::VectorXd onehot(3);
        onehot << 0.0, 1.0, 0.0;
        for (int i = 0; i < 50; ++i) REQUIRE(sample_action(onehot, rng) == 1);
    }
    SECTION("save/load round-trips bit-exactly") {
        Rng rng(11);
        NetD net = NetD::init(3, 4, 2, rng);
        const std::string path = "/tmp/memtutor_test_policy.csv";
        save_policy(net, path);
        const NetD back = load_policy<double>(path);
        REQUIRE(back.flatten() == net.flatten());
        std::filesystem::remove(path);
    }
}

TEST_CASE("ppo loss gradient matches finite differences") {
    const FdSetup s = make_fd_setup(42);
    PpoConfig cfg;
    std::vector<int> ids = {0, 1, 2, 3};

    NetD grad = s.net.zeros_like();
    const double loss0 = ppo_loss_and_grad(s.net, s.batch, ids, cfg, &grad);
    REQUIRE(std::isfinite(loss0));

    const Eigen::VectorXd x0 = s.net.flatten();
    const Eigen::VectorXd fd = finite_difference_gradient(
        [&](const Eigen::VectorXd& x) {
            NetD n = s.net;
            n.unflatten(x);
            NetD scratch = n.zeros_like();
            return ppo_loss_and_grad(n, s.batch, ids, cfg, &scratch);
        },
        x0, 1e-5);
    const double mismatch = gradient_mismatch(grad.flatten(), fd);
    INFO("max relative gradient error " << mismatch);
    REQUIRE(mismatch <= 1e-3);
}

TEST_CASE("ppo clip gates the policy gradient") {
    FdSetup s = make_fd_setup(43);
    // single chunk, single step focus: force every ratio far above the band
    for (auto& lp : s.batch.logp_old) lp -= std::log(1.5);
    PpoConfig cfg;
    cfg.ent_coef = 0.0;
    cfg.vf_coef = 0.0;
    std::vector<int> ids = {0, 1, 2, 3};

    SECTION("positive advantages with high ratio give zero gradient") {
        for (auto& a : s.batch.advantage) a = 1.0;
        NetD grad = s.net.zeros_like();
        ppo_loss_and_grad(s.net, s.batch, ids, cfg, &grad);
        REQUIRE(grad.flatten().norm() == 0.0);
    }
    SECTION("negative advantages with high ratio keep the gradient alive") {
        for (auto& a : s.batch.advantage) a = -1.0;
        NetD grad = s.net.zeros_like();
        ppo_loss_and_grad(s.net, s.batch, ids, cfg, &grad);
        REQUIRE(grad.flatten().norm() > 0.0);
    }
    SECTION("zero advantages zero the policy loss") {
        for (auto& a : s.batch.advantage) a = 0.0;
        PpoDiagnostics diag;
        NetD grad = s.net.zeros_like();
        ppo_loss_and_grad(s.net, s.batch, ids, cfg, &grad, &diag);
        REQUIRE(diag.policy_loss == 0.0);
    }
}

TEST_CASE("ppo diagnostics stay in range") {
    const FdSetup s = make_fd_setup(44);
    PpoConfig cfg;
    PpoDiagnostics diag;
    NetD grad = s.net.zeros_like();
    ppo_loss_and_grad(s.net, s.batch, {0, 1, 2, 3}, cfg, &grad, &diag);
    REQUIRE(diag.entropy >= 0.0);
    REQUIRE(diag.entropy <= std::log(3.0) + 1e-12);
    REQUIRE(diag.value_loss >= 0.0);
}

TEST_CASE("rollout collection geometry and determinism") {
    const ExperimentConfig cfg = tiny_cfg();
    const ProjectionMatrix proj = ProjectionMatrix::make(cfg.bank.items, 5);
    RolloutConfig rc;
    rc.horizon = 10;
    rc.workers = 1;
    rc.chunk = 5;
    Rng net_rng(3);
    PolicyNet<float> net =
        PolicyNet<float>::init(observation_dim(cfg.bank.items), 6, cfg.bank.items, net_rng);

    RolloutSet<float> a(cfg.bank, cfg.windows, cfg.initial_params, cfg.sensory, cfg.schedule,
                        proj, rc, 6, 5, 0);
    const TrajectoryBatch<float> ba = a.collect(net);
    REQUIRE(ba.steps() == 10);
    REQUIRE(ba.chunks() == 2);
    REQUIRE(ba.episode_start[0] == 1);
    for (double r : ba.reward) REQUIRE(r <= 0.0);
    for (int act : ba.action) {
        REQUIRE(act >= 0);
        REQUIRE(act < cfg.bank.items);
    }
    // advantages are normalized over the whole batch
    double mean = 0.0;
    for (double v : ba.advantage) mean += v;
    REQUIRE(std::abs(mean / ba.steps()) < 1e-6);

    RolloutSet<float> b(cfg.bank, cfg.windows, cfg.initial_params, cfg.sensory, cfg.schedule,
                        proj, rc, 6, 5, 0);
    const TrajectoryBatch<float> bb = b.collect(net);
    REQUIRE(bb.action == ba.action);
    REQUIRE(bb.reward == ba.reward);
    REQUIRE(bb.obs == ba.obs);

    // a different session reseeds the stream
    RolloutSet<float> c(cfg.bank, cfg.windows, cfg.initial_params, cfg.sensory, cfg.schedule,
                        proj, rc, 6, 5, 1);
    REQUIRE(c.collect(net).action != ba.action);
}

TEST_CASE("ppo update improves the bandit quickly") {
    const BanditResult r = run_bandit(1);
    REQUIRE(r.converged);
    REQUIRE(r.p_arm0 > 0.95);
}
