#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "memtutor/rng.hpp"

namespace memtutor {

inline int embedding_dim(int items) {
    if (items < 1) throw std::invalid_argument("embedding_dim: need at least one item");
    int d = 0;
    while ((1 << d) < 2 * items) ++d;  // ceil(log2(2J))
    return d;
}

// Fixed random compression of the 2J-dimensional (item, outcome) indicator
// down to ceil(log2(2J)) dimensions. Drawn once per run and frozen; the hash
// lets callers assert it never changes between collection and update.
struct ProjectionMatrix {
    Eigen::MatrixXd g;  // d x 2J

    static ProjectionMatrix make(int items, std::uint64_t seed) {
        ProjectionMatrix pm;
        Rng rng = Rng::stream(seed, "projection");
        pm.g.resize(embedding_dim(items), 2 * items);
        for (Eigen::Index c = 0; c < pm.g.cols(); ++c)
            for (Eigen::Index r = 0; r < pm.g.rows(); ++r) pm.g(r, c) = rng.normal();
        return pm;
    }

    int items() const { return static_cast<int>(g.cols()) / 2; }
    int dim() const { return static_cast<int>(g.rows()); }

    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            std::uint64_t bits;
            const double v = g.data()[i];
            static_assert(sizeof(bits) == sizeof(v));
            __builtin_memcpy(&bits, &v, sizeof(bits));
            h = (h ^ bits) * 1099511628211ull;
        }
        return h;
    }
};

// v2 = [v1 (1-o); v1 o] with v1 = onehot(item); j_e = g v2. Since v2 has a
// single nonzero entry, the product is one column of g.
inline Eigen::VectorXd embed_item(int item, int outcome, int items, const ProjectionMatrix& g) {
    if (item < 0 || item >= items) throw std::invalid_argument("embed_item: item out of range");
    if (g.items() != items) throw std::invalid_argument("embed_item: projection built for other J");
    if (outcome != 0 && outcome != 1) throw std::invalid_argument("embed_item: outcome not 0/1");
    return g.g.col(outcome == 0 ? item : items + item);
}

// (log dt (1-o), log dt o), with dt clamped to one second.
inline Eigen::Vector2d embed_time(double dt_seconds, int outcome) {
    if (outcome != 0 && outcome != 1) throw std::invalid_argument("embed_time: outcome not 0/1");
    const double l = std::log(dt_seconds < 1.0 ? 1.0 : dt_seconds);
    return {l * (1 - outcome), l * outcome};
}

inline int observation_dim(int items) { return embedding_dim(items) + 3; }

// Observation of one past interaction: [j_e; t_e; o].
inline Eigen::VectorXd build_observation(int item, int outcome, double dt_seconds, int items,
                                         const ProjectionMatrix& g) {
    Eigen::VectorXd obs(observation_dim(items));
    obs.head(g.dim()) = embed_item(item, outcome, items, g);
    obs.segment(g.dim(), 2) = embed_time(dt_seconds, outcome);
    obs[g.dim() + 2] = static_cast<double>(outcome);
    return obs;
}

// Mean log recall over all items, the per-step teaching reward. Probabilities
// are clamped below so an unlearned item gives a large but finite penalty.
inline double reward(const std::vector<double>& recall) {
    if (recall.empty()) throw std::invalid_argument("reward: empty recall vector");
    double sum = 0.0;
    for (double p : recall) {
        if (!(p <= 1.0)) throw std::invalid_argument("reward: probability above 1");
        sum += std::log(p < 1e-9 ? 1e-9 : p);
    }
    return sum / static_cast<double>(recall.size());
}

inline double reward(const Eigen::VectorXd& recall) {
    return reward(std::vector<double>(recall.data(), recall.data() + recall.size()));
}

}  // namespace memtutor
