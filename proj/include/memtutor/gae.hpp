#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace memtutor {

struct GaeOut {
    std::vector<double> advantages;
    std::vector<double> returns;
};

// Generalized advantage estimation over one stream.
//   delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t
//   A_t     = delta_t + gamma lambda (1 - done_t) A_{t+1}
// `done[t]` marks steps that end an episode (the next value is 0 and the
// recursion resets). `bootstrap` is V of the state after the final step, used
// only when the stream is cut mid-episode.
inline GaeOut compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                          const std::vector<char>& done, double bootstrap, double gamma = 0.85,
                          double lam = 0.95) {
    const size_t T = rewards.size();
    if (values.size() != T || done.size() != T)
        throw std::invalid_argument("compute_gae: misaligned lengths");
    GaeOut out;
    out.advantages.assign(T, 0.0);
    out.returns.assign(T, 0.0);
    double carry = 0.0;
    for (size_t i = T; i-- > 0;) {
        const double not_done = done[i] ? 0.0 : 1.0;
        const double next_v = (i + 1 < T) ? values[i + 1] : bootstrap;
        const double delta = rewards[i] + gamma * next_v * not_done - values[i];
        carry = delta + gamma * lam * not_done * carry;
        out.advantages[i] = carry;
        out.returns[i] = carry + values[i];
    }
    return out;
}

}  // namespace memtutor
