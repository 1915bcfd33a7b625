#pragma once

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "memtutor/csv.hpp"
#include "memtutor/rng.hpp"

namespace memtutor {

// Recurrent policy/value network: one GRU layer followed by a softmax policy
// head over the actions and a scalar value head. Templated on the scalar so
// production runs use float while gradient checks run in double.
//
// Gate layout in the stacked weight rows is (r, z, n):
//   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   n = tanh  (W_in x + b_in + r .* (W_hn h + b_hn))
//   h' = (1 - z) .* n + z .* h
template <typename Scalar>
struct PolicyNet {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    int in = 0, hidden = 0, actions = 0;
    Mat w_ih, w_hh;  // 3H x in, 3H x H
    Vec b_ih, b_hh;  // 3H
    Mat w_pi;        // A x H
    Vec b_pi;        // A
    Mat w_v;         // 1 x H
    Vec b_v;         // 1

    static PolicyNet sized(int in, int hidden, int actions) {
        if (in < 1 || hidden < 1 || actions < 1)
            throw std::invalid_argument("PolicyNet: sizes must be positive");
        PolicyNet net;
        net.in = in;
        net.hidden = hidden;
        net.actions = actions;
        net.w_ih = Mat::Zero(3 * hidden, in);
        net.w_hh = Mat::Zero(3 * hidden, hidden);
        net.b_ih = Vec::Zero(3 * hidden);
        net.b_hh = Vec::Zero(3 * hidden);
        net.w_pi = Mat::Zero(actions, hidden);
        net.b_pi = Vec::Zero(actions);
        net.w_v = Mat::Zero(1, hidden);
        net.b_v = Vec::Zero(1);
        return net;
    }

    // GRU weights ~ Normal(0, 1/sqrt(fan_in)); heads start at zero so the
    // initial policy is uniform and the initial value estimate is zero.
    static PolicyNet init(int in, int hidden, int actions, Rng& rng) {
        PolicyNet net = sized(in, hidden, actions);
        const double s_ih = 1.0 / std::sqrt(static_cast<double>(in));
        const double s_hh = 1.0 / std::sqrt(static_cast<double>(hidden));
        for (Eigen::Index i = 0; i < net.w_ih.size(); ++i)
            net.w_ih.data()[i] = static_cast<Scalar>(rng.normal() * s_ih);
        for (Eigen::Index i = 0; i < net.w_hh.size(); ++i)
            net.w_hh.data()[i] = static_cast<Scalar>(rng.normal() * s_hh);
        return net;
    }

    Eigen::Index param_count() const {
        return w_ih.size() + w_hh.size() + b_ih.size() + b_hh.size() + w_pi.size() +
               b_pi.size() + w_v.size() + b_v.size();
    }

    PolicyNet zeros_like() const { return sized(in, hidden, actions); }

    template <typename Fn>
    void for_each_array(Fn&& fn) {
        fn(w_ih), fn(w_hh), fn(b_ih), fn(b_hh), fn(w_pi), fn(b_pi), fn(w_v), fn(b_v);
    }
    template <typename Fn>
    void for_each_array(Fn&& fn) const {
        fn(w_ih), fn(w_hh), fn(b_ih), fn(b_hh), fn(w_pi), fn(b_pi), fn(w_v), fn(b_v);
    }

    Vec flatten() const {
        Vec out(param_count());
        Eigen::Index at = 0;
        for_each_array([&](const auto& a) {
            out.segment(at, a.size()) = Eigen::Map<const Vec>(a.data(), a.size());
            at += a.size();
        });
        return out;
    }

    void unflatten(const Eigen::Ref<const Vec>& flat) {
        if (flat.size() != param_count()) throw std::invalid_argument("PolicyNet: flat size");
        Eigen::Index at = 0;
        for_each_array([&](auto& a) {
            Eigen::Map<Vec>(a.data(), a.size()) = flat.segment(at, a.size());
            at += a.size();
        });
    }

    bool all_finite() const {
        bool ok = true;
        for_each_array([&](const auto& a) { ok = ok && a.allFinite(); });
        return ok;
    }

    void accumulate(const PolicyNet& g, Scalar scale) {
        w_ih += scale * g.w_ih;
        w_hh += scale * g.w_hh;
        b_ih += scale * g.b_ih;
        b_hh += scale * g.b_hh;
        w_pi += scale * g.w_pi;
        b_pi += scale * g.b_pi;
        w_v += scale * g.w_v;
        b_v += scale * g.b_v;
    }

    // One recurrent step over a batch of columns; H is H x B, updated in place.
    void gru_step(const Eigen::Ref<const Mat>& x, Mat& h) const {
        const int H = hidden;
        Mat a = (w_ih * x).colwise() + b_ih;
        Mat b = (w_hh * h).colwise() + b_hh;
        auto sig = [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); };
        Mat r = (a.topRows(H) + b.topRows(H)).unaryExpr(sig);
        Mat z = (a.middleRows(H, H) + b.middleRows(H, H)).unaryExpr(sig);
        Mat n = (a.bottomRows(H) + r.cwiseProduct(b.bottomRows(H)))
                    .unaryExpr([](Scalar v) { return std::tanh(v); });
        h = (Mat::Ones(H, h.cols()) - z).cwiseProduct(n) + z.cwiseProduct(h);
    }

    // Heads over a batch of hidden columns.
    Mat policy_logits(const Eigen::Ref<const Mat>& h) const {
        return (w_pi * h).colwise() + b_pi;
    }
    Mat value_of(const Eigen::Ref<const Mat>& h) const { return (w_v * h).colwise() + b_v; }
};

// Numerically safe softmax over a column.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e =
        (logits.array() - logits.maxCoeff()).exp().matrix();
    return e / e.sum();
}

template <typename Scalar>
struct PolicyOutput {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probs;
    Scalar value;
};

// Single-step forward used in rollouts and deployment: advances the hidden
// state and produces the action distribution and the value estimate.
template <typename Scalar>
PolicyOutput<Scalar> policy_forward(const PolicyNet<Scalar>& net,
                                    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& obs,
                                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& hidden) {
    if (obs.size() != net.in) throw std::invalid_argument("policy_forward: observation dimension");
    if (hidden.size() != net.hidden) throw std::invalid_argument("policy_forward: hidden dimension");
    typename PolicyNet<Scalar>::Mat h = hidden;
    net.gru_step(obs, h);
    hidden = h.col(0);
    PolicyOutput<Scalar> out;
    out.probs = softmax(net.policy_logits(h).col(0).eval());
    out.value = net.value_of(h)(0, 0);
    return out;
}

// Saved activations of a forward pass over a T-step, B-column chunk, enough
// to run backpropagation through time without recomputation.
template <typename Scalar>
struct GruTape {
    using Mat = typename PolicyNet<Scalar>::Mat;
    std::vector<Mat> x, hprev, r, z, n, m, hpost;  // one entry per step

    int steps() const { return static_cast<int>(x.size()); }
};

// Forward over a chunk. `reset[t]` marks columns whose episode starts at step
// t: their hidden state is zeroed before the step, in both this pass and the
// backward pass. H is carried in and left at the post-chunk state.
template <typename Scalar>
GruTape<Scalar> gru_forward_chunk(const PolicyNet<Scalar>& net,
                                  const std::vector<typename PolicyNet<Scalar>::Mat>& xs,
                                  const std::vector<std::vector<char>>& reset,
                                  typename PolicyNet<Scalar>::Mat& h) {
    using Mat = typename PolicyNet<Scalar>::Mat;
    const int H = net.hidden;
    const int T = static_cast<int>(xs.size());
    if (reset.size() != xs.size()) throw std::invalid_argument("gru_forward_chunk: reset size");
    GruTape<Scalar> tape;
    tape.x.reserve(T), tape.hprev.reserve(T), tape.r.reserve(T), tape.z.reserve(T);
    tape.n.reserve(T), tape.m.reserve(T), tape.hpost.reserve(T);
    auto sig = [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); };
    for (int t = 0; t < T; ++t) {
        const Mat& x = xs[t];
        const int B = static_cast<int>(x.cols());
        if (h.cols() != B) throw std::invalid_argument("gru_forward_chunk: batch width");
        if (static_cast<int>(reset[t].size()) != B)
            throw std::invalid_argument("gru_forward_chunk: reset width");
        for (int b = 0; b < B; ++b)
            if (reset[t][b]) h.col(b).setZero();
        Mat a = (net.w_ih * x).colwise() + net.b_ih;
        Mat g = (net.w_hh * h).colwise() + net.b_hh;
        Mat r = (a.topRows(H) + g.topRows(H)).unaryExpr(sig);
        Mat z = (a.middleRows(H, H) + g.middleRows(H, H)).unaryExpr(sig);
        Mat m = g.bottomRows(H);
        Mat n = (a.bottomRows(H) + r.cwiseProduct(m))
                    .unaryExpr([](Scalar v) { return std::tanh(v); });
        Mat hp = h;
        h = (Mat::Ones(H, B) - z).cwiseProduct(n) + z.cwiseProduct(hp);
        tape.x.push_back(x);
        tape.hprev.push_back(std::move(hp));
        tape.r.push_back(std::move(r));
        tape.z.push_back(std::move(z));
        tape.n.push_back(std::move(n));
        tape.m.push_back(std::move(m));
        tape.hpost.push_back(h);
    }
    return tape;
}

// Backpropagation through the taped chunk. `dh[t]` is dL/d(hpost[t]) from the
// heads; gradients accumulate into `grad`. Hidden gradient does not flow
// across episode starts (matching the forward zeroing).
template <typename Scalar>
void gru_backward_chunk(const PolicyNet<Scalar>& net, const GruTape<Scalar>& tape,
                        const std::vector<typename PolicyNet<Scalar>::Mat>& dh,
                        const std::vector<std::vector<char>>& reset, PolicyNet<Scalar>& grad) {
    using Mat = typename PolicyNet<Scalar>::Mat;
    const int H = net.hidden;
    const int T = tape.steps();
    if (static_cast<int>(dh.size()) != T || static_cast<int>(reset.size()) != T)
        throw std::invalid_argument("gru_backward_chunk: length mismatch");
    if (T == 0) return;
    const int B = static_cast<int>(tape.x[0].cols());
    Mat carry = Mat::Zero(H, B);
    Mat gih(3 * H, B), ghh(3 * H, B);
    for (int t = T - 1; t >= 0; --t) {
        Mat d = dh[t] + carry;
        const Mat& r = tape.r[t];
        const Mat& z = tape.z[t];
        const Mat& n = tape.n[t];
        const Mat& m = tape.m[t];
        const Mat& hprev = tape.hprev[t];
        Mat dn = d.cwiseProduct(Mat::Ones(H, B) - z);
        Mat dz = d.cwiseProduct(hprev - n);
        Mat dhprev = d.cwiseProduct(z);
        Mat dan = dn.cwiseProduct(Mat::Ones(H, B) - n.cwiseProduct(n));
        Mat dm = dan.cwiseProduct(r);
        Mat dr = dan.cwiseProduct(m);
        Mat dar = dr.cwiseProduct(r).cwiseProduct(Mat::Ones(H, B) - r);
        Mat daz = dz.cwiseProduct(z).cwiseProduct(Mat::Ones(H, B) - z);
        gih.topRows(H) = dar;
        gih.middleRows(H, H) = daz;
        gih.bottomRows(H) = dan;
        ghh.topRows(H) = dar;
        ghh.middleRows(H, H) = daz;
        ghh.bottomRows(H) = dm;
        grad.w_ih.noalias() += gih * tape.x[t].transpose();
        grad.w_hh.noalias() += ghh * hprev.transpose();
        grad.b_ih += gih.rowwise().sum();
        grad.b_hh += ghh.rowwise().sum();
        dhprev.noalias() += net.w_hh.transpose() * ghh;
        for (int b = 0; b < B; ++b)
            if (reset[t][b]) dhprev.col(b).setZero();
        carry = std::move(dhprev);
    }
}

// Checkpoint format shared with the model parameters: named arrays, each
// preceded by a "name,rows,cols" line, values at 17 significant digits.
template <typename Scalar>
void save_policy(const PolicyNet<Scalar>& net, const std::string& path) {
    std::string out = "name,rows,cols\n";
    auto emit = [&out](const char* name, const auto& m) {
        out += std::string(name) + "," + std::to_string(m.rows()) + "," +
               std::to_string(m.cols()) + "\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (c) out += ",";
                out += format_g17(static_cast<double>(m(r, c)));
            }
            out += "\n";
        }
    };
    emit("w_ih", net.w_ih);
    emit("w_hh", net.w_hh);
    emit("b_ih", net.b_ih);
    emit("b_hh", net.b_hh);
    emit("w_pi", net.w_pi);
    emit("b_pi", net.b_pi);
    emit("w_v", net.w_v);
    emit("b_v", net.b_v);
    write_file(path, out);
}

template <typename Scalar>
PolicyNet<Scalar> load_policy(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "name,rows,cols")
        throw std::runtime_error("load_policy: bad header in " + path);
    std::map<std::string, typename PolicyNet<Scalar>::Mat> arrays;
    size_t i = 1;
    while (i < lines.size()) {
        const auto head = split_csv_line(lines[i]);
        if (head.size() != 3) throw std::runtime_error("load_policy: bad array header");
        const auto rows = parse_int(head[1]);
        const auto cols = parse_int(head[2]);
        typename PolicyNet<Scalar>::Mat m(rows, cols);
        for (long r = 0; r < rows; ++r) {
            ++i;
            const auto vals = split_csv_line(lines.at(i));
            if (static_cast<long>(vals.size()) != cols)
                throw std::runtime_error("load_policy: bad row width");
            for (long c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(parse_double(vals[c]));
        }
        arrays[head[0]] = std::move(m);
        ++i;
    }
    for (const char* need : {"w_ih", "w_hh", "b_ih", "b_hh", "w_pi", "b_pi", "w_v", "b_v"})
        if (!arrays.count(need)) throw std::runtime_error("load_policy: missing array");
    PolicyNet<Scalar> net;
    net.hidden = static_cast<int>(arrays["w_hh"].cols());
    net.in = static_cast<int>(arrays["w_ih"].cols());
    net.actions = static_cast<int>(arrays["w_pi"].rows());
    net.w_ih = arrays["w_ih"];
    net.w_hh = arrays["w_hh"];
    net.b_ih = arrays["b_ih"].col(0);
    net.b_hh = arrays["b_hh"].col(0);
    net.w_pi = arrays["w_pi"];
    net.b_pi = arrays["b_pi"].col(0);
    net.w_v = arrays["w_v"];
    net.b_v = arrays["b_v"].col(0);
    if (net.w_ih.rows() != 3 * net.hidden || net.w_hh.rows() != 3 * net.hidden ||
        net.w_v.rows() != 1 || net.w_pi.cols() != net.hidden)
        throw std::runtime_error("load_policy: inconsistent shapes");
    return net;
}

}  // namespace memtutor
