#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "memtutor/csv.hpp"

namespace memtutor {

enum class ParamFamily { alpha = 0, delta = 1, beta = 2, theta = 3, phi = 4 };
inline constexpr int kFamilyCount = 5;
inline constexpr std::array<ParamFamily, kFamilyCount> kAllFamilies = {
    ParamFamily::alpha, ParamFamily::delta, ParamFamily::beta,
    ParamFamily::theta, ParamFamily::phi};

inline const char* family_name(ParamFamily f) {
    switch (f) {
        case ParamFamily::alpha: return "alpha";
        case ParamFamily::delta: return "delta";
        case ParamFamily::beta: return "beta";
        case ParamFamily::theta: return "theta";
        case ParamFamily::phi: return "phi";
    }
    return "?";
}

// All memory-model parameters for one model instance: learner ability alpha,
// per-item difficulty delta, per-skill proficiency beta, and the per
// (skill, window) weights theta (correct counts) and phi (attempt counts).
struct ParamSet {
    double alpha = 0.0;
    Eigen::VectorXd delta;   // J
    Eigen::VectorXd beta;    // K
    Eigen::MatrixXd theta;   // K x W
    Eigen::MatrixXd phi;     // K x W

    ParamSet() = default;
    ParamSet(int items, int skills, int windows)
        : delta(Eigen::VectorXd::Zero(items)),
          beta(Eigen::VectorXd::Zero(skills)),
          theta(Eigen::MatrixXd::Zero(skills, windows)),
          phi(Eigen::MatrixXd::Zero(skills, windows)) {}

    int items() const { return static_cast<int>(delta.size()); }
    int skills() const { return static_cast<int>(beta.size()); }
    int windows() const { return static_cast<int>(theta.cols()); }
    Eigen::Index size() const { return 1 + delta.size() + beta.size() + theta.size() + phi.size(); }

    bool same_shape(const ParamSet& o) const {
        return items() == o.items() && skills() == o.skills() && windows() == o.windows();
    }

    bool all_finite() const {
        return std::isfinite(alpha) && delta.allFinite() && beta.allFinite() &&
               theta.allFinite() && phi.allFinite();
    }

    ParamSet zeros_like() const { return ParamSet(items(), skills(), windows()); }

    Eigen::Index family_size(ParamFamily f) const {
        switch (f) {
            case ParamFamily::alpha: return 1;
            case ParamFamily::delta: return delta.size();
            case ParamFamily::beta: return beta.size();
            case ParamFamily::theta: return theta.size();
            case ParamFamily::phi: return phi.size();
        }
        return 0;
    }

    // Layout of the flat vector: [alpha, delta, beta, theta (col-major), phi].
    Eigen::VectorXd flatten() const {
        Eigen::VectorXd v(size());
        Eigen::Index at = 0;
        v[at++] = alpha;
        v.segment(at, delta.size()) = delta;
        at += delta.size();
        v.segment(at, beta.size()) = beta;
        at += beta.size();
        v.segment(at, theta.size()) = Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());
        at += theta.size();
        v.segment(at, phi.size()) = Eigen::Map<const Eigen::VectorXd>(phi.data(), phi.size());
        return v;
    }

    void unflatten(const Eigen::VectorXd& v) {
        if (v.size() != size()) throw std::invalid_argument("ParamSet: flat vector size mismatch");
        Eigen::Index at = 0;
        alpha = v[at++];
        delta = v.segment(at, delta.size());
        at += delta.size();
        beta = v.segment(at, beta.size());
        at += beta.size();
        Eigen::Map<Eigen::VectorXd>(theta.data(), theta.size()) = v.segment(at, theta.size());
        at += theta.size();
        Eigen::Map<Eigen::VectorXd>(phi.data(), phi.size()) = v.segment(at, phi.size());
    }

    Eigen::Index family_offset(ParamFamily f) const {
        Eigen::Index off = 0;
        for (ParamFamily g : kAllFamilies) {
            if (g == f) return off;
            off += family_size(g);
        }
        return off;
    }
};

// Checkpoint container: named arrays with a shape header per array, values at
// 17 significant digits so a save/load round trip is bit exact.
inline void save_param_set(const ParamSet& p, const std::string& path) {
    std::string out = "name,rows,cols\n";
    auto emit = [&out](const char* name, const Eigen::MatrixXd& m) {
        out += std::string(name) + "," + std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (c) out += ",";
                out += format_g17(m(r, c));
            }
            out += "\n";
        }
    };
    emit("alpha", Eigen::MatrixXd::Constant(1, 1, p.alpha));
    emit("delta", p.delta);
    emit("beta", p.beta);
    emit("theta", p.theta);
    emit("phi", p.phi);
    write_file(path, out);
}

inline ParamSet load_param_set(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "name,rows,cols")
        throw std::runtime_error("parameter checkpoint needs a name,rows,cols header: " + path);
    ParamSet p;
    size_t i = 1;
    auto read_array = [&](const std::string& expect) {
        if (i >= lines.size()) throw std::runtime_error("checkpoint truncated: " + path);
        const auto head = split_csv_line(lines[i++]);
        if (head.size() != 3 || head[0] != expect)
            throw std::runtime_error("checkpoint: expected array '" + expect + "'");
        const auto rows = parse_int(head[1]);
        const auto cols = parse_int(head[2]);
        Eigen::MatrixXd m(rows, cols);
        for (long long r = 0; r < rows; ++r) {
            const auto vals = split_csv_line(lines[i++]);
            if (static_cast<long long>(vals.size()) != cols)
                throw std::runtime_error("checkpoint: bad row width in " + expect);
            for (long long c = 0; c < cols; ++c) m(r, c) = parse_double(vals[c]);
        }
        return m;
    };
    p.alpha = read_array("alpha")(0, 0);
    p.delta = read_array("delta").col(0);
    p.beta = read_array("beta").col(0);
    p.theta = read_array("theta");
    p.phi = read_array("phi");
    if (!p.all_finite()) throw std::runtime_error("checkpoint holds non-finite values: " + path);
    return p;
}

}  // namespace memtutor
