#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace memtutor {

// Adam with bias correction. The learning rate is supplied per step so the
// caller owns the schedule.
template <typename Scalar = double>
class Adam {
public:
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Adam() = default;
    explicit Adam(Eigen::Index n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vec::Zero(n)), v_(Vec::Zero(n)) {
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0))
            throw std::invalid_argument("Adam: bad hyperparameters");
    }

    Eigen::Index size() const { return m_.size(); }
    long steps() const { return t_; }

    void step(Eigen::Ref<Vec> params, const Eigen::Ref<const Vec>& grad, double lr) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw std::invalid_argument("Adam: size mismatch");
        ++t_;
        const Scalar b1 = static_cast<Scalar>(beta1_);
        const Scalar b2 = static_cast<Scalar>(beta2_);
        m_ = b1 * m_ + (Scalar(1) - b1) * grad;
        v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseProduct(grad);
        const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(beta1_, t_));
        const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(beta2_, t_));
        const Scalar a = static_cast<Scalar>(lr) / c1;
        const Vec denom = ((v_ / c2).cwiseSqrt().array() + static_cast<Scalar>(eps_)).matrix();
        params -= a * m_.cwiseQuotient(denom);
    }

    void reset() {
        m_.setZero();
        v_.setZero();
        t_ = 0;
    }

private:
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    Vec m_, v_;
    long t_ = 0;
};

}  // namespace memtutor
