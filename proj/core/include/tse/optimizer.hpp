#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace tse {

/// Adaptive moment estimation with bias correction. State is owned by the
/// instance; one instance per parameter vector being trained.
class AdamOptimizer {
public:
    AdamOptimizer(std::size_t n_params, double learning_rate = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double epsilon = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon),
          m_(n_params, 0.0), v_(n_params, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        if (params.size() != m_.size() || grad.size() != m_.size())
            throw std::invalid_argument("adam: parameter/gradient size mismatch");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double m_hat = m_[i] / c1;
            const double v_hat = v_[i] / c2;
            params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
        }
    }

    long iteration() const { return t_; }

private:
    double lr_, beta1_, beta2_, epsilon_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

} // namespace tse
