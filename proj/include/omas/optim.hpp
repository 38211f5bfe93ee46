#pragma once

#include <cmath>
#include <vector>

#include "omas/errors.hpp"

namespace omas {

// Adam with bias correction and optional decoupled weight decay. Default
// betas are the usual GAN setting; critics get a small decay to keep their
// raw scores from saturating the conjugate.
class Adam {
public:
    Adam(size_t param_count, double lr, double beta1 = 0.5, double beta2 = 0.999,
         double eps = 1e-8, double weight_decay = 0.0)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), decay_(weight_decay),
          m_(param_count, 0.0), v_(param_count, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw ContractError("adam: parameter/gradient size mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            params[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + decay_ * params[i]);
        }
    }

    long steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_, decay_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

} // namespace omas
