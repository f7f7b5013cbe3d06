#include "tadbench/optim.hpp"

#include <cmath>

namespace tad {

void sgd_step(const std::vector<ad::NodePtr>& params, double lr) {
    for (const auto& p : params) {
        if (!p->has_grad) continue;
        p->value.add_scaled_in_place(p->grad, -lr);
    }
}

void AdamOptimizer::step(const std::vector<ad::NodePtr>& params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.push_back(Tensor::zeros_like(p->value));
            v_.push_back(Tensor::zeros_like(p->value));
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (!p->has_grad) continue;
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < p->value.numel(); ++j) {
            const double g = p->grad[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p->value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace tad
