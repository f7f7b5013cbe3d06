#pragma once

#include <vector>

#include "tadbench/autodiff.hpp"

namespace tad {

// In-place SGD update over parameter leaves; skips params with no gradient.
void sgd_step(const std::vector<ad::NodePtr>& params, double lr);

class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<ad::NodePtr>& params);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;  // first/second moment, indexed like params
};

}  // namespace tad
