#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "tadbench/autodiff.hpp"

namespace tad::test {

// |a - b| scaled so values near zero do not blow the error up.
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Worst relative error between param's accumulated gradient and central
// finite differences of loss_value, which must recompute the forward pass
// from the current parameter values on every call.
inline double max_grad_rel_err(const ad::NodePtr& param,
                               const std::function<double()>& loss_value,
                               double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t i = 0; i < param->value.numel(); ++i) {
        const double x0 = param->value[i];
        param->value[i] = x0 + h;
        const double fp = loss_value();
        param->value[i] = x0 - h;
        const double fm = loss_value();
        param->value[i] = x0;
        const double fd = (fp - fm) / (2.0 * h);
        const double g = param->has_grad ? param->grad[i] : 0.0;
        worst = std::max(worst, rel_err(g, fd));
    }
    return worst;
}

}  // namespace tad::test
