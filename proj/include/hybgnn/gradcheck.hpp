#pragma once

#include "hybgnn/autodiff.hpp"

#include <functional>
#include <span>
#include <vector>

namespace hybgnn {

// f maps a list of parameter leaves to a scalar Var. It must be a pure
// function of the leaf values (it is re-evaluated for every perturbation).
using ScalarFn = std::function<Var(std::span<const Var>)>;

struct GradCheckReport {
    double max_relative_error = 0.0;
    // Max relative error restricted to each parameter tensor, in input order.
    std::vector<double> per_param;
    // Smallest |relu pre-activation| seen at the unperturbed point.
    double min_kink_distance = 0.0;
    int attempts = 1;
};

// Compares reverse-mode gradients of f against central differences
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
// at the given point. eps must lie in (0, 1e-2].
GradCheckReport gradient_check(const ScalarFn& f, std::span<const Tensor> params, double eps);

// Same, but draws the evaluation point from `sample(attempt)` and redraws
// while a relu pre-activation lies within 10 * eps of its kink.
GradCheckReport gradient_check(const ScalarFn& f, const std::function<std::vector<Tensor>(int)>& sample,
                               double eps, int max_attempts = 50);

}  // namespace hybgnn
