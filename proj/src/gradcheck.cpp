#include "hybgnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hybgnn {

GradCheckReport gradient_check(const ScalarFn& f, std::span<const Tensor> params, double eps) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw std::invalid_argument("gradient_check: eps must lie in (0, 1e-2]");

    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(parameter(p));

    GradCheckReport report;
    {
        KinkMonitor monitor;
        Var root = f(leaves);
        backward(root);
        report.min_kink_distance = monitor.min_abs_preactivation();
    }

    auto evaluate = [&] { return f(leaves).value().item(); };
    report.per_param.assign(leaves.size(), 0.0);
    for (std::size_t p = 0; p < leaves.size(); ++p) {
        Tensor& value = leaves[p].mutable_value();
        const Tensor& analytic = leaves[p].grad();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + eps;
            const double up = evaluate();
            value[i] = saved - eps;
            const double down = evaluate();
            value[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
            report.per_param[p] = std::max(report.per_param[p], std::abs(analytic[i] - numeric) / denom);
        }
        report.max_relative_error = std::max(report.max_relative_error, report.per_param[p]);
    }
    return report;
}

GradCheckReport gradient_check(const ScalarFn& f, const std::function<std::vector<Tensor>(int)>& sample,
                               double eps, int max_attempts) {
    for (int attempt = 0;; ++attempt) {
        std::vector<Tensor> point = sample(attempt);
        double kink = 0.0;
        {
            std::vector<Var> leaves;
            for (const auto& p : point) leaves.push_back(constant(p));
            KinkMonitor monitor;
            f(leaves);
            kink = monitor.min_abs_preactivation();
        }
        if (kink >= 10.0 * eps || attempt + 1 >= max_attempts) {
            GradCheckReport r = gradient_check(f, point, eps);
            r.attempts = attempt + 1;
            return r;
        }
    }
}

}  // namespace hybgnn
