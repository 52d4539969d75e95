#pragma once

// Central finite-difference gradient checks for the autodiff engine.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sicl/autodiff.hpp"
#include "sicl/rng.hpp"

namespace sicl::testing {

struct GradCheck {
    double max_rel = 0.0;  // over entries whose gradients are not both ~0
    int checked = 0;
    int failed = 0;
};

// f rebuilds a scalar from the current values of `inputs`. Entries are
// sampled when an input has more than `per_input` of them.
inline GradCheck grad_check(const std::function<nn::Tensor()>& f, const std::vector<nn::Tensor>& inputs,
                            double tol = 1e-5, double eps = 1e-6, int per_input = 40, std::uint64_t seed = 1) {
    for (const auto& t : inputs) t->grad.assign(t->size(), 0.0);
    nn::backward(f());
    std::vector<std::vector<double>> analytic;
    for (const auto& t : inputs) analytic.push_back(t->grad);
    GradCheck out;
    Rng rng(seed);
    nn::NoGrad ng;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto& t = inputs[k];
        std::vector<std::size_t> idx(t->size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (per_input > 0 && idx.size() > static_cast<std::size_t>(per_input)) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(per_input);
        }
        for (std::size_t i : idx) {
            const double x0 = t->value[i];
            t->value[i] = x0 + eps;
            const double fp = f()->value[0];
            t->value[i] = x0 - eps;
            const double fm = f()->value[0];
            t->value[i] = x0;
            const double num = (fp - fm) / (2.0 * eps);
            const double a = analytic[k][i];
            const double diff = std::abs(a - num);
            ++out.checked;
            if (diff <= 1e-9) continue;
            const double rel = diff / std::max(std::abs(a), std::abs(num));
            out.max_rel = std::max(out.max_rel, rel);
            if (rel > tol) ++out.failed;
        }
    }
    return out;
}

// Random fixed weighting that turns any tensor into a scalar.
inline nn::Tensor weighted_sum(const nn::Tensor& x, std::uint64_t seed = 99) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(x->size());
    for (double& v : c) v = u(rng);
    const int n = static_cast<int>(x->size());
    return nn::linear(nn::reshape(x, {1, n}), nn::constant({n, 1}, std::move(c)), nullptr);
}

inline std::vector<double> random_values(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

inline nn::Tensor random_param(nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    const std::size_t n = nn::numel(shape);
    return nn::parameter(std::move(shape), random_values(n, rng, lo, hi));
}

}  // namespace sicl::testing
