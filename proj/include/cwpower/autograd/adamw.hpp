#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cwpower/autograd/tensor.hpp"
#include "cwpower/errors.hpp"

namespace cwpower::ag {

struct AdamWConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-2;
};

/// Moments are kept in double for every parameter group, whatever the parameter type.
struct AdamWState {
    AdamWConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// One AdamW update over parameter groups. Decoupled decay: p <- p (1 - lr wd), then the
/// bias-corrected Adam step. Throws NumericalError on a non-finite gradient, before any
/// parameter is touched.
template <typename T>
void adamw_step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads,
                AdamWState& state, std::span<const std::string> names = {}) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("adamw_step: parameter/gradient group count mismatch");
    }
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t g = 0; g < params.size(); ++g) {
            state.m[g].assign(params[g].size(), 0.0);
            state.v[g].assign(params[g].size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        throw std::invalid_argument("adamw_step: optimizer state tracks a different parameter set");
    }
    for (std::size_t g = 0; g < params.size(); ++g) {
        if (params[g].size() != grads[g].size() || state.m[g].size() != params[g].size()) {
            throw std::invalid_argument("adamw_step: shape mismatch in parameter group " + std::to_string(g));
        }
        for (std::size_t i = 0; i < grads[g].size(); ++i) {
            if (!std::isfinite(grads[g][i])) {
                const std::string name = g < names.size() ? names[g] : "group " + std::to_string(g);
                throw NumericalError("adamw_step: non-finite gradient in " + name + " element " +
                                     std::to_string(i) + " at step " + std::to_string(state.step + 1));
            }
        }
    }

    const AdamWConfig& c = state.config;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double corr1 = 1.0 - std::pow(c.beta1, t);
    const double corr2 = 1.0 - std::pow(c.beta2, t);
    const double decay = 1.0 - c.lr * c.weight_decay;
    for (std::size_t g = 0; g < params.size(); ++g) {
        auto& m = state.m[g];
        auto& v = state.v[g];
        for (std::size_t i = 0; i < params[g].size(); ++i) {
            const double grad = grads[g][i];
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad;
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad * grad;
            const double m_hat = m[i] / corr1;
            const double v_hat = v[i] / corr2;
            double p = static_cast<double>(params[g][i]) * decay;
            p -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
            params[g][i] = static_cast<T>(p);
        }
    }
}

/// Convenience overload for leaf tensors carrying accumulated gradients. Tensors that have
/// not received a gradient are treated as having a zero gradient.
template <typename T>
void adamw_step(std::span<Tensor<T>> params, AdamWState& state, std::span<const std::string> names = {}) {
    std::vector<std::span<T>> p;
    std::vector<std::vector<T>> zero_storage;
    std::vector<std::span<const T>> g;
    p.reserve(params.size());
    g.reserve(params.size());
    zero_storage.reserve(params.size());
    for (Tensor<T>& t : params) {
        p.push_back(t.mutable_values());
        if (t.has_grad()) {
            g.push_back(t.grad());
        } else {
            zero_storage.emplace_back(t.size(), T{0});
            g.push_back(zero_storage.back());
        }
    }
    adamw_step<T>(std::span<const std::span<T>>(p), std::span<const std::span<const T>>(g), state, names);
}

}  // namespace cwpower::ag
