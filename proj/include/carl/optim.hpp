#pragma once
// RMSprop parameter update: acc <- rho*acc + (1-rho)*g^2,
// p <- p - lr * g / (sqrt(acc) + eps).

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "carl/errors.hpp"

namespace carl {

struct RmspropConfig {
    double lr = 1e-3;
    double rho = 0.9;
    double eps = 1e-8;
};

/// Squared-gradient accumulator for one parameter tensor.
struct RmspropState {
    std::vector<double> acc;
    void ensure(std::size_t n) {
        if (acc.size() != n) acc.assign(n, 0.0);
    }
};

inline void rmsprop_step(double* params, const double* grads, std::size_t n,
                         RmspropState& state, const RmspropConfig& cfg) {
    if (cfg.lr <= 0.0) throw ConfigError("rmsprop learning rate must be > 0, got " + std::to_string(cfg.lr));
    state.ensure(n);
    double* acc = state.acc.data();
    for (std::size_t i = 0; i < n; ++i) {
        double g = grads[i];
        acc[i] = cfg.rho * acc[i] + (1.0 - cfg.rho) * g * g;
        params[i] -= cfg.lr * g / (std::sqrt(acc[i]) + cfg.eps);
    }
}

inline void rmsprop_step(std::vector<double>& params, const std::vector<double>& grads,
                         RmspropState& state, const RmspropConfig& cfg) {
    if (params.size() != grads.size())
        throw ShapeError("rmsprop: params/grads size mismatch " + std::to_string(params.size()) + " vs " +
                         std::to_string(grads.size()));
    rmsprop_step(params.data(), grads.data(), params.size(), state, cfg);
}

}  // namespace carl
