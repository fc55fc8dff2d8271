#pragma once

#include <cmath>
#include <vector>

#include "ctseg/network.hpp"

namespace ctseg {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam update on one flat parameter buffer. `step` must already be
// incremented to the current step index (1-based) before the call so the
// bias correction sees it.
template <typename T>
void adam_update(std::vector<T>& params, const std::vector<T>& grads, std::vector<T>& m,
                 std::vector<T>& v, long step, const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size())
        throw ShapeError("adam: buffer size mismatch");
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double mhat = mi / c1;
        const double vhat = vi / c2;
        params[i] -= static_cast<T>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
}

// Optimizer state for a whole network: first/second moments mirror the
// trainable parameter buffers.
template <typename T>
struct AdamState {
    NetworkParams<T> m;
    NetworkParams<T> v;
    long step = 0;
    AdamConfig cfg;

    AdamState() = default;
    AdamState(const NetworkSpec& spec, const NetworkParams<T>& params, const AdamConfig& c)
        : m(zero_grads(spec, params)), v(zero_grads(spec, params)), cfg(c) {}
};

template <typename T>
void adam_step(NetworkParams<T>& params, const NetworkParams<T>& grads, AdamState<T>& state) {
    ++state.step;
    for (size_t i = 0; i < params.layers.size(); ++i) {
        LayerParams<T>& p = params.layers[i];
        const LayerParams<T>& g = grads.layers[i];
        LayerParams<T>& m = state.m.layers[i];
        LayerParams<T>& v = state.v.layers[i];
        if (!p.w.empty()) adam_update(p.w, g.w, m.w, v.w, state.step, state.cfg);
        if (!p.b.empty()) adam_update(p.b, g.b, m.b, v.b, state.step, state.cfg);
        if (!p.gamma.empty()) adam_update(p.gamma, g.gamma, m.gamma, v.gamma, state.step, state.cfg);
        if (!p.beta.empty()) adam_update(p.beta, g.beta, m.beta, v.beta, state.step, state.cfg);
        if (!p.slope.empty()) adam_update(p.slope, g.slope, m.slope, v.slope, state.step, state.cfg);
    }
}

} // namespace ctseg
