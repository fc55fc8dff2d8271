#pragma once

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "ctseg/network.hpp"
#include "ctseg/rng.hpp"

// Central-difference gradient oracle. Checks every trainable parameter
// and the input gradient of the scalar loss sum(net(x) * R) against the
// analytic backward pass, where R is a fixed random projection. Run in
// 64-bit mode (T = double).

namespace ctseg {

namespace detail {

template <typename T>
double projected_loss(const NetworkSpec& spec, NetworkParams<T>& params, const Tensor4<T>& x,
                      const Tensor4<T>& proj) {
    const Tensor4<T> out =
        forward(spec, params, x, Mode::Train, static_cast<Trace<T>*>(nullptr), false);
    double acc = 0.0;
    for (size_t i = 0; i < out.size(); ++i)
        acc += static_cast<double>(out.data[i]) * static_cast<double>(proj.data[i]);
    return acc;
}

} // namespace detail

struct GradCheckOptions {
    double h = 1e-5;
    double rel_floor = 1e-3; // denominator floor for near-zero gradient pairs
    unsigned threads = 0;    // 0 = hardware concurrency
};

template <typename T>
double grad_check(const NetworkSpec& spec, const NetworkParams<T>& params, const Tensor4<T>& x,
                  std::uint64_t proj_seed, GradCheckOptions opt = {}) {
    const Shape4 out_shape = output_shape(spec, {x.n, x.c, x.h, x.w});
    Tensor4<T> proj(out_shape.n, out_shape.c, out_shape.h, out_shape.w);
    Rng rng(proj_seed);
    for (T& v : proj.data) v = static_cast<T>(rng.uniform(-1.0, 1.0));

    // analytic gradients
    NetworkParams<T> work = params;
    Trace<T> trace;
    forward(spec, work, x, Mode::Train, &trace, false);
    const BackwardResult<T> analytic = backward(spec, work, trace, proj);

    // flat probe list: (-1, idx) probes the input, (layer, buffer, idx) a parameter
    struct Probe {
        int layer;
        int buffer; // 0=w 1=b 2=gamma 3=beta 4=slope, -1 = input
        size_t idx;
        double analytic_grad;
    };
    std::vector<Probe> probes;
    auto buffer_of = [](auto& lp, int which) -> auto& {
        switch (which) {
        case 0: return lp.w;
        case 1: return lp.b;
        case 2: return lp.gamma;
        case 3: return lp.beta;
        default: return lp.slope;
        }
    };
    for (size_t li = 0; li < work.layers.size(); ++li) {
        for (int b = 0; b < 5; ++b) {
            const std::vector<T>& grads = buffer_of(analytic.grads.layers[li], b);
            for (size_t j = 0; j < grads.size(); ++j)
                probes.push_back({static_cast<int>(li), b, j, static_cast<double>(grads[j])});
        }
    }
    for (size_t j = 0; j < x.size(); ++j)
        probes.push_back({-1, -1, j, static_cast<double>(analytic.grad_input.data[j])});

    unsigned n_threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, 16);
    std::vector<double> worst(n_threads, 0.0);
    auto run_chunk = [&](unsigned tid) {
        NetworkParams<T> local = params;
        Tensor4<T> local_x = x;
        double local_max = 0.0;
        for (size_t pi = tid; pi < probes.size(); pi += n_threads) {
            const Probe& p = probes[pi];
            T* slot = p.layer < 0 ? &local_x.data[p.idx]
                                  : &buffer_of(local.layers[p.layer], p.buffer)[p.idx];
            const T saved = *slot;
            *slot = saved + static_cast<T>(opt.h);
            const double lp = detail::projected_loss(spec, local, local_x, proj);
            *slot = saved - static_cast<T>(opt.h);
            const double lm = detail::projected_loss(spec, local, local_x, proj);
            *slot = saved;
            const double numeric = (lp - lm) / (2.0 * opt.h);
            const double denom = std::max(std::fabs(p.analytic_grad) + std::fabs(numeric),
                                          opt.rel_floor);
            local_max = std::max(local_max, std::fabs(p.analytic_grad - numeric) / denom);
        }
        worst[tid] = local_max;
    };
    if (n_threads == 1) {
        run_chunk(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(run_chunk, t);
        for (std::thread& t : pool) t.join();
    }
    return *std::max_element(worst.begin(), worst.end());
}

} // namespace ctseg
