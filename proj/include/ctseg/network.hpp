#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctseg/nn.hpp"
#include "ctseg/rng.hpp"
#include "ctseg/tensor.hpp"

// Sequential network with explicit residual-block markers and an optional
// global input->output additive skip. The architectures here are static
// chains, so backpropagation walks the layer list in reverse instead of
// using a general autodiff tape.

namespace ctseg {

enum class LayerKind : std::uint32_t {
    Conv2d = 1,
    BatchNorm = 2,
    PReLU = 3,
    LeakyReLU = 4,
    PixelShuffle = 5,
    Dense = 6,
    Sigmoid = 7,
    AvgPool = 8,
    ResBlockBegin = 9,
    ResBlockEnd = 10,
};

struct LayerSpec {
    LayerKind kind;
    int in_ch = 0, out_ch = 0, k = 3, stride = 1, pad = 1; // conv
    int ch = 0;                                            // batchnorm / prelu
    double alpha = 0.2;                                    // leaky slope
    double eps = 1e-5, momentum = 0.1;                     // batchnorm
    int r = 2;                                             // pixel shuffle
    int in_dim = 0, out_dim = 0;                           // dense

    static LayerSpec conv(int in_ch, int out_ch, int stride = 1, int k = 3, int pad = 1) {
        LayerSpec s{LayerKind::Conv2d};
        s.in_ch = in_ch;
        s.out_ch = out_ch;
        s.k = k;
        s.stride = stride;
        s.pad = pad;
        return s;
    }
    static LayerSpec batchnorm(int ch) {
        LayerSpec s{LayerKind::BatchNorm};
        s.ch = ch;
        return s;
    }
    static LayerSpec prelu(int ch) {
        LayerSpec s{LayerKind::PReLU};
        s.ch = ch;
        return s;
    }
    static LayerSpec leaky_relu(double alpha = 0.2) {
        LayerSpec s{LayerKind::LeakyReLU};
        s.alpha = alpha;
        return s;
    }
    static LayerSpec pixel_shuffle(int r) {
        LayerSpec s{LayerKind::PixelShuffle};
        s.r = r;
        return s;
    }
    static LayerSpec dense(int in_dim, int out_dim) {
        LayerSpec s{LayerKind::Dense};
        s.in_dim = in_dim;
        s.out_dim = out_dim;
        return s;
    }
    static LayerSpec sigmoid() { return LayerSpec{LayerKind::Sigmoid}; }
    static LayerSpec avgpool() { return LayerSpec{LayerKind::AvgPool}; }
    static LayerSpec res_begin() { return LayerSpec{LayerKind::ResBlockBegin}; }
    static LayerSpec res_end() { return LayerSpec{LayerKind::ResBlockEnd}; }
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    bool global_skip = false; // out = in + f(in); requires matching shapes
};

struct Shape4 {
    int n, c, h, w;
    bool operator==(const Shape4&) const = default;
};

// Walks the layer list and validates the end-to-end shape algebra before
// any arithmetic runs. Returns the input shape of every layer plus the
// final output shape at the back.
inline std::vector<Shape4> validate_shapes(const NetworkSpec& spec, Shape4 in) {
    std::vector<Shape4> shapes;
    std::vector<std::pair<size_t, Shape4>> res_stack;
    Shape4 cur = in;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        shapes.push_back(cur);
        switch (l.kind) {
        case LayerKind::Conv2d: {
            if (cur.c != l.in_ch)
                throw ShapeError("layer " + std::to_string(i) + ": conv expects " +
                                 std::to_string(l.in_ch) + " channels, got " +
                                 std::to_string(cur.c));
            const int oh = nn::conv_out_dim(cur.h, l.k, l.stride, l.pad);
            const int ow = nn::conv_out_dim(cur.w, l.k, l.stride, l.pad);
            if (oh < 1 || ow < 1)
                throw ShapeError("layer " + std::to_string(i) + ": conv output empty");
            cur = {cur.n, l.out_ch, oh, ow};
            break;
        }
        case LayerKind::BatchNorm:
            if (cur.c != l.ch) throw ShapeError("layer " + std::to_string(i) + ": batchnorm channel mismatch");
            break;
        case LayerKind::PReLU:
            if (cur.c != l.ch) throw ShapeError("layer " + std::to_string(i) + ": prelu channel mismatch");
            break;
        case LayerKind::LeakyReLU:
        case LayerKind::Sigmoid:
            break;
        case LayerKind::PixelShuffle:
            if (cur.c % (l.r * l.r) != 0)
                throw ShapeError("layer " + std::to_string(i) + ": pixel shuffle channel mismatch");
            cur = {cur.n, cur.c / (l.r * l.r), cur.h * l.r, cur.w * l.r};
            break;
        case LayerKind::Dense:
            if (cur.c * cur.h * cur.w != l.in_dim)
                throw ShapeError("layer " + std::to_string(i) + ": dense expects " +
                                 std::to_string(l.in_dim) + " inputs, got " +
                                 std::to_string(cur.c * cur.h * cur.w));
            cur = {cur.n, l.out_dim, 1, 1};
            break;
        case LayerKind::AvgPool:
            if (cur.h < 2 || cur.w < 2)
                throw ShapeError("layer " + std::to_string(i) + ": avgpool input too small");
            cur = {cur.n, cur.c, cur.h / 2, cur.w / 2};
            break;
        case LayerKind::ResBlockBegin:
            res_stack.emplace_back(i, cur);
            break;
        case LayerKind::ResBlockEnd:
            if (res_stack.empty())
                throw ShapeError("layer " + std::to_string(i) + ": unmatched residual end");
            if (!(res_stack.back().second == cur))
                throw ShapeError("layer " + std::to_string(i) + ": residual shape mismatch");
            res_stack.pop_back();
            break;
        }
    }
    if (!res_stack.empty()) throw ShapeError("unmatched residual begin");
    if (spec.global_skip && !(cur == in)) throw ShapeError("global skip shape mismatch");
    shapes.push_back(cur);
    return shapes;
}

inline Shape4 output_shape(const NetworkSpec& spec, Shape4 in) {
    return validate_shapes(spec, in).back();
}

// ---------------------------------------------------------------------------
// parameters

template <typename T>
struct LayerParams {
    std::vector<T> w, b;                           // conv / dense
    std::vector<T> gamma, beta, run_mean, run_var; // batchnorm
    std::vector<T> slope;                          // prelu
    bool stats_ready = false;                      // batchnorm running stats seen a train step
};

template <typename T>
struct NetworkParams {
    std::vector<LayerParams<T>> layers;

    template <typename U>
    NetworkParams<U> cast() const {
        NetworkParams<U> out;
        out.layers.resize(layers.size());
        for (size_t i = 0; i < layers.size(); ++i) {
            auto conv = [](const std::vector<T>& v) {
                std::vector<U> o(v.size());
                for (size_t j = 0; j < v.size(); ++j) o[j] = static_cast<U>(v[j]);
                return o;
            };
            out.layers[i].w = conv(layers[i].w);
            out.layers[i].b = conv(layers[i].b);
            out.layers[i].gamma = conv(layers[i].gamma);
            out.layers[i].beta = conv(layers[i].beta);
            out.layers[i].run_mean = conv(layers[i].run_mean);
            out.layers[i].run_var = conv(layers[i].run_var);
            out.layers[i].slope = conv(layers[i].slope);
            out.layers[i].stats_ready = layers[i].stats_ready;
        }
        return out;
    }
};

// Kaiming fan-in init for conv/dense, PReLU slopes 0.25, BN gamma 1 beta 0.
template <typename T>
NetworkParams<T> init_params(const NetworkSpec& spec, std::uint64_t seed) {
    NetworkParams<T> params;
    params.layers.resize(spec.layers.size());
    Rng rng(seed);
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        LayerParams<T>& p = params.layers[i];
        switch (l.kind) {
        case LayerKind::Conv2d: {
            const size_t fan_in = static_cast<size_t>(l.in_ch) * l.k * l.k;
            const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
            p.w.resize(static_cast<size_t>(l.out_ch) * fan_in);
            for (T& v : p.w) v = static_cast<T>(std_dev * rng.normal());
            p.b.assign(l.out_ch, T(0));
            break;
        }
        case LayerKind::Dense: {
            const double std_dev = std::sqrt(2.0 / static_cast<double>(l.in_dim));
            p.w.resize(static_cast<size_t>(l.out_dim) * l.in_dim);
            for (T& v : p.w) v = static_cast<T>(std_dev * rng.normal());
            p.b.assign(l.out_dim, T(0));
            break;
        }
        case LayerKind::BatchNorm:
            p.gamma.assign(l.ch, T(1));
            p.beta.assign(l.ch, T(0));
            p.run_mean.assign(l.ch, T(0));
            p.run_var.assign(l.ch, T(1));
            break;
        case LayerKind::PReLU:
            p.slope.assign(l.ch, T(0.25));
            break;
        default:
            break;
        }
    }
    return params;
}

// Applies fn to every trainable buffer, in a fixed layer-major order.
// Running statistics are buffers, not parameters, and are skipped.
template <typename T, typename Fn>
void for_each_param(NetworkParams<T>& params, Fn&& fn) {
    for (size_t i = 0; i < params.layers.size(); ++i) {
        LayerParams<T>& p = params.layers[i];
        if (!p.w.empty()) fn(i, std::string("w"), p.w);
        if (!p.b.empty()) fn(i, std::string("b"), p.b);
        if (!p.gamma.empty()) fn(i, std::string("gamma"), p.gamma);
        if (!p.beta.empty()) fn(i, std::string("beta"), p.beta);
        if (!p.slope.empty()) fn(i, std::string("slope"), p.slope);
    }
}

template <typename T>
size_t param_count(const NetworkParams<T>& params) {
    size_t n = 0;
    for (const LayerParams<T>& p : params.layers)
        n += p.w.size() + p.b.size() + p.gamma.size() + p.beta.size() + p.slope.size();
    return n;
}

// ---------------------------------------------------------------------------
// forward / backward

enum class Mode { Train, Eval };

template <typename T>
struct Trace {
    std::vector<Tensor4<T>> inputs;              // input activation per layer
    std::vector<nn::BatchNormCache<T>> bn_cache; // per layer (bn layers only)
    std::vector<Tensor4<T>> sigmoid_out;         // per layer (sigmoid layers only)
    Tensor4<T> input;
    Tensor4<T> output;
};

template <typename T>
Tensor4<T> forward(const NetworkSpec& spec, NetworkParams<T>& params, const Tensor4<T>& x,
                   Mode mode, Trace<T>* trace = nullptr, bool update_stats = false) {
    validate_shapes(spec, {x.n, x.c, x.h, x.w});
    if (trace) {
        trace->inputs.clear();
        trace->bn_cache.assign(spec.layers.size(), {});
        trace->sigmoid_out.assign(spec.layers.size(), {});
        trace->input = x;
    }
    std::vector<Tensor4<T>> skip_stack;
    Tensor4<T> act = x;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        LayerParams<T>& p = params.layers[i];
        if (trace) trace->inputs.push_back(act);
        switch (l.kind) {
        case LayerKind::Conv2d:
            act = nn::conv2d_forward(act, p.w, p.b, l.out_ch, l.k, l.stride, l.pad);
            break;
        case LayerKind::BatchNorm:
            if (mode == Mode::Train) {
                nn::BatchNormCache<T> cache;
                act = nn::batchnorm_forward_train(act, p.gamma, p.beta, p.run_mean, p.run_var,
                                                  update_stats, l.momentum, l.eps,
                                                  trace ? &cache : nullptr);
                if (update_stats) p.stats_ready = true;
                if (trace) trace->bn_cache[i] = std::move(cache);
            } else {
                if (!p.stats_ready)
                    throw ParamError("batchnorm: eval before any training step");
                act = nn::batchnorm_forward_eval(act, p.gamma, p.beta, p.run_mean, p.run_var,
                                                 l.eps);
            }
            break;
        case LayerKind::PReLU:
            act = nn::prelu_forward(act, p.slope);
            break;
        case LayerKind::LeakyReLU:
            act = nn::leaky_relu_forward(act, l.alpha);
            break;
        case LayerKind::PixelShuffle:
            act = nn::pixel_shuffle(act, l.r);
            break;
        case LayerKind::Dense:
            act = nn::dense_forward(act, p.w, p.b, l.in_dim, l.out_dim);
            break;
        case LayerKind::Sigmoid:
            act = nn::sigmoid_forward(act);
            if (trace) trace->sigmoid_out[i] = act;
            break;
        case LayerKind::AvgPool:
            act = nn::avgpool2_forward(act);
            break;
        case LayerKind::ResBlockBegin:
            skip_stack.push_back(act);
            break;
        case LayerKind::ResBlockEnd: {
            const Tensor4<T>& saved = skip_stack.back();
            for (size_t j = 0; j < act.size(); ++j) act.data[j] += saved.data[j];
            skip_stack.pop_back();
            break;
        }
        }
    }
    if (spec.global_skip)
        for (size_t j = 0; j < act.size(); ++j) act.data[j] += x.data[j];
    if (trace) trace->output = act;
    return act;
}

template <typename T>
struct BackwardResult {
    Tensor4<T> grad_input;
    NetworkParams<T> grads; // same buffer shapes as the parameters
};

template <typename T>
NetworkParams<T> zero_grads(const NetworkSpec& spec, const NetworkParams<T>& params) {
    NetworkParams<T> g;
    g.layers.resize(params.layers.size());
    for (size_t i = 0; i < params.layers.size(); ++i) {
        g.layers[i].w.assign(params.layers[i].w.size(), T(0));
        g.layers[i].b.assign(params.layers[i].b.size(), T(0));
        g.layers[i].gamma.assign(params.layers[i].gamma.size(), T(0));
        g.layers[i].beta.assign(params.layers[i].beta.size(), T(0));
        g.layers[i].slope.assign(params.layers[i].slope.size(), T(0));
    }
    return g;
}

// Train-mode backward pass over a recorded trace. At a ResBlockEnd the
// incoming gradient feeds both the branch and the skip; the two meet
// again at the matching ResBlockBegin.
template <typename T>
BackwardResult<T> backward(const NetworkSpec& spec, const NetworkParams<T>& params,
                           const Trace<T>& trace, const Tensor4<T>& grad_out) {
    BackwardResult<T> result;
    result.grads = zero_grads(spec, params);

    // match residual markers
    std::vector<int> partner(spec.layers.size(), -1);
    {
        std::vector<size_t> stack;
        for (size_t i = 0; i < spec.layers.size(); ++i) {
            if (spec.layers[i].kind == LayerKind::ResBlockBegin) stack.push_back(i);
            if (spec.layers[i].kind == LayerKind::ResBlockEnd) {
                partner[i] = static_cast<int>(stack.back());
                partner[stack.back()] = static_cast<int>(i);
                stack.pop_back();
            }
        }
    }

    std::vector<Tensor4<T>> pending_skip(spec.layers.size());
    Tensor4<T> grad = grad_out;
    for (int i = static_cast<int>(spec.layers.size()) - 1; i >= 0; --i) {
        const LayerSpec& l = spec.layers[i];
        const LayerParams<T>& p = params.layers[i];
        const Tensor4<T>& x = trace.inputs[i];
        switch (l.kind) {
        case LayerKind::Conv2d: {
            nn::ConvGrads<T> g = nn::conv2d_backward(x, p.w, grad, l.out_ch, l.k, l.stride, l.pad);
            result.grads.layers[i].w = std::move(g.grad_w);
            result.grads.layers[i].b = std::move(g.grad_b);
            grad = std::move(g.grad_x);
            break;
        }
        case LayerKind::BatchNorm: {
            nn::BatchNormGrads<T> g =
                nn::batchnorm_backward(x, p.gamma, trace.bn_cache[i], grad, l.eps);
            result.grads.layers[i].gamma = std::move(g.grad_gamma);
            result.grads.layers[i].beta = std::move(g.grad_beta);
            grad = std::move(g.grad_x);
            break;
        }
        case LayerKind::PReLU: {
            auto [gx, gslope] = nn::prelu_backward(x, p.slope, grad);
            result.grads.layers[i].slope = std::move(gslope);
            grad = std::move(gx);
            break;
        }
        case LayerKind::LeakyReLU:
            grad = nn::leaky_relu_backward(x, l.alpha, grad);
            break;
        case LayerKind::PixelShuffle:
            grad = nn::inverse_pixel_shuffle(grad, l.r);
            break;
        case LayerKind::Dense: {
            nn::DenseGrads<T> g = nn::dense_backward(x, p.w, grad, l.in_dim, l.out_dim);
            result.grads.layers[i].w = std::move(g.grad_w);
            result.grads.layers[i].b = std::move(g.grad_b);
            grad = std::move(g.grad_x);
            break;
        }
        case LayerKind::Sigmoid:
            grad = nn::sigmoid_backward(trace.sigmoid_out[i], grad);
            break;
        case LayerKind::AvgPool:
            grad = nn::avgpool2_backward(x, grad);
            break;
        case LayerKind::ResBlockEnd:
            // skip branch receives the same gradient; park it for the begin marker
            pending_skip[partner[i]] = grad;
            break;
        case LayerKind::ResBlockBegin: {
            const Tensor4<T>& skip = pending_skip[i];
            for (size_t j = 0; j < grad.size(); ++j) grad.data[j] += skip.data[j];
            pending_skip[i] = Tensor4<T>();
            break;
        }
        }
    }
    if (spec.global_skip)
        for (size_t j = 0; j < grad.size(); ++j) grad.data[j] += grad_out.data[j];
    result.grad_input = std::move(grad);
    return result;
}

} // namespace ctseg
