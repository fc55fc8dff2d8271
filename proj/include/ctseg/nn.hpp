#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ctseg/tensor.hpp"

// Layer arithmetic: forward passes and hand-derived backward passes.
// Convolutions are cross-correlations with zero padding; every backward
// computes the gradient of sum(grad_out * forward) w.r.t. its inputs.

namespace ctseg::nn {

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// ---------------------------------------------------------------------------
// conv2d: weights [out_ch, in_ch, k, k], bias [out_ch]

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const std::vector<T>& w, const std::vector<T>& b,
                          int out_ch, int k, int stride, int pad) {
    const int in_ch = x.c;
    if (w.size() != static_cast<size_t>(out_ch) * in_ch * k * k)
        throw ShapeError("conv2d: weight size mismatch");
    if (b.size() != static_cast<size_t>(out_ch)) throw ShapeError("conv2d: bias size mismatch");
    const int oh = conv_out_dim(x.h, k, stride, pad);
    const int ow = conv_out_dim(x.w, k, stride, pad);
    if (oh < 1 || ow < 1) throw ShapeError("conv2d: output would be empty");

    Tensor4<T> y(x.n, out_ch, oh, ow);
    for (int n = 0; n < x.n; ++n) {
        for (int oc = 0; oc < out_ch; ++oc) {
            T* yp = y.plane(n, oc);
            std::fill(yp, yp + static_cast<size_t>(oh) * ow, b[oc]);
            for (int ic = 0; ic < in_ch; ++ic) {
                const T* xp = x.plane(n, ic);
                const T* wp = w.data() + (static_cast<size_t>(oc) * in_ch + ic) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const T wv = wp[ky * k + kx];
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= x.h) continue;
                            // valid ox range so that ix = ox*stride - pad + kx stays in bounds
                            int x_lo = 0, x_hi = ow;
                            while (x_lo < ow && x_lo * stride - pad + kx < 0) ++x_lo;
                            while (x_hi > x_lo && (x_hi - 1) * stride - pad + kx >= x.w) --x_hi;
                            T* yrow = yp + static_cast<size_t>(oy) * ow;
                            const T* xrow = xp + static_cast<size_t>(iy) * x.w - pad + kx;
                            if (stride == 1) {
                                for (int ox = x_lo; ox < x_hi; ++ox)
                                    yrow[ox] += wv * xrow[ox];
                            } else {
                                for (int ox = x_lo; ox < x_hi; ++ox)
                                    yrow[ox] += wv * xrow[static_cast<size_t>(ox) * stride];
                            }
                        }
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
struct ConvGrads {
    Tensor4<T> grad_x;
    std::vector<T> grad_w;
    std::vector<T> grad_b;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& x, const std::vector<T>& w,
                             const Tensor4<T>& grad_y, int out_ch, int k, int stride, int pad) {
    const int in_ch = x.c;
    if (grad_y.c != out_ch) throw ShapeError("conv2d_backward: grad channel mismatch");
    ConvGrads<T> g;
    g.grad_x = Tensor4<T>(x.n, x.c, x.h, x.w);
    g.grad_w.assign(w.size(), T(0));
    g.grad_b.assign(out_ch, T(0));
    const int oh = grad_y.h;
    const int ow = grad_y.w;

    for (int n = 0; n < x.n; ++n) {
        for (int oc = 0; oc < out_ch; ++oc) {
            const T* gyp = grad_y.plane(n, oc);
            T acc = T(0);
            for (size_t i = 0; i < static_cast<size_t>(oh) * ow; ++i) acc += gyp[i];
            g.grad_b[oc] += acc;
            for (int ic = 0; ic < in_ch; ++ic) {
                const T* xp = x.plane(n, ic);
                T* gxp = g.grad_x.plane(n, ic);
                const T* wp = w.data() + (static_cast<size_t>(oc) * in_ch + ic) * k * k;
                T* gwp = g.grad_w.data() + (static_cast<size_t>(oc) * in_ch + ic) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const T wv = wp[ky * k + kx];
                        T wacc = T(0);
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= x.h) continue;
                            int x_lo = 0, x_hi = ow;
                            while (x_lo < ow && x_lo * stride - pad + kx < 0) ++x_lo;
                            while (x_hi > x_lo && (x_hi - 1) * stride - pad + kx >= x.w) --x_hi;
                            const T* gyrow = gyp + static_cast<size_t>(oy) * ow;
                            const T* xrow = xp + static_cast<size_t>(iy) * x.w - pad + kx;
                            T* gxrow = gxp + static_cast<size_t>(iy) * x.w - pad + kx;
                            if (stride == 1) {
                                for (int ox = x_lo; ox < x_hi; ++ox) {
                                    wacc += gyrow[ox] * xrow[ox];
                                    gxrow[ox] += wv * gyrow[ox];
                                }
                            } else {
                                for (int ox = x_lo; ox < x_hi; ++ox) {
                                    const size_t ix = static_cast<size_t>(ox) * stride;
                                    wacc += gyrow[ox] * xrow[ix];
                                    gxrow[ix] += wv * gyrow[ox];
                                }
                            }
                        }
                        gwp[ky * k + kx] += wacc;
                    }
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// batch normalization (per channel over n*h*w)

template <typename T>
struct BatchNormCache {
    std::vector<T> mean;
    std::vector<T> var; // biased batch variance
};

template <typename T>
Tensor4<T> batchnorm_forward_train(const Tensor4<T>& x, const std::vector<T>& gamma,
                                   const std::vector<T>& beta, std::vector<T>& running_mean,
                                   std::vector<T>& running_var, bool update_running,
                                   double momentum, double eps, BatchNormCache<T>* cache) {
    const int C = x.c;
    if (gamma.size() != static_cast<size_t>(C) || beta.size() != static_cast<size_t>(C))
        throw ShapeError("batchnorm: parameter size mismatch");
    const size_t per = static_cast<size_t>(x.n) * x.h * x.w;
    if (per < 2) throw ShapeError("batchnorm: train batch n*h*w must be >= 2");

    Tensor4<T> y(x.n, x.c, x.h, x.w);
    std::vector<T> mean(C), var(C);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int c = 0; c < C; ++c) {
        double m = 0.0;
        for (int n = 0; n < x.n; ++n) {
            const T* xp = x.plane(n, c);
            for (size_t i = 0; i < plane; ++i) m += xp[i];
        }
        m /= static_cast<double>(per);
        double v = 0.0;
        for (int n = 0; n < x.n; ++n) {
            const T* xp = x.plane(n, c);
            for (size_t i = 0; i < plane; ++i) {
                const double d = xp[i] - m;
                v += d * d;
            }
        }
        v /= static_cast<double>(per);
        mean[c] = static_cast<T>(m);
        var[c] = static_cast<T>(v);
        const T inv = static_cast<T>(1.0 / std::sqrt(v + eps));
        for (int n = 0; n < x.n; ++n) {
            const T* xp = x.plane(n, c);
            T* yp = y.plane(n, c);
            for (size_t i = 0; i < plane; ++i)
                yp[i] = gamma[c] * (xp[i] - mean[c]) * inv + beta[c];
        }
        if (update_running) {
            running_mean[c] = static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * m);
            running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] + momentum * v);
        }
    }
    if (cache) {
        cache->mean = std::move(mean);
        cache->var = std::move(var);
    }
    return y;
}

template <typename T>
Tensor4<T> batchnorm_forward_eval(const Tensor4<T>& x, const std::vector<T>& gamma,
                                  const std::vector<T>& beta, const std::vector<T>& running_mean,
                                  const std::vector<T>& running_var, double eps) {
    const int C = x.c;
    Tensor4<T> y(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int c = 0; c < C; ++c) {
        const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var[c]) + eps));
        for (int n = 0; n < x.n; ++n) {
            const T* xp = x.plane(n, c);
            T* yp = y.plane(n, c);
            for (size_t i = 0; i < plane; ++i)
                yp[i] = gamma[c] * (xp[i] - running_mean[c]) * inv + beta[c];
        }
    }
    return y;
}

template <typename T>
struct BatchNormGrads {
    Tensor4<T> grad_x;
    std::vector<T> grad_gamma;
    std::vector<T> grad_beta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor4<T>& x, const std::vector<T>& gamma,
                                     const BatchNormCache<T>& cache, const Tensor4<T>& grad_y,
                                     double eps) {
    const int C = x.c;
    BatchNormGrads<T> g;
    g.grad_x = Tensor4<T>(x.n, x.c, x.h, x.w);
    g.grad_gamma.assign(C, T(0));
    g.grad_beta.assign(C, T(0));
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    const double per = static_cast<double>(x.n) * plane;

    for (int c = 0; c < C; ++c) {
        const double m = cache.mean[c];
        const double inv = 1.0 / std::sqrt(static_cast<double>(cache.var[c]) + eps);
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int n = 0; n < x.n; ++n) {
            const T* xp = x.plane(n, c);
            const T* gyp = grad_y.plane(n, c);
            for (size_t i = 0; i < plane; ++i) {
                const double xhat = (xp[i] - m) * inv;
                sum_gy += gyp[i];
                sum_gy_xhat += gyp[i] * xhat;
            }
        }
        g.grad_beta[c] = static_cast<T>(sum_gy);
        g.grad_gamma[c] = static_cast<T>(sum_gy_xhat);
        const double gc = gamma[c];
        for (int n = 0; n < x.n; ++n) {
            const T* xp = x.plane(n, c);
            const T* gyp = grad_y.plane(n, c);
            T* gxp = g.grad_x.plane(n, c);
            for (size_t i = 0; i < plane; ++i) {
                const double xhat = (xp[i] - m) * inv;
                gxp[i] = static_cast<T>(gc * inv *
                                        (gyp[i] - sum_gy / per - xhat * sum_gy_xhat / per));
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// activations

template <typename T>
Tensor4<T> prelu_forward(const Tensor4<T>& x, const std::vector<T>& slope) {
    if (slope.size() != static_cast<size_t>(x.c)) throw ShapeError("prelu: slope size mismatch");
    Tensor4<T> y(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T a = slope[c];
            const T* xp = x.plane(n, c);
            T* yp = y.plane(n, c);
            for (size_t i = 0; i < plane; ++i) yp[i] = xp[i] > T(0) ? xp[i] : a * xp[i];
        }
    return y;
}

template <typename T>
std::pair<Tensor4<T>, std::vector<T>> prelu_backward(const Tensor4<T>& x,
                                                     const std::vector<T>& slope,
                                                     const Tensor4<T>& grad_y) {
    Tensor4<T> gx(x.n, x.c, x.h, x.w);
    std::vector<T> gslope(slope.size(), T(0));
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T a = slope[c];
            const T* xp = x.plane(n, c);
            const T* gyp = grad_y.plane(n, c);
            T* gxp = gx.plane(n, c);
            T acc = T(0);
            for (size_t i = 0; i < plane; ++i) {
                if (xp[i] > T(0)) {
                    gxp[i] = gyp[i];
                } else {
                    gxp[i] = a * gyp[i];
                    acc += gyp[i] * xp[i];
                }
            }
            gslope[c] += acc;
        }
    return {std::move(gx), std::move(gslope)};
}

template <typename T>
Tensor4<T> leaky_relu_forward(const Tensor4<T>& x, double alpha) {
    Tensor4<T> y(x.n, x.c, x.h, x.w);
    const T a = static_cast<T>(alpha);
    for (size_t i = 0; i < x.size(); ++i)
        y.data[i] = x.data[i] > T(0) ? x.data[i] : a * x.data[i];
    return y;
}

template <typename T>
Tensor4<T> leaky_relu_backward(const Tensor4<T>& x, double alpha, const Tensor4<T>& grad_y) {
    Tensor4<T> gx(x.n, x.c, x.h, x.w);
    const T a = static_cast<T>(alpha);
    for (size_t i = 0; i < x.size(); ++i)
        gx.data[i] = x.data[i] > T(0) ? grad_y.data[i] : a * grad_y.data[i];
    return gx;
}

template <typename T>
Tensor4<T> sigmoid_forward(const Tensor4<T>& x) {
    Tensor4<T> y(x.n, x.c, x.h, x.w);
    for (size_t i = 0; i < x.size(); ++i) {
        const T v = x.data[i];
        if (v >= T(0)) {
            y.data[i] = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            y.data[i] = e / (T(1) + e);
        }
    }
    return y;
}

template <typename T>
Tensor4<T> sigmoid_backward(const Tensor4<T>& y, const Tensor4<T>& grad_y) {
    Tensor4<T> gx(y.n, y.c, y.h, y.w);
    for (size_t i = 0; i < y.size(); ++i)
        gx.data[i] = grad_y.data[i] * y.data[i] * (T(1) - y.data[i]);
    return gx;
}

// ---------------------------------------------------------------------------
// pixel shuffle (sub-pixel rearrangement, no arithmetic)

template <typename T>
Tensor4<T> pixel_shuffle(const Tensor4<T>& x, int r) {
    if (r < 1 || x.c % (r * r) != 0)
        throw ShapeError("pixel_shuffle: channels not divisible by r^2");
    const int oc = x.c / (r * r);
    Tensor4<T> y(x.n, oc, x.h * r, x.w * r);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < oc; ++c)
            for (int oy = 0; oy < y.h; ++oy)
                for (int ox = 0; ox < y.w; ++ox) {
                    const int ic = c * r * r + (oy % r) * r + (ox % r);
                    y.at(n, c, oy, ox) = x.at(n, ic, oy / r, ox / r);
                }
    return y;
}

template <typename T>
Tensor4<T> inverse_pixel_shuffle(const Tensor4<T>& y, int r) {
    if (r < 1 || y.h % r != 0 || y.w % r != 0)
        throw ShapeError("inverse_pixel_shuffle: dims not divisible by r");
    Tensor4<T> x(y.n, y.c * r * r, y.h / r, y.w / r);
    for (int n = 0; n < y.n; ++n)
        for (int c = 0; c < y.c; ++c)
            for (int oy = 0; oy < y.h; ++oy)
                for (int ox = 0; ox < y.w; ++ox) {
                    const int ic = c * r * r + (oy % r) * r + (ox % r);
                    x.at(n, ic, oy / r, ox / r) = y.at(n, c, oy, ox);
                }
    return x;
}

// ---------------------------------------------------------------------------
// dense: x flattened to (n, in_dim); weights [out_dim, in_dim]

template <typename T>
Tensor4<T> dense_forward(const Tensor4<T>& x, const std::vector<T>& w, const std::vector<T>& b,
                         int in_dim, int out_dim) {
    if (static_cast<size_t>(x.c) * x.h * x.w != static_cast<size_t>(in_dim))
        throw ShapeError("dense: input dim mismatch");
    if (w.size() != static_cast<size_t>(out_dim) * in_dim || b.size() != static_cast<size_t>(out_dim))
        throw ShapeError("dense: weight size mismatch");
    Tensor4<T> y(x.n, out_dim, 1, 1);
    for (int n = 0; n < x.n; ++n) {
        const T* xp = x.data.data() + static_cast<size_t>(n) * in_dim;
        for (int o = 0; o < out_dim; ++o) {
            const T* wp = w.data() + static_cast<size_t>(o) * in_dim;
            T acc = b[o];
            for (int i = 0; i < in_dim; ++i) acc += wp[i] * xp[i];
            y.at(n, o, 0, 0) = acc;
        }
    }
    return y;
}

template <typename T>
struct DenseGrads {
    Tensor4<T> grad_x;
    std::vector<T> grad_w;
    std::vector<T> grad_b;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor4<T>& x, const std::vector<T>& w,
                             const Tensor4<T>& grad_y, int in_dim, int out_dim) {
    DenseGrads<T> g;
    g.grad_x = Tensor4<T>(x.n, x.c, x.h, x.w);
    g.grad_w.assign(w.size(), T(0));
    g.grad_b.assign(out_dim, T(0));
    for (int n = 0; n < x.n; ++n) {
        const T* xp = x.data.data() + static_cast<size_t>(n) * in_dim;
        T* gxp = g.grad_x.data.data() + static_cast<size_t>(n) * in_dim;
        for (int o = 0; o < out_dim; ++o) {
            const T gy = grad_y.at(n, o, 0, 0);
            const T* wp = w.data() + static_cast<size_t>(o) * in_dim;
            T* gwp = g.grad_w.data() + static_cast<size_t>(o) * in_dim;
            g.grad_b[o] += gy;
            for (int i = 0; i < in_dim; ++i) {
                gwp[i] += gy * xp[i];
                gxp[i] += gy * wp[i];
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// 2x2 average pooling, stride 2; odd tail rows/columns are dropped

template <typename T>
Tensor4<T> avgpool2_forward(const Tensor4<T>& x) {
    const int oh = x.h / 2;
    const int ow = x.w / 2;
    if (oh < 1 || ow < 1) throw ShapeError("avgpool2: input too small");
    Tensor4<T> y(x.n, x.c, oh, ow);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox)
                    y.at(n, c, oy, ox) =
                        (x.at(n, c, 2 * oy, 2 * ox) + x.at(n, c, 2 * oy, 2 * ox + 1) +
                         x.at(n, c, 2 * oy + 1, 2 * ox) + x.at(n, c, 2 * oy + 1, 2 * ox + 1)) /
                        T(4);
    return y;
}

template <typename T>
Tensor4<T> avgpool2_backward(const Tensor4<T>& x, const Tensor4<T>& grad_y) {
    Tensor4<T> gx(x.n, x.c, x.h, x.w);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < grad_y.h; ++oy)
                for (int ox = 0; ox < grad_y.w; ++ox) {
                    const T g = grad_y.at(n, c, oy, ox) / T(4);
                    gx.at(n, c, 2 * oy, 2 * ox) += g;
                    gx.at(n, c, 2 * oy, 2 * ox + 1) += g;
                    gx.at(n, c, 2 * oy + 1, 2 * ox) += g;
                    gx.at(n, c, 2 * oy + 1, 2 * ox + 1) += g;
                }
    return gx;
}

// ---------------------------------------------------------------------------
// losses

template <typename T>
double mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target) {
    if (!pred.same_shape(target)) throw ShapeError("mse: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - target.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

template <typename T>
Tensor4<T> mse_loss_grad(const Tensor4<T>& pred, const Tensor4<T>& target) {
    if (!pred.same_shape(target)) throw ShapeError("mse: shape mismatch");
    Tensor4<T> g(pred.n, pred.c, pred.h, pred.w);
    const T scale = static_cast<T>(2.0 / static_cast<double>(pred.size()));
    for (size_t i = 0; i < pred.size(); ++i)
        g.data[i] = scale * (pred.data[i] - target.data[i]);
    return g;
}

} // namespace ctseg::nn
