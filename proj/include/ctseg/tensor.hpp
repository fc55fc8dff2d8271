#pragma once

#include <cstddef>
#include <vector>

#include "ctseg/common.hpp"
#include "ctseg/image.hpp"

namespace ctseg {

// Batched NCHW array. float for training, double for gradient checks.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<size_t>(n_) * c_ * h_ * w_, fill) {
        if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
            throw ShapeError("Tensor4: dims must be >= 1");
    }

    size_t size() const { return data.size(); }

    T& at(int i, int j, int y, int x) {
        return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }
    T at(int i, int j, int y, int x) const {
        return data[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
    }

    T* plane(int i, int j) { return data.data() + (static_cast<size_t>(i) * c + j) * h * w; }
    const T* plane(int i, int j) const {
        return data.data() + (static_cast<size_t>(i) * c + j) * h * w;
    }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    template <typename U>
    Tensor4<U> cast() const {
        Tensor4<U> out(n, c, h, w);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <typename T>
Tensor4<T> image_to_tensor(const GrayImage& img) {
    Tensor4<T> t(1, 1, img.height, img.width);
    for (size_t i = 0; i < img.size(); ++i) t.data[i] = static_cast<T>(img.pixels[i]);
    return t;
}

template <typename T>
GrayImage tensor_to_image(const Tensor4<T>& t, int batch = 0, int channel = 0) {
    GrayImage img(t.w, t.h);
    const T* p = t.plane(batch, channel);
    for (size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<float>(p[i]);
    return img;
}

// Stacks equal-size images into one batch with a single channel.
template <typename T>
Tensor4<T> images_to_batch(const std::vector<GrayImage>& imgs) {
    if (imgs.empty()) throw ShapeError("images_to_batch: empty batch");
    Tensor4<T> t(static_cast<int>(imgs.size()), 1, imgs[0].height, imgs[0].width);
    for (size_t i = 0; i < imgs.size(); ++i) {
        if (imgs[i].width != imgs[0].width || imgs[i].height != imgs[0].height)
            throw ShapeError("images_to_batch: dimension mismatch");
        T* p = t.plane(static_cast<int>(i), 0);
        for (size_t j = 0; j < imgs[i].size(); ++j) p[j] = static_cast<T>(imgs[i].pixels[j]);
    }
    return t;
}

} // namespace ctseg
