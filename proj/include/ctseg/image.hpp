#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ctseg/common.hpp"
#include "ctseg/rng.hpp"

namespace ctseg {

// Single-channel raster, row-major float pixels, nominal range [0,1].
// Intermediate results (noise, windowing input) may leave the nominal
// range; integer file formats clamp on save.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw ParamError("GrayImage: dims must be >= 1");
    }

    float& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }

    // Edge-clamped access, the border policy used throughout.
    float at_clamped(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y);
    }

    size_t size() const { return pixels.size(); }

    float mean() const {
        double s = std::accumulate(pixels.begin(), pixels.end(), 0.0);
        return static_cast<float>(s / static_cast<double>(pixels.size()));
    }

    bool finite() const {
        return std::all_of(pixels.begin(), pixels.end(),
                           [](float v) { return std::isfinite(v); });
    }
};

// Channel-major planes (1..4 channels) of equal-size GrayImage data.
struct MultiChannelImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> pixels; // plane 0, plane 1, ...

    float at(int c, int x, int y) const {
        return pixels[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float& at(int c, int x, int y) {
        return pixels[(static_cast<size_t>(c) * height + y) * width + x];
    }

    GrayImage channel(int c) const {
        GrayImage out(width, height);
        const size_t plane = static_cast<size_t>(width) * height;
        std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(c * plane), plane,
                    out.pixels.begin());
        return out;
    }
};

struct Rect {
    int x0 = 0;
    int y0 = 0;
    int w = 1;
    int h = 1;
};

enum class Resample { Nearest, Bilinear, Bicubic };

// ---------------------------------------------------------------------------
// PGM I/O (binary P5, maxval 255 or 65535, 16-bit samples big-endian)

namespace detail {

inline int pgm_read_token(std::istream& in) {
    // Skips whitespace and '#' comments, then parses one nonnegative int.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw FormatError("pgm: malformed header");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 30) throw FormatError("pgm: header value out of range");
        c = in.get();
    }
    if (c != EOF && !std::isspace(c)) throw FormatError("pgm: malformed header");
    return static_cast<int>(v);
}

} // namespace detail

inline GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("pgm: cannot open " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw FormatError("pgm: not a binary PGM (P5): " + path);
    const int w = detail::pgm_read_token(in);
    const int h = detail::pgm_read_token(in);
    const int maxval = detail::pgm_read_token(in);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
        throw FormatError("pgm: bad dimensions or maxval in " + path);
    // Exactly one whitespace byte separates header from payload; the
    // token parser has already consumed it.
    GrayImage img(w, h);
    const size_t n = img.size();
    const float scale = 1.0f / static_cast<float>(maxval);
    if (maxval < 256) {
        std::vector<unsigned char> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(in.gcount()) != n)
            throw LengthError("pgm: truncated payload in " + path);
        for (size_t i = 0; i < n; ++i) img.pixels[i] = buf[i] * scale;
    } else {
        std::vector<unsigned char> buf(2 * n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
        if (static_cast<size_t>(in.gcount()) != 2 * n)
            throw LengthError("pgm: truncated payload in " + path);
        for (size_t i = 0; i < n; ++i) {
            const unsigned v = (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1];
            img.pixels[i] = v * scale;
        }
    }
    return img;
}

// Clamps to [0,1] (the one place the pipeline clamps for integer formats)
// and rounds half up. Written via a temp file + rename so readers never
// observe a partial file.
inline void save_pgm(const GrayImage& img, const std::string& path, int bit_depth = 16) {
    if (bit_depth != 8 && bit_depth != 16) throw ParamError("pgm: bit depth must be 8 or 16");
    const int maxval = bit_depth == 8 ? 255 : 65535;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("pgm: cannot write " + tmp);
        out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
        std::vector<unsigned char> buf;
        buf.reserve(img.size() * (bit_depth == 8 ? 1 : 2));
        for (float v : img.pixels) {
            const float c = std::clamp(v, 0.0f, 1.0f);
            const unsigned q =
                static_cast<unsigned>(std::floor(static_cast<double>(c) * maxval + 0.5));
            if (bit_depth == 8) {
                buf.push_back(static_cast<unsigned char>(q));
            } else {
                buf.push_back(static_cast<unsigned char>(q >> 8));
                buf.push_back(static_cast<unsigned char>(q & 0xff));
            }
        }
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
        if (!out) throw IoError("pgm: write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("pgm: cannot rename " + tmp + " to " + path);
}

// ---------------------------------------------------------------------------
// Raster operations

// Maps the intensity window [center - width/2, center + width/2] onto [0,1].
inline GrayImage window(const GrayImage& img, float center, float width) {
    if (!(width > 0.0f)) throw ParamError("window: width must be > 0");
    GrayImage out(img.width, img.height);
    const float lo = center - width / 2.0f;
    for (size_t i = 0; i < img.size(); ++i)
        out.pixels[i] = std::clamp((img.pixels[i] - lo) / width, 0.0f, 1.0f);
    return out;
}

namespace detail {

// Catmull-Rom kernel (bicubic, a = -0.5).
inline float cubic_weight(float t) {
    t = std::fabs(t);
    if (t < 1.0f) return 1.5f * t * t * t - 2.5f * t * t + 1.0f;
    if (t < 2.0f) return -0.5f * t * t * t + 2.5f * t * t - 4.0f * t + 2.0f;
    return 0.0f;
}

} // namespace detail

// Resampling to explicit target dims; pixel-center sampling grid,
// edge-clamped taps.
inline GrayImage resample_to(const GrayImage& img, int ow, int oh,
                             Resample method = Resample::Bilinear) {
    if (ow < 1 || oh < 1) throw ParamError("resample: degenerate output size");
    GrayImage out(ow, oh);
    const double sx = static_cast<double>(img.width) / ow;
    const double sy = static_cast<double>(img.height) / oh;
    for (int y = 0; y < oh; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < ow; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            float v = 0.0f;
            switch (method) {
            case Resample::Nearest: {
                v = img.at_clamped(static_cast<int>(std::llround(fx)),
                                   static_cast<int>(std::llround(fy)));
                break;
            }
            case Resample::Bilinear: {
                const int x0 = static_cast<int>(std::floor(fx));
                const int y0 = static_cast<int>(std::floor(fy));
                const float ax = static_cast<float>(fx - x0);
                const float ay = static_cast<float>(fy - y0);
                const float v00 = img.at_clamped(x0, y0);
                const float v10 = img.at_clamped(x0 + 1, y0);
                const float v01 = img.at_clamped(x0, y0 + 1);
                const float v11 = img.at_clamped(x0 + 1, y0 + 1);
                v = (1 - ay) * ((1 - ax) * v00 + ax * v10) + ay * ((1 - ax) * v01 + ax * v11);
                break;
            }
            case Resample::Bicubic: {
                const int x0 = static_cast<int>(std::floor(fx));
                const int y0 = static_cast<int>(std::floor(fy));
                const float ax = static_cast<float>(fx - x0);
                const float ay = static_cast<float>(fy - y0);
                float acc = 0.0f;
                float wsum = 0.0f;
                for (int j = -1; j <= 2; ++j) {
                    const float wy = detail::cubic_weight(ay - j);
                    for (int i = -1; i <= 2; ++i) {
                        const float wx = detail::cubic_weight(ax - i);
                        acc += wx * wy * img.at_clamped(x0 + i, y0 + j);
                        wsum += wx * wy;
                    }
                }
                v = acc / wsum;
                break;
            }
            }
            out.at(x, y) = v;
        }
    }
    return out;
}

inline GrayImage resample(const GrayImage& img, double scale, Resample method = Resample::Bilinear) {
    if (!(scale > 0.0)) throw ParamError("resample: scale must be > 0");
    const int ow = static_cast<int>(std::llround(img.width * scale));
    const int oh = static_cast<int>(std::llround(img.height * scale));
    return resample_to(img, ow, oh, method);
}

// Separable Gaussian, kernel radius ceil(3*sigma), normalized to sum 1,
// edge-clamped borders. sigma == 0 returns the input unchanged.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma < 0.0) throw ParamError("gaussian_blur: sigma must be >= 0");
    if (sigma == 0.0) return img;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<float> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        kernel[i + radius] = static_cast<float>(v);
        sum += v;
    }
    for (float& k : kernel) k = static_cast<float>(k / sum);

    GrayImage tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at_clamped(x + i, y);
            tmp.at(x, y) = acc;
        }
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at_clamped(x, y + i);
            out.at(x, y) = acc;
        }
    return out;
}

// Additive white Gaussian noise. sigma_255 is on the 0-255 intensity
// scale; per-pixel noise is N(0, (sigma_255/255)^2) in [0,1] units.
// Output is intentionally not clamped.
inline GrayImage add_gaussian_noise(const GrayImage& img, double sigma_255, std::uint64_t seed) {
    if (!(sigma_255 > 0.0) || sigma_255 > 50.0)
        throw ParamError("add_gaussian_noise: sigma_255 must be in (0,50]");
    Rng rng(seed);
    const double s = sigma_255 / 255.0;
    GrayImage out(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i)
        out.pixels[i] = img.pixels[i] + static_cast<float>(s * rng.normal());
    return out;
}

// Compression about the image mean: out = m + (in - m) / kappa.
inline GrayImage contrast_compress(const GrayImage& img, double kappa) {
    if (kappa < 1.0 || kappa > 3.0) throw ParamError("contrast_compress: kappa must be in [1,3]");
    const float m = img.mean();
    GrayImage out(img.width, img.height);
    const float inv = static_cast<float>(1.0 / kappa);
    for (size_t i = 0; i < img.size(); ++i)
        out.pixels[i] = m + (img.pixels[i] - m) * inv;
    return out;
}

inline GrayImage crop(const GrayImage& img, const Rect& r) {
    if (r.w < 1 || r.h < 1 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > img.width ||
        r.y0 + r.h > img.height)
        throw ParamError("crop: rect out of bounds");
    GrayImage out(r.w, r.h);
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) out.at(x, y) = img.at(r.x0 + x, r.y0 + y);
    return out;
}

// Uniform over all valid top-left offsets, deterministic given seed.
inline GrayImage random_crop(const GrayImage& img, int w, int h, std::uint64_t seed) {
    if (w < 1 || h < 1 || w > img.width || h > img.height)
        throw ParamError("random_crop: crop size exceeds image");
    Rng rng(seed);
    const int x0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.width - w + 1)));
    const int y0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(img.height - h + 1)));
    return crop(img, Rect{x0, y0, w, h});
}

inline MultiChannelImage stack_channels(std::span<const GrayImage> imgs) {
    if (imgs.empty() || imgs.size() > 4)
        throw ParamError("stack_channels: need 1..4 channels");
    const int w = imgs[0].width;
    const int h = imgs[0].height;
    for (const GrayImage& im : imgs)
        if (im.width != w || im.height != h)
            throw ParamError("stack_channels: dimension mismatch");
    MultiChannelImage out;
    out.width = w;
    out.height = h;
    out.channels = static_cast<int>(imgs.size());
    out.pixels.reserve(static_cast<size_t>(w) * h * imgs.size());
    for (const GrayImage& im : imgs)
        out.pixels.insert(out.pixels.end(), im.pixels.begin(), im.pixels.end());
    return out;
}

inline MultiChannelImage stack_channels(std::initializer_list<GrayImage> imgs) {
    std::vector<GrayImage> v(imgs);
    return stack_channels(std::span<const GrayImage>(v));
}

inline GrayImage clamp01(const GrayImage& img) {
    GrayImage out = img;
    for (float& v : out.pixels) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

} // namespace ctseg
