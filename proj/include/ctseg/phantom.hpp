#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ctseg/image.hpp"
#include "ctseg/mask.hpp"
#include "ctseg/recist.hpp"
#include "ctseg/rng.hpp"

namespace ctseg {

inline constexpr std::array<const char*, 8> kLesionCategories = {
    "abdomen", "bone", "kidney", "liver", "lung", "mediastinum", "pelvis", "soft_tissue"};

struct PhantomSpec {
    int size = 96;               // square image side
    double lesion_radius = 14.0; // mean semi-axis of the primary ellipse, px
    double eccentricity = 0.3;   // 0 = circle, towards 1 = elongated
    int lobes = 1;               // 1 ellipse, or union of 2-3 for irregular shapes
    double contrast = 0.5;       // lesion intensity above background, [0,1]
    double texture_sigma = 0.03; // background texture amplitude
    double noise_sigma_255 = 0.0;
    std::string category = "abdomen";
    std::uint64_t seed = 0;
};

struct Phantom {
    GrayImage image;
    BinaryMask mask;
    RecistAnnotation recist;
    std::string category;
};

namespace detail {

struct Ellipse {
    double cx, cy; // center
    double a, b;   // semi-axes
    double theta;  // rotation of the a-axis

    // Normalized radius: < 1 inside, 1 on the boundary.
    double rho(double x, double y) const {
        const double dx = x - cx;
        const double dy = y - cy;
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const double u = dx * c + dy * s;
        const double v = -dx * s + dy * c;
        return std::sqrt((u / a) * (u / a) + (v / b) * (v / b));
    }

    bool contains(double x, double y) const { return rho(x, y) <= 1.0; }
};

inline bool in_any(const std::vector<Ellipse>& es, double x, double y) {
    for (const Ellipse& e : es)
        if (e.contains(x, y)) return true;
    return false;
}

// Subsampled coverage of the ellipse union over one pixel, giving the
// 1-pixel feathered boundary of the rendered lesion.
inline double coverage(const std::vector<Ellipse>& es, int px, int py) {
    constexpr int kSub = 4;
    int hit = 0;
    for (int j = 0; j < kSub; ++j)
        for (int i = 0; i < kSub; ++i) {
            const double x = px + (i + 0.5) / kSub - 0.5;
            const double y = py + (j + 0.5) / kSub - 0.5;
            hit += in_any(es, x, y);
        }
    return static_cast<double>(hit) / (kSub * kSub);
}

inline std::vector<Point2> mask_boundary(const BinaryMask& m) {
    std::vector<Point2> pts;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x == m.width - 1 || y == m.height - 1 ||
                              !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) ||
                              !m.at(x, y + 1);
            if (edge) pts.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
    return pts;
}

// In-mask run along the line through `origin` with direction `dir`:
// the run containing the origin when there is one, otherwise the
// longest. Returns signed offsets (t_lo, t_hi) from the origin.
inline std::pair<double, double> line_run(const BinaryMask& m, Point2 origin, Point2 dir) {
    const double step = 0.25;
    const double reach = std::hypot(m.width, m.height);
    const int n = static_cast<int>(reach / step);
    auto sample = [&](double t) {
        const int x = static_cast<int>(std::lround(origin.x + t * dir.x));
        const int y = static_cast<int>(std::lround(origin.y + t * dir.y));
        return m.inside(x, y) && m.at(x, y);
    };
    struct Run {
        double lo, hi;
        bool covers_origin;
    };
    std::vector<Run> runs;
    bool in = false;
    double start = 0.0;
    for (int i = -n; i <= n; ++i) {
        const double t = i * step;
        const bool hit = sample(t);
        if (hit && !in) {
            in = true;
            start = t;
        } else if (!hit && in) {
            in = false;
            runs.push_back({start, (i - 1) * step, start <= 0.0 && (i - 1) * step >= 0.0});
        }
    }
    if (in) runs.push_back({start, n * step, start <= 0.0});
    if (runs.empty()) return {0.0, 0.0};
    const Run* best = &runs[0];
    for (const Run& r : runs) {
        if (r.covers_origin && !best->covers_origin)
            best = &r;
        else if (r.covers_origin == best->covers_origin && (r.hi - r.lo) > (best->hi - best->lo))
            best = &r;
    }
    // bisect each end between the last inside and first outside sample
    auto refine = [&](double t_in, double t_out) {
        for (int it = 0; it < 24; ++it) {
            const double t = (t_in + t_out) / 2.0;
            if (sample(t))
                t_in = t;
            else
                t_out = t;
        }
        return t_in;
    };
    return {refine(best->lo, best->lo - step), refine(best->hi, best->hi + step)};
}

} // namespace detail

// RECIST axes of a mask: the long axis is the maximum chord (realized
// between boundary pixels), the short axis the maximum chord
// perpendicular to it through its midpoint.
inline RecistAnnotation recist_from_mask(const BinaryMask& mask) {
    const std::vector<Point2> boundary = detail::mask_boundary(mask);
    if (boundary.size() < 2) throw ParamError("recist_from_mask: mask too small");
    size_t bi = 0, bj = 1;
    double best = -1.0;
    for (size_t i = 0; i < boundary.size(); ++i)
        for (size_t j = i + 1; j < boundary.size(); ++j) {
            const double d2 = (boundary[i].x - boundary[j].x) * (boundary[i].x - boundary[j].x) +
                              (boundary[i].y - boundary[j].y) * (boundary[i].y - boundary[j].y);
            if (d2 > best) {
                best = d2;
                bi = i;
                bj = j;
            }
        }
    RecistAnnotation r;
    r.p1 = boundary[bi];
    r.p2 = boundary[bj];
    const double len = distance(r.p1, r.p2);
    const Point2 mid = r.long_midpoint();
    const Point2 dir{(r.p2.x - r.p1.x) / len, (r.p2.y - r.p1.y) / len};
    const Point2 perp{-dir.y, dir.x};
    auto [t_lo, t_hi] = detail::line_run(mask, mid, perp);
    // cap the run's offset from the long-axis midpoint so the two
    // segments always cross near their midpoints
    const double max_off = 1.9;
    double off = (t_lo + t_hi) / 2.0;
    if (off > max_off) t_hi -= 2.0 * (off - max_off);
    if (off < -max_off) t_lo -= 2.0 * (off + max_off);
    if (t_hi < t_lo) t_hi = t_lo;
    // discretization never breaks long >= short
    if (t_hi - t_lo > len) {
        const double excess = (t_hi - t_lo - len) / 2.0;
        t_lo += excess;
        t_hi -= excess;
    }
    r.p3 = {mid.x + t_lo * perp.x, mid.y + t_lo * perp.y};
    r.p4 = {mid.x + t_hi * perp.x, mid.y + t_hi * perp.y};
    return r;
}

inline Phantom gen_phantom(const PhantomSpec& spec) {
    if (spec.contrast < 0.0 || spec.contrast > 1.0)
        throw ParamError("gen_phantom: contrast must be in [0,1]");
    if (spec.size < 16) throw ParamError("gen_phantom: image too small");
    if (spec.lobes < 1 || spec.lobes > 3) throw ParamError("gen_phantom: lobes must be 1..3");
    if (spec.eccentricity < 0.0 || spec.eccentricity >= 1.0)
        throw ParamError("gen_phantom: eccentricity must be in [0,1)");

    Rng rng(split_seed(spec.seed, 11));

    // Primary ellipse centered near the image center with a seed jitter.
    const double jitter = spec.size * 0.04;
    detail::Ellipse primary;
    primary.cx = spec.size / 2.0 + rng.uniform(-jitter, jitter);
    primary.cy = spec.size / 2.0 + rng.uniform(-jitter, jitter);
    primary.a = spec.lesion_radius * (1.0 + 0.15 * rng.uniform(-1.0, 1.0));
    primary.b = primary.a * (1.0 - 0.75 * spec.eccentricity);
    primary.theta = rng.uniform(0.0, 3.14159265358979323846);

    const double margin = 1.5 * std::max(primary.a, primary.b) + 2.0;
    if (primary.cx - margin < 0 || primary.cy - margin < 0 || primary.cx + margin >= spec.size ||
        primary.cy + margin >= spec.size)
        throw ParamError("gen_phantom: lesion does not fit inside image with margin");

    std::vector<detail::Ellipse> lobes{primary};
    for (int l = 1; l < spec.lobes; ++l) {
        detail::Ellipse e;
        const double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double off = rng.uniform(0.3, 0.6) * primary.a;
        e.cx = primary.cx + off * std::cos(ang);
        e.cy = primary.cy + off * std::sin(ang);
        e.a = primary.a * rng.uniform(0.45, 0.7);
        e.b = primary.b * rng.uniform(0.45, 0.7);
        e.theta = rng.uniform(0.0, 3.14159265358979323846);
        lobes.push_back(e);
    }

    // Crisp support = pixel centers inside the union.
    BinaryMask mask(spec.size, spec.size);
    for (int y = 0; y < spec.size; ++y)
        for (int x = 0; x < spec.size; ++x)
            if (detail::in_any(lobes, x, y)) mask.set(x, y, 1);

    // Background: smoothed random texture about the base intensity.
    const double base = std::max(0.05, std::min(0.35, 0.95 - spec.contrast));
    GrayImage noise_field(spec.size, spec.size);
    Rng trng(split_seed(spec.seed, 12));
    for (float& v : noise_field.pixels) v = static_cast<float>(trng.normal());
    GrayImage texture = gaussian_blur(noise_field, 2.5);
    // blur shrinks the std of white noise; rescale to the requested amplitude
    double tvar = 0.0, tmean = texture.mean();
    for (float v : texture.pixels) tvar += (v - tmean) * (v - tmean);
    tvar /= static_cast<double>(texture.size());
    const double tscale = tvar > 0 ? spec.texture_sigma / std::sqrt(tvar) : 0.0;

    GrayImage img(spec.size, spec.size);
    for (int y = 0; y < spec.size; ++y)
        for (int x = 0; x < spec.size; ++x) {
            double v = base + tscale * (texture.at(x, y) - tmean);
            v += spec.contrast * detail::coverage(lobes, x, y);
            img.at(x, y) = static_cast<float>(v);
        }
    if (spec.noise_sigma_255 > 0.0)
        img = add_gaussian_noise(img, spec.noise_sigma_255, split_seed(spec.seed, 13));

    Phantom p;
    p.image = std::move(img);
    p.recist = recist_from_mask(mask);
    p.mask = std::move(mask);
    p.category = spec.category;
    return p;
}

// Per-category flavor for generated datasets: lobes, eccentricity and
// contrast vary so category-wise aggregation has something to show.
inline PhantomSpec default_phantom_spec(const std::string& category, std::uint64_t seed) {
    PhantomSpec spec;
    spec.category = category;
    spec.seed = seed;
    Rng rng(split_seed(seed, 17));
    int idx = 0;
    for (size_t i = 0; i < kLesionCategories.size(); ++i)
        if (category == kLesionCategories[i]) idx = static_cast<int>(i);
    spec.size = 96;
    spec.lesion_radius = rng.uniform(10.0, 18.0);
    spec.eccentricity = rng.uniform(0.05, 0.25 + 0.05 * (idx % 4));
    spec.lobes = 1 + static_cast<int>(rng.uniform_int(1 + idx % 3));
    spec.contrast = rng.uniform(0.35, 0.6);
    spec.texture_sigma = rng.uniform(0.02, 0.04);
    return spec;
}

} // namespace ctseg
