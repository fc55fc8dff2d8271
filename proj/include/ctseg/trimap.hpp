#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ctseg/image.hpp"
#include "ctseg/recist.hpp"

namespace ctseg {

// Four-region prior derived from RECIST marks.
enum class TrimapLabel : std::uint8_t { BG = 0, PBG = 1, PFG = 2, FG = 3 };

struct Trimap {
    int width = 0;
    int height = 0;
    std::vector<TrimapLabel> labels;

    TrimapLabel at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }

    size_t count(TrimapLabel l) const {
        size_t n = 0;
        for (TrimapLabel v : labels) n += (v == l);
        return n;
    }
};

struct RoiCrop {
    GrayImage roi;
    RecistAnnotation recist; // re-expressed in ROI coordinates
    Rect rect;               // placement of the ROI in the source image
};

// Square ROI of side 2x the long diameter, centered on the long-axis
// midpoint and clipped to the image bounds.
inline Rect roi_rect(int img_w, int img_h, const RecistAnnotation& recist) {
    const double diameter = recist.long_diameter();
    if (diameter < 2.0) throw ParamError("crop_roi: degenerate long diameter");
    const int side = static_cast<int>(std::lround(2.0 * diameter));
    const Point2 mid = recist.long_midpoint();
    int x0 = static_cast<int>(std::lround(mid.x)) - side / 2;
    int y0 = static_cast<int>(std::lround(mid.y)) - side / 2;
    int x1 = x0 + side;
    int y1 = y0 + side;
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, img_w);
    y1 = std::min(y1, img_h);
    if (x1 - x0 < 1 || y1 - y0 < 1) throw ParamError("crop_roi: ROI outside image");
    return Rect{x0, y0, x1 - x0, y1 - y0};
}

inline RoiCrop crop_roi(const GrayImage& img, const RecistAnnotation& recist) {
    const Rect r = roi_rect(img.width, img.height, recist);
    RoiCrop out;
    out.roi = crop(img, r);
    out.recist = recist.shifted(-r.x0, -r.y0);
    out.rect = r;
    return out;
}

namespace detail {

inline double point_segment_dist(double px, double py, const Point2& a, const Point2& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double cx = a.x + t * vx, cy = a.y + t * vy;
    return std::hypot(px - cx, py - cy);
}

// Intersection of the two diameter lines; falls back to the long-axis
// midpoint for near-parallel segments.
inline Point2 axis_intersection(const RecistAnnotation& r) {
    const double d1x = r.p2.x - r.p1.x, d1y = r.p2.y - r.p1.y;
    const double d2x = r.p4.x - r.p3.x, d2y = r.p4.y - r.p3.y;
    const double denom = d1x * d2y - d1y * d2x;
    if (std::fabs(denom) < 1e-9) return r.long_midpoint();
    const double t = ((r.p3.x - r.p1.x) * d2y - (r.p3.y - r.p1.y) * d2x) / denom;
    return {r.p1.x + t * d1x, r.p1.y + t * d1y};
}

} // namespace detail

struct TrimapFactors {
    double fg_dilation = 0.1; // fraction of the long half-diameter
    double inner_scale = 1.0;
    double outer_scale = 1.5;
};

// FG: dilation of the two diameter segments. PFG: inner ellipse around
// the axis intersection. PBG: ring out to the outer ellipse. BG: rest.
inline Trimap build_trimap(int width, int height, const RecistAnnotation& recist,
                           const TrimapFactors& f = {}) {
    if (width < 1 || height < 1) throw ParamError("build_trimap: empty ROI");
    const double a = recist.long_diameter() / 2.0;
    const double b = recist.short_diameter() / 2.0;
    if (a <= 0.0 || b <= 0.0) throw ParamError("build_trimap: degenerate diameters");
    const Point2 center = detail::axis_intersection(recist);
    const double theta = std::atan2(recist.p2.y - recist.p1.y, recist.p2.x - recist.p1.x);
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double dil = std::max(1.0, f.fg_dilation * a);

    Trimap tm;
    tm.width = width;
    tm.height = height;
    tm.labels.resize(static_cast<size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double dx = x - center.x, dy = y - center.y;
            const double u = dx * cos_t + dy * sin_t;
            const double v = -dx * sin_t + dy * cos_t;
            TrimapLabel label;
            if (detail::point_segment_dist(x, y, recist.p1, recist.p2) <= dil ||
                detail::point_segment_dist(x, y, recist.p3, recist.p4) <= dil) {
                label = TrimapLabel::FG;
            } else {
                const double ai = f.inner_scale * a, bi = f.inner_scale * b;
                const double ao = f.outer_scale * a, bo = f.outer_scale * b;
                const double rho_in = (u / ai) * (u / ai) + (v / bi) * (v / bi);
                const double rho_out = (u / ao) * (u / ao) + (v / bo) * (v / bo);
                if (rho_in <= 1.0)
                    label = TrimapLabel::PFG;
                else if (rho_out <= 1.0)
                    label = TrimapLabel::PBG;
                else
                    label = TrimapLabel::BG;
            }
            tm.labels[static_cast<size_t>(y) * width + x] = label;
        }
    return tm;
}

} // namespace ctseg
