#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ctseg/gmm.hpp"
#include "ctseg/mask.hpp"
#include "ctseg/maxflow.hpp"
#include "ctseg/trimap.hpp"

// GrabCut: alternate between fitting foreground/background GMM
// appearance models and relabeling via a min cut over the pixel grid.
// FG/BG trimap pixels are pinned; only PFG/PBG pixels may flip.

namespace ctseg {

struct GrabCutParams {
    int k = 5;            // GMM components per model
    double gamma = 50.0;  // smoothness weight
    int max_iters = 5;
    int em_iters = 10;
    std::uint64_t seed = 0;
};

// Optional per-iteration snapshots for energy audits.
struct GrabCutDebug {
    double beta = 0.0;
    std::vector<GmmModel> fg_models, bg_models;
    std::vector<std::vector<std::uint8_t>> labels; // lesion flags after each cut
};

namespace detail {

inline constexpr std::array<std::array<int, 2>, 4> kHalfNeighborhood{
    {{1, 0}, {0, 1}, {1, 1}, {1, -1}}}; // one arc per unordered 8-neighbor pair

inline double feature_sq_dist(const MultiChannelImage& img, size_t p, size_t q) {
    const size_t plane = static_cast<size_t>(img.width) * img.height;
    double acc = 0.0;
    for (int c = 0; c < img.channels; ++c) {
        const double d = img.pixels[c * plane + p] - img.pixels[c * plane + q];
        acc += d * d;
    }
    return acc;
}

inline void gather_feature(const MultiChannelImage& img, size_t p, double* out) {
    const size_t plane = static_cast<size_t>(img.width) * img.height;
    for (int c = 0; c < img.channels; ++c) out[c] = img.pixels[c * plane + p];
}

} // namespace detail

// Mean squared feature difference over 8-neighbor pairs, the beta
// denominator of the canonical parameterization.
inline double grabcut_beta(const MultiChannelImage& img) {
    double acc = 0.0;
    size_t count = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (const auto& d : detail::kHalfNeighborhood) {
                const int nx = x + d[0], ny = y + d[1];
                if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
                acc += detail::feature_sq_dist(img, static_cast<size_t>(y) * img.width + x,
                                               static_cast<size_t>(ny) * img.width + nx);
                ++count;
            }
    if (count == 0 || acc <= 0.0) return 0.0; // constant image: no contrast term
    return 1.0 / (2.0 * acc / static_cast<double>(count));
}

// Data + smoothness energy of a labeling under fixed GMMs; used by the
// energy-monotonicity audits.
inline double grabcut_energy(const MultiChannelImage& img, const std::vector<std::uint8_t>& lesion,
                             const GmmModel& fg, const GmmModel& bg, double gamma, double beta) {
    const size_t n = static_cast<size_t>(img.width) * img.height;
    double energy = 0.0;
    std::array<double, 4> feat{};
    for (size_t p = 0; p < n; ++p) {
        detail::gather_feature(img, p, feat.data());
        const GmmModel& model = lesion[p] ? fg : bg;
        energy += -model.log_likelihood(std::span<const double>(feat.data(), img.channels));
    }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (const auto& d : detail::kHalfNeighborhood) {
                const int nx = x + d[0], ny = y + d[1];
                if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
                const size_t p = static_cast<size_t>(y) * img.width + x;
                const size_t q = static_cast<size_t>(ny) * img.width + nx;
                if (lesion[p] != lesion[q]) {
                    const double dist = (d[0] != 0 && d[1] != 0) ? std::sqrt(2.0) : 1.0;
                    energy += gamma * std::exp(-beta * detail::feature_sq_dist(img, p, q)) / dist;
                }
            }
    return energy;
}

inline BinaryMask grabcut(const MultiChannelImage& img, const Trimap& trimap,
                          const GrabCutParams& params = {}, GrabCutDebug* debug = nullptr) {
    if (img.width != trimap.width || img.height != trimap.height)
        throw ParamError("grabcut: image/trimap dimension mismatch");
    if (img.channels != 1 && img.channels != 3)
        throw ParamError("grabcut: expected 1 or 3 channels");
    if (trimap.count(TrimapLabel::FG) == 0 || trimap.count(TrimapLabel::BG) == 0)
        throw ParamError("grabcut: trimap must contain both FG and BG pixels");

    const int w = img.width, h = img.height;
    const size_t n = static_cast<size_t>(w) * h;
    const int dims = img.channels;

    std::vector<std::uint8_t> lesion(n);
    for (size_t p = 0; p < n; ++p) {
        const TrimapLabel l = trimap.labels[p];
        lesion[p] = (l == TrimapLabel::FG || l == TrimapLabel::PFG) ? 1 : 0;
    }

    const double beta = grabcut_beta(img);
    if (debug) debug->beta = beta;

    // n-link capacities are labeling-independent; precompute them
    struct NLink {
        int p, q;
        double cap;
    };
    std::vector<NLink> nlinks;
    nlinks.reserve(4 * n);
    std::vector<double> nlink_sum(n, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (const auto& d : detail::kHalfNeighborhood) {
                const int nx = x + d[0], ny = y + d[1];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const size_t p = static_cast<size_t>(y) * w + x;
                const size_t q = static_cast<size_t>(ny) * w + nx;
                const double dist = (d[0] != 0 && d[1] != 0) ? std::sqrt(2.0) : 1.0;
                const double cap =
                    params.gamma * std::exp(-beta * detail::feature_sq_dist(img, p, q)) / dist;
                nlinks.push_back({static_cast<int>(p), static_cast<int>(q), cap});
                nlink_sum[p] += cap;
                nlink_sum[q] += cap;
            }

    std::array<double, 4> feat{};
    for (int iter = 0; iter < params.max_iters; ++iter) {
        // appearance models from the current labeling
        std::vector<double> fg_data, bg_data;
        fg_data.reserve(n);
        bg_data.reserve(n);
        for (size_t p = 0; p < n; ++p) {
            detail::gather_feature(img, p, feat.data());
            std::vector<double>& dst = lesion[p] ? fg_data : bg_data;
            dst.insert(dst.end(), feat.begin(), feat.begin() + dims);
        }
        if (fg_data.empty() || bg_data.empty())
            throw ParamError("grabcut: labeling collapsed to one side");
        const GmmModel fg = fit_gmm(fg_data, dims, params.k, params.em_iters,
                                    split_seed(params.seed, 2 * iter), nullptr);
        const GmmModel bg = fit_gmm(bg_data, dims, params.k, params.em_iters,
                                    split_seed(params.seed, 2 * iter + 1), nullptr);
        if (debug) {
            debug->fg_models.push_back(fg);
            debug->bg_models.push_back(bg);
        }

        // data terms, shifted per pixel so capacities are nonnegative;
        // the shift is constant across cuts and keeps the argmin
        std::vector<double> cap_src(n), cap_sink(n);
        double max_incident = 0.0;
        for (size_t p = 0; p < n; ++p) {
            detail::gather_feature(img, p, feat.data());
            const std::span<const double> fv(feat.data(), dims);
            const double d_fg = -fg.log_likelihood(fv);
            const double d_bg = -bg.log_likelihood(fv);
            const double shift = std::min(d_fg, d_bg);
            cap_src[p] = d_bg - shift;
            cap_sink[p] = d_fg - shift;
            max_incident = std::max(max_incident, nlink_sum[p] + cap_src[p] + cap_sink[p]);
        }
        const double pin_cap = max_incident + 1.0; // exceeds any other incident capacity sum

        FlowGraph graph(static_cast<int>(n) + 2);
        const int src = static_cast<int>(n);
        const int sink = static_cast<int>(n) + 1;
        for (size_t p = 0; p < n; ++p) {
            const TrimapLabel l = trimap.labels[p];
            if (l == TrimapLabel::FG) {
                graph.add_edge(src, static_cast<int>(p), pin_cap);
            } else if (l == TrimapLabel::BG) {
                graph.add_edge(static_cast<int>(p), sink, pin_cap);
            } else {
                if (cap_src[p] > 0.0) graph.add_edge(src, static_cast<int>(p), cap_src[p]);
                if (cap_sink[p] > 0.0) graph.add_edge(static_cast<int>(p), sink, cap_sink[p]);
            }
        }
        for (const NLink& e : nlinks) graph.add_edge(e.p, e.q, e.cap, e.cap);

        graph.max_flow(src, sink);
        const std::vector<char> side = graph.source_side();

        bool changed = false;
        for (size_t p = 0; p < n; ++p) {
            const TrimapLabel l = trimap.labels[p];
            if (l != TrimapLabel::PFG && l != TrimapLabel::PBG) continue;
            const std::uint8_t new_label = side[p] ? 1 : 0;
            if (new_label != lesion[p]) {
                lesion[p] = new_label;
                changed = true;
            }
        }
        if (debug) debug->labels.push_back(lesion);
        if (!changed) break;
    }

    BinaryMask mask(w, h);
    mask.data = lesion;
    return mask;
}

inline BinaryMask grabcut(const GrayImage& img, const Trimap& trimap,
                          const GrabCutParams& params = {}, GrabCutDebug* debug = nullptr) {
    return grabcut(stack_channels({img}), trimap, params, debug);
}

} // namespace ctseg
