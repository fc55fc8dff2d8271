#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <span>
#include <vector>

#include "ctseg/common.hpp"
#include "ctseg/rng.hpp"

namespace ctseg {

inline void log_warn(const std::string& msg) { std::cerr << "[warn] " << msg << "\n"; }

// Diagonal-covariance Gaussian mixture over 1..3-dimensional samples.
struct GmmComponent {
    double weight = 0.0;
    std::vector<double> mean;
    std::vector<double> var; // diagonal, floored at kGmmVarFloor
};

inline constexpr double kGmmVarFloor = 1e-6;

struct GmmModel {
    int dims = 1;
    std::vector<GmmComponent> comps;

    // log of the mixture density at x
    double log_likelihood(std::span<const double> x) const {
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(comps.size());
        for (size_t k = 0; k < comps.size(); ++k) {
            const GmmComponent& c = comps[k];
            if (c.weight <= 0.0) {
                terms[k] = -std::numeric_limits<double>::infinity();
                continue;
            }
            double logn = 0.0;
            for (int d = 0; d < dims; ++d) {
                const double diff = x[d] - c.mean[d];
                logn += -0.5 * (std::log(2.0 * 3.14159265358979323846 * c.var[d]) +
                                diff * diff / c.var[d]);
            }
            terms[k] = std::log(c.weight) + logn;
            best = std::max(best, terms[k]);
        }
        if (!std::isfinite(best)) return best;
        double acc = 0.0;
        for (double t : terms)
            if (std::isfinite(t)) acc += std::exp(t - best);
        return best + std::log(acc);
    }
};

namespace detail {

inline double sq_dist(const double* a, const double* b, int dims) {
    double acc = 0.0;
    for (int d = 0; d < dims; ++d) acc += (a[d] - b[d]) * (a[d] - b[d]);
    return acc;
}

// k-means++ seeding: first center uniform, then D^2 sampling.
inline std::vector<size_t> kmeanspp_centers(std::span<const double> data, int dims, int k,
                                            Rng& rng) {
    const size_t n = data.size() / dims;
    std::vector<size_t> centers;
    centers.push_back(rng.uniform_int(n));
    std::vector<double> d2(n);
    while (centers.size() < static_cast<size_t>(k)) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (size_t c : centers)
                best = std::min(best, sq_dist(&data[i * dims], &data[c * dims], dims));
            d2[i] = best;
            total += best;
        }
        size_t pick;
        if (total <= 0.0) {
            pick = rng.uniform_int(n); // all points coincide with a center
        } else {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(pick);
    }
    return centers;
}

} // namespace detail

// k-means++ initialization followed by EM. The per-iteration data
// log-likelihood (evaluated before each M step) is appended to
// ll_history when provided and is non-decreasing.
inline GmmModel fit_gmm(std::span<const double> data, int dims, int k, int iters,
                        std::uint64_t seed, std::vector<double>* ll_history = nullptr) {
    if (dims < 1 || data.size() % dims != 0) throw ParamError("fit_gmm: bad data layout");
    const size_t n = data.size() / dims;
    if (n == 0) throw ParamError("fit_gmm: no samples");
    if (k < 1) throw ParamError("fit_gmm: k must be >= 1");
    if (static_cast<size_t>(k) > n) {
        log_warn("fit_gmm: fewer samples than components, reducing K to " + std::to_string(n));
        k = static_cast<int>(n);
    }

    Rng rng(seed);
    GmmModel model;
    model.dims = dims;
    model.comps.resize(k);

    // initial hard assignment to the k-means++ centers
    const std::vector<size_t> centers = detail::kmeanspp_centers(data, dims, k, rng);
    std::vector<int> assign(n);
    for (size_t i = 0; i < n; ++i) {
        int best_k = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const double d = detail::sq_dist(&data[i * dims], &data[centers[c] * dims], dims);
            if (d < best) {
                best = d;
                best_k = c;
            }
        }
        assign[i] = best_k;
    }
    for (int c = 0; c < k; ++c) {
        GmmComponent& comp = model.comps[c];
        comp.mean.assign(dims, 0.0);
        comp.var.assign(dims, 0.0);
        size_t count = 0;
        for (size_t i = 0; i < n; ++i)
            if (assign[i] == c) {
                ++count;
                for (int d = 0; d < dims; ++d) comp.mean[d] += data[i * dims + d];
            }
        if (count == 0) {
            // empty cell: park the component on its seeding center
            for (int d = 0; d < dims; ++d) comp.mean[d] = data[centers[c] * dims + d];
            comp.var.assign(dims, kGmmVarFloor);
            comp.weight = 1.0 / static_cast<double>(n * k);
            continue;
        }
        for (int d = 0; d < dims; ++d) comp.mean[d] /= static_cast<double>(count);
        for (size_t i = 0; i < n; ++i)
            if (assign[i] == c)
                for (int d = 0; d < dims; ++d) {
                    const double diff = data[i * dims + d] - comp.mean[d];
                    comp.var[d] += diff * diff;
                }
        for (int d = 0; d < dims; ++d)
            comp.var[d] = std::max(comp.var[d] / static_cast<double>(count), kGmmVarFloor);
        comp.weight = static_cast<double>(count) / static_cast<double>(n);
    }
    {
        // normalize weights (empty cells got a nominal share)
        double wsum = 0.0;
        for (const GmmComponent& c : model.comps) wsum += c.weight;
        for (GmmComponent& c : model.comps) c.weight /= wsum;
    }

    // EM
    std::vector<double> resp(n * static_cast<size_t>(k));
    for (int iter = 0; iter < iters; ++iter) {
        // E step (also yields the data log-likelihood under current params)
        double ll = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const GmmComponent& comp = model.comps[c];
                double logn = std::log(std::max(comp.weight, 1e-300));
                for (int d = 0; d < dims; ++d) {
                    const double diff = data[i * dims + d] - comp.mean[d];
                    logn += -0.5 * (std::log(2.0 * 3.14159265358979323846 * comp.var[d]) +
                                    diff * diff / comp.var[d]);
                }
                resp[i * k + c] = logn;
                best = std::max(best, logn);
            }
            double norm = 0.0;
            for (int c = 0; c < k; ++c) norm += std::exp(resp[i * k + c] - best);
            const double log_norm = best + std::log(norm);
            ll += log_norm;
            for (int c = 0; c < k; ++c) resp[i * k + c] = std::exp(resp[i * k + c] - log_norm);
        }
        if (ll_history) ll_history->push_back(ll);

        // M step
        for (int c = 0; c < k; ++c) {
            GmmComponent& comp = model.comps[c];
            double nk = 0.0;
            for (size_t i = 0; i < n; ++i) nk += resp[i * k + c];
            if (nk < 1e-12) continue; // starved component: leave untouched
            std::vector<double> mean(dims, 0.0);
            for (size_t i = 0; i < n; ++i)
                for (int d = 0; d < dims; ++d) mean[d] += resp[i * k + c] * data[i * dims + d];
            for (int d = 0; d < dims; ++d) mean[d] /= nk;
            std::vector<double> var(dims, 0.0);
            for (size_t i = 0; i < n; ++i)
                for (int d = 0; d < dims; ++d) {
                    const double diff = data[i * dims + d] - mean[d];
                    var[d] += resp[i * k + c] * diff * diff;
                }
            for (int d = 0; d < dims; ++d) var[d] = std::max(var[d] / nk, kGmmVarFloor);
            comp.weight = nk / static_cast<double>(n);
            comp.mean = std::move(mean);
            comp.var = std::move(var);
        }
        double wsum = 0.0;
        for (const GmmComponent& c : model.comps) wsum += c.weight;
        for (GmmComponent& c : model.comps) c.weight /= wsum;
    }
    return model;
}

} // namespace ctseg
