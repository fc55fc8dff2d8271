#pragma once

#include <cstdint>

#include "ctseg/image.hpp"
#include "ctseg/rng.hpp"

namespace ctseg {

inline constexpr int kDenoisePatch = 32;
inline constexpr int kEnhancePatch = 128;

// Stage-1 training pair: a clean 32x32 crop and its noisy counterpart.
struct DenoisePair {
    GrayImage noisy;
    GrayImage clean;
    double sigma_255 = 0.0;
};

// Stage-2 training pair: a clean 128x128 crop and its degraded
// counterpart (down-sample, blur, contrast compression, up-sample).
struct EnhancePair {
    GrayImage degraded;
    GrayImage clean;
    double s = 1.0;
    double sigma_s = 0.0;
    double kappa = 1.0;
};

// Degradation parameter draw, uniform over the declared intervals:
// sigma_255 in (0,50], s in [1,4], sigma_s in (0,3], kappa in [1,3].
struct DegradationParams {
    double sigma_255;
    double s;
    double sigma_s;
    double kappa;
};

inline DegradationParams sample_degradation(std::uint64_t seed) {
    Rng rng(seed);
    DegradationParams p{};
    p.sigma_255 = 50.0 * rng.uniform_pos();
    p.s = 1.0 + 3.0 * rng.uniform();
    p.sigma_s = 3.0 * rng.uniform_pos();
    p.kappa = 1.0 + 2.0 * rng.uniform();
    return p;
}

inline DenoisePair make_denoise_pair(const GrayImage& src, double sigma_255, std::uint64_t seed) {
    if (src.width < kDenoisePatch || src.height < kDenoisePatch)
        throw ParamError("make_denoise_pair: source smaller than 32x32");
    if (!(sigma_255 > 0.0) || sigma_255 > 50.0)
        throw ParamError("make_denoise_pair: sigma_255 must be in (0,50]");
    DenoisePair pair;
    pair.clean = random_crop(src, kDenoisePatch, kDenoisePatch, split_seed(seed, 0));
    pair.noisy = add_gaussian_noise(pair.clean, sigma_255, split_seed(seed, 1));
    pair.sigma_255 = sigma_255;
    return pair;
}

// Degradation follows the enumerated order: down-sample by s, blur at the
// reduced scale with sigma_s, compress contrast by kappa, up-sample by s.
// The up-sampled result is forced back to exactly 128x128.
inline EnhancePair make_enhance_pair(const GrayImage& src, double s, double sigma_s, double kappa,
                                     std::uint64_t seed) {
    if (src.width < kEnhancePatch || src.height < kEnhancePatch)
        throw ParamError("make_enhance_pair: source smaller than 128x128");
    if (s < 1.0 || s > 4.0) throw ParamError("make_enhance_pair: s must be in [1,4]");
    if (!(sigma_s > 0.0) || sigma_s > 3.0)
        throw ParamError("make_enhance_pair: sigma_s must be in (0,3]");
    if (kappa < 1.0 || kappa > 3.0) throw ParamError("make_enhance_pair: kappa must be in [1,3]");

    EnhancePair pair;
    pair.clean = random_crop(src, kEnhancePatch, kEnhancePatch, split_seed(seed, 0));
    GrayImage down = resample(pair.clean, 1.0 / s, Resample::Bilinear);
    GrayImage blurred = gaussian_blur(down, sigma_s);
    GrayImage compressed = contrast_compress(blurred, kappa);
    pair.degraded = resample_to(compressed, kEnhancePatch, kEnhancePatch, Resample::Bilinear);
    pair.s = s;
    pair.sigma_s = sigma_s;
    pair.kappa = kappa;
    return pair;
}

} // namespace ctseg
