#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "ctseg/synth.hpp"

using namespace ctseg;

namespace {

GrayImage random_source(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    GrayImage img(w, h);
    for (float& v : img.pixels) v = static_cast<float>(rng.uniform());
    return img;
}

} // namespace

TEST_CASE("denoise pairs are 32x32, seeded, and sigma-faithful") {
    GrayImage src = random_source(64, 64, 1);
    DenoisePair a = make_denoise_pair(src, 20.0, 5);
    DenoisePair b = make_denoise_pair(src, 20.0, 5);
    REQUIRE(a.clean.width == 32);
    REQUIRE(a.clean.height == 32);
    CHECK(a.noisy.pixels == b.noisy.pixels);
    CHECK(a.clean.pixels == b.clean.pixels);

    // near-zero sigma leaves the crop essentially unchanged
    DenoisePair tiny = make_denoise_pair(src, 1e-4, 7);
    float max_diff = 0.0f;
    for (size_t i = 0; i < tiny.clean.size(); ++i)
        max_diff = std::max(max_diff, std::fabs(tiny.noisy.pixels[i] - tiny.clean.pixels[i]));
    CHECK(max_diff < 1e-5f);

    // pooled noise std over 1000 pairs
    const double sigma = 15.0;
    double acc = 0.0;
    size_t n = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        DenoisePair p = make_denoise_pair(src, sigma, seed);
        for (size_t i = 0; i < p.clean.size(); ++i) {
            const double d = p.noisy.pixels[i] - p.clean.pixels[i];
            acc += d * d;
            ++n;
        }
    }
    const double pooled = std::sqrt(acc / static_cast<double>(n));
    CHECK(pooled == Catch::Approx(sigma / 255.0).epsilon(0.05));

    GrayImage small(16, 16, 0.5f);
    CHECK_THROWS_AS(make_denoise_pair(small, 10.0, 1), ParamError);
    CHECK_THROWS_AS(make_denoise_pair(src, 60.0, 1), ParamError);
}

TEST_CASE("enhance pair with identity parameters reproduces the crop") {
    GrayImage src = random_source(160, 160, 2);
    EnhancePair p = make_enhance_pair(src, 1.0, 1e-6, 1.0, 3);
    REQUIRE(p.degraded.width == 128);
    REQUIRE(p.degraded.height == 128);
    float max_diff = 0.0f;
    for (size_t i = 0; i < p.clean.size(); ++i)
        max_diff = std::max(max_diff, std::fabs(p.degraded.pixels[i] - p.clean.pixels[i]));
    CHECK(max_diff < 1e-5f);
}

TEST_CASE("enhance pair keeps constants invariant") {
    GrayImage src(160, 160, 0.5f);
    EnhancePair p = make_enhance_pair(src, 2.5, 1.5, 3.0, 9);
    for (float v : p.degraded.pixels) CHECK(v == Catch::Approx(0.5).margin(1e-5));
}

TEST_CASE("strong downsampling reduces checkerboard variance") {
    GrayImage src(192, 192);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) src.at(x, y) = ((x + y) % 2) ? 1.0f : 0.0f;
    EnhancePair p = make_enhance_pair(src, 4.0, 0.5, 1.0, 11);
    auto variance = [](const GrayImage& img) {
        const double m = img.mean();
        double v = 0.0;
        for (float px : img.pixels) v += (px - m) * (px - m);
        return v / static_cast<double>(img.size());
    };
    CHECK(variance(p.degraded) < variance(p.clean));
}

TEST_CASE("enhance pair validates parameter ranges") {
    GrayImage src = random_source(160, 160, 4);
    CHECK_THROWS_AS(make_enhance_pair(src, 0.5, 1.0, 1.0, 1), ParamError);
    CHECK_THROWS_AS(make_enhance_pair(src, 1.0, 0.0, 1.0, 1), ParamError);
    CHECK_THROWS_AS(make_enhance_pair(src, 1.0, 1.0, 4.0, 1), ParamError);
    GrayImage small(100, 100, 0.5f);
    CHECK_THROWS_AS(make_enhance_pair(small, 1.0, 1.0, 1.0, 1), ParamError);
}

TEST_CASE("degradation sampling is uniform over the declared intervals") {
    DegradationParams first = sample_degradation(123);
    DegradationParams again = sample_degradation(123);
    CHECK(first.sigma_255 == again.sigma_255);
    CHECK(first.s == again.s);
    CHECK(first.sigma_s == again.sigma_s);
    CHECK(first.kappa == again.kappa);

    const int n = 100000;
    std::vector<double> sigma(n), s(n), sigma_s(n), kappa(n);
    for (int i = 0; i < n; ++i) {
        DegradationParams p = sample_degradation(static_cast<std::uint64_t>(i));
        sigma[i] = p.sigma_255;
        s[i] = p.s;
        sigma_s[i] = p.sigma_s;
        kappa[i] = p.kappa;
    }
    auto check_range = [](std::vector<double>& v, double lo, double hi) {
        auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        CHECK(*mn > lo - 1e-12);
        CHECK(*mx <= hi + 1e-12);
    };
    check_range(sigma, 0.0, 50.0);
    check_range(s, 1.0, 4.0);
    check_range(sigma_s, 0.0, 3.0);
    check_range(kappa, 1.0, 3.0);
    CHECK(sigma[0] > 0.0);
    CHECK(sigma_s[0] > 0.0);

    // Kolmogorov-Smirnov statistic against the uniform CDF on each marginal
    auto ks = [](std::vector<double> v, double lo, double hi) {
        std::sort(v.begin(), v.end());
        double d = 0.0;
        const double n_inv = 1.0 / static_cast<double>(v.size());
        for (size_t i = 0; i < v.size(); ++i) {
            const double cdf = (v[i] - lo) / (hi - lo);
            d = std::max(d, std::fabs(cdf - static_cast<double>(i) * n_inv));
            d = std::max(d, std::fabs(static_cast<double>(i + 1) * n_inv - cdf));
        }
        return d;
    };
    CHECK(ks(sigma, 0.0, 50.0) < 0.01);
    CHECK(ks(s, 1.0, 4.0) < 0.01);
    CHECK(ks(sigma_s, 0.0, 3.0) < 0.01);
    CHECK(ks(kappa, 1.0, 3.0) < 0.01);
}

TEST_CASE("pair generators never mutate the source") {
    GrayImage src = random_source(160, 160, 8);
    const std::vector<float> before = src.pixels;
    (void)make_denoise_pair(src, 10.0, 1);
    (void)make_enhance_pair(src, 2.0, 1.0, 2.0, 1);
    CHECK(src.pixels == before);
}
