#include <catch2/catch_amalgamated.hpp>

#include <queue>

#include "ctseg/phantom.hpp"

using namespace ctseg;

namespace {

// flood fill connectivity check (8-neighborhood)
bool mask_connected(const BinaryMask& m) {
    int sx = -1, sy = -1;
    for (int y = 0; y < m.height && sx < 0; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) {
                sx = x;
                sy = y;
                break;
            }
    if (sx < 0) return false;
    BinaryMask seen(m.width, m.height);
    std::queue<std::pair<int, int>> q;
    q.push({sx, sy});
    seen.set(sx, sy, 1);
    size_t reached = 0;
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        ++reached;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (m.inside(nx, ny) && m.at(nx, ny) && !seen.at(nx, ny)) {
                    seen.set(nx, ny, 1);
                    q.push({nx, ny});
                }
            }
    }
    return reached == m.count();
}

// Otsu threshold over a 256-bin histogram
float otsu_threshold(const GrayImage& img) {
    float lo = img.pixels[0], hi = img.pixels[0];
    for (float v : img.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) return lo;
    std::array<double, 256> hist{};
    for (float v : img.pixels) {
        int bin = static_cast<int>((v - lo) / (hi - lo) * 255.0f);
        hist[std::clamp(bin, 0, 255)] += 1.0;
    }
    const double total = static_cast<double>(img.size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int best_bin = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[t];
        if (w0 == 0.0) continue;
        const double w1 = total - w0;
        if (w1 == 0.0) break;
        sum0 += t * hist[t];
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_bin = t;
        }
    }
    return lo + (hi - lo) * static_cast<float>(best_bin + 0.5f) / 255.0f;
}

double mask_dice(const BinaryMask& a, const BinaryMask& b) {
    size_t inter = 0;
    for (size_t i = 0; i < a.data.size(); ++i) inter += (a.data[i] && b.data[i]);
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a.count() + b.count());
}

} // namespace

TEST_CASE("high-contrast noiseless phantom is recovered by thresholding") {
    PhantomSpec spec;
    spec.contrast = 1.0;
    spec.texture_sigma = 0.01;
    spec.noise_sigma_255 = 0.0;
    spec.lobes = 1;
    spec.seed = 21;
    Phantom p = gen_phantom(spec);

    BinaryMask thresh(p.image.width, p.image.height);
    const float t = otsu_threshold(p.image);
    for (int y = 0; y < p.image.height; ++y)
        for (int x = 0; x < p.image.width; ++x)
            if (p.image.at(x, y) > t) thresh.set(x, y, 1);
    CHECK(mask_dice(thresh, p.mask) >= 0.99);
}

TEST_CASE("phantom RECIST axes satisfy the construction invariants") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        PhantomSpec spec = default_phantom_spec(kLesionCategories[seed % 8], seed);
        Phantom p = gen_phantom(spec);
        CHECK(p.recist.long_diameter() >= p.recist.short_diameter());
        // endpoints on the mask boundary (within a pixel)
        for (const Point2& pt : {p.recist.p1, p.recist.p2}) {
            const int x = static_cast<int>(std::lround(pt.x));
            const int y = static_cast<int>(std::lround(pt.y));
            REQUIRE(p.mask.inside(x, y));
            CHECK(p.mask.at(x, y));
            bool near_outside = false;
            for (int dy = -1; dy <= 1 && !near_outside; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (!p.mask.inside(nx, ny) || !p.mask.at(nx, ny)) {
                        near_outside = true;
                        break;
                    }
                }
            CHECK(near_outside);
        }
        // the axes intersect near their midpoints
        const Point2 mid = p.recist.long_midpoint();
        const Point2 smid{(p.recist.p3.x + p.recist.p4.x) / 2, (p.recist.p3.y + p.recist.p4.y) / 2};
        CHECK(std::hypot(mid.x - smid.x, mid.y - smid.y) <= 2.0);
        CHECK(mask_connected(p.mask));
        CHECK(p.mask.count() > 0);
    }
}

TEST_CASE("long axis dominance holds across many seeds") {
    for (std::uint64_t seed = 0; seed < 10000; seed += 7) {
        PhantomSpec spec;
        spec.eccentricity = (seed % 9) * 0.1;
        spec.lobes = 1 + static_cast<int>(seed % 3);
        spec.seed = seed;
        Phantom p = gen_phantom(spec);
        CHECK(p.recist.long_diameter() >= p.recist.short_diameter() - 1e-9);
    }
}

TEST_CASE("circular phantom has nearly equal diameters") {
    PhantomSpec spec;
    spec.eccentricity = 0.0;
    spec.lobes = 1;
    spec.seed = 5;
    Phantom p = gen_phantom(spec);
    CHECK(std::fabs(p.recist.long_diameter() - p.recist.short_diameter()) <= 1.0);
}

TEST_CASE("phantom generation is deterministic and validates geometry") {
    PhantomSpec spec;
    spec.seed = 77;
    Phantom a = gen_phantom(spec);
    Phantom b = gen_phantom(spec);
    CHECK(a.image.pixels == b.image.pixels);
    CHECK(a.mask.data == b.mask.data);

    PhantomSpec too_big;
    too_big.size = 32;
    too_big.lesion_radius = 20.0;
    CHECK_THROWS_AS(gen_phantom(too_big), ParamError);
    PhantomSpec bad;
    bad.contrast = 1.5;
    CHECK_THROWS_AS(gen_phantom(bad), ParamError);
}
