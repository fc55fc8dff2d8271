#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "ctseg/image.hpp"

using namespace ctseg;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("load_pgm parses 8-bit P5") {
    const std::string path = temp_path("ctseg_p5_8.pgm");
    std::string bytes = "P5\n2 2\n255\n";
    bytes.push_back('\x00');
    bytes.push_back('\xff');
    bytes.push_back('\x80');
    bytes.push_back('\x40');
    write_bytes(path, bytes);
    GrayImage img = load_pgm(path);
    REQUIRE(img.width == 2);
    REQUIRE(img.height == 2);
    CHECK(img.pixels[0] == 0.0f);
    CHECK(img.pixels[1] == 1.0f);
    CHECK(img.pixels[2] == Catch::Approx(128.0 / 255.0));
    CHECK(img.pixels[3] == Catch::Approx(64.0 / 255.0));
}

TEST_CASE("load_pgm parses 16-bit big-endian samples") {
    const std::string path = temp_path("ctseg_p5_16.pgm");
    std::string bytes = "P5\n1 1\n65535\n";
    bytes.push_back('\x80');
    bytes.push_back('\x00');
    write_bytes(path, bytes);
    GrayImage img = load_pgm(path);
    CHECK(img.pixels[0] == Catch::Approx(32768.0 / 65535.0).epsilon(1e-7));
}

TEST_CASE("load_pgm rejects ASCII PGM and truncation") {
    const std::string ascii = temp_path("ctseg_p2.pgm");
    write_bytes(ascii, "P2\n1 1\n255\n0\n");
    CHECK_THROWS_AS(load_pgm(ascii), FormatError);

    const std::string trunc = temp_path("ctseg_trunc.pgm");
    write_bytes(trunc, "P5\n2 2\n255\nab"); // promises 4 bytes, has 2
    CHECK_THROWS_AS(load_pgm(trunc), LengthError);

    CHECK_THROWS_AS(load_pgm(temp_path("ctseg_missing.pgm")), IoError);
}

TEST_CASE("save_pgm rounds half up and hits range endpoints") {
    const std::string path = temp_path("ctseg_half.pgm");
    GrayImage img(3, 1);
    img.pixels = {0.5f, 1.0f, 0.0f};
    save_pgm(img, path, 8);
    const std::string bytes = read_bytes(path);
    const std::string payload = bytes.substr(bytes.size() - 3);
    CHECK(static_cast<unsigned char>(payload[0]) == 128); // 0.5*255 = 127.5 rounds up
    CHECK(static_cast<unsigned char>(payload[1]) == 255);
    CHECK(static_cast<unsigned char>(payload[2]) == 0);
}

TEST_CASE("pgm round trip stays within half a quantization step") {
    const std::string path = temp_path("ctseg_rt.pgm");
    Rng rng(42);
    GrayImage img(100, 100);
    for (float& v : img.pixels) v = static_cast<float>(rng.uniform());

    save_pgm(img, path, 16);
    GrayImage back = load_pgm(path);
    float max_err = 0.0f;
    for (size_t i = 0; i < img.size(); ++i)
        max_err = std::max(max_err, std::fabs(img.pixels[i] - back.pixels[i]));
    CHECK(max_err <= 0.5f / 65535.0f + 1e-9f);

    save_pgm(img, path, 8);
    back = load_pgm(path);
    max_err = 0.0f;
    for (size_t i = 0; i < img.size(); ++i)
        max_err = std::max(max_err, std::fabs(img.pixels[i] - back.pixels[i]));
    CHECK(max_err <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("window maps the intensity interval onto [0,1]") {
    GrayImage img(4, 1);
    img.pixels = {50.0f, -150.0f, 250.0f, -350.0f};
    GrayImage out = window(img, 50.0f, 400.0f);
    CHECK(out.pixels[0] == Catch::Approx(0.5));
    CHECK(out.pixels[1] == Catch::Approx(0.0));
    CHECK(out.pixels[2] == Catch::Approx(1.0));
    CHECK(out.pixels[3] == 0.0f); // in = center - width, clamped
    CHECK_THROWS_AS(window(img, 0.0f, 0.0f), ParamError);
}

TEST_CASE("resample identity and box average") {
    GrayImage img(2, 2);
    img.pixels = {0.0f, 1.0f, 1.0f, 0.0f};
    for (Resample m : {Resample::Nearest, Resample::Bilinear, Resample::Bicubic}) {
        GrayImage same = resample(img, 1.0, m);
        REQUIRE(same.width == 2);
        for (size_t i = 0; i < img.size(); ++i)
            CHECK(same.pixels[i] == Catch::Approx(img.pixels[i]).margin(1e-6));
    }
    // half scale: the single output sample sits at the center of the 4 pixels
    GrayImage half = resample(img, 0.5, Resample::Bilinear);
    REQUIRE(half.width == 1);
    REQUIRE(half.height == 1);
    CHECK(half.pixels[0] == Catch::Approx(0.5));
}

TEST_CASE("resample keeps constants constant") {
    GrayImage img(7, 5, 0.37f);
    for (double scale : {0.4, 1.3, 2.0})
        for (Resample m : {Resample::Nearest, Resample::Bilinear, Resample::Bicubic}) {
            GrayImage out = resample(img, scale, m);
            for (float v : out.pixels) CHECK(v == Catch::Approx(0.37).margin(1e-5));
        }
    CHECK_THROWS_AS(resample(img, 0.01, Resample::Bilinear), ParamError);
}

TEST_CASE("gaussian blur identity, normalization, and kernel oracle") {
    GrayImage img(9, 9, 0.0f);
    img.at(4, 4) = 1.0f;
    GrayImage same = gaussian_blur(img, 0.0);
    CHECK(same.pixels == img.pixels);

    GrayImage flat(16, 16, 0.42f);
    GrayImage blurred = gaussian_blur(flat, 2.0);
    for (float v : blurred.pixels) CHECK(v == Catch::Approx(0.42).margin(1e-6));

    // brute-force 2-D convolution oracle on a centered impulse
    GrayImage impulse(21, 21, 0.0f);
    impulse.at(10, 10) = 1.0f;
    const double sigma = 1.0;
    GrayImage out = gaussian_blur(impulse, sigma);
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-i * i / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double expected = k[dx + radius] * k[dy + radius];
            CHECK(out.at(10 + dx, 10 + dy) == Catch::Approx(expected).margin(1e-6));
        }
}

TEST_CASE("gaussian noise is seeded and matches the requested sigma") {
    GrayImage img(1000, 1000, 0.5f);
    GrayImage a = add_gaussian_noise(img, 25.0, 7);
    GrayImage b = add_gaussian_noise(img, 25.0, 7);
    CHECK(a.pixels == b.pixels);

    double mean = 0.0, var = 0.0;
    for (size_t i = 0; i < a.size(); ++i) mean += a.pixels[i] - img.pixels[i];
    mean /= static_cast<double>(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a.pixels[i] - img.pixels[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(a.size());
    const double sigma = 25.0 / 255.0;
    CHECK(std::fabs(mean) < 3.0 * sigma / 1000.0); // CLT bound at 10^6 samples
    CHECK(std::sqrt(var) == Catch::Approx(sigma).epsilon(0.01));

    CHECK_THROWS_AS(add_gaussian_noise(img, 0.0, 1), ParamError);
    CHECK_THROWS_AS(add_gaussian_noise(img, 50.5, 1), ParamError);
}

TEST_CASE("contrast compression about the mean") {
    GrayImage img(2, 1);
    img.pixels = {0.0f, 1.0f};
    GrayImage same = contrast_compress(img, 1.0);
    CHECK(same.pixels == img.pixels);
    GrayImage out = contrast_compress(img, 2.0);
    CHECK(out.pixels[0] == Catch::Approx(0.25));
    CHECK(out.pixels[1] == Catch::Approx(0.75));

    Rng rng(3);
    GrayImage rnd(33, 17);
    for (float& v : rnd.pixels) v = static_cast<float>(rng.uniform());
    GrayImage comp = contrast_compress(rnd, 2.7);
    CHECK(comp.mean() == Catch::Approx(rnd.mean()).margin(1e-6));
    // monotone in pixel order
    for (size_t i = 0; i + 1 < rnd.size(); ++i) {
        if (rnd.pixels[i] <= rnd.pixels[i + 1]) {
            CHECK(comp.pixels[i] <= comp.pixels[i + 1] + 1e-7f);
        }
    }
    CHECK_THROWS_AS(contrast_compress(img, 0.5), ParamError);
    CHECK_THROWS_AS(contrast_compress(img, 3.5), ParamError);
}

TEST_CASE("crop extracts exact pixels") {
    GrayImage img(5, 4);
    for (size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<float>(i);
    GrayImage all = crop(img, Rect{0, 0, 5, 4});
    CHECK(all.pixels == img.pixels);
    GrayImage one = crop(img, Rect{3, 2, 1, 1});
    CHECK(one.pixels[0] == img.at(3, 2));
    CHECK_THROWS_AS(crop(img, Rect{3, 2, 3, 1}), ParamError);
}

TEST_CASE("random_crop covers every valid offset") {
    GrayImage img(34, 34);
    for (size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<float>(i);
    std::set<std::pair<float, float>> corners;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        GrayImage c = random_crop(img, 32, 32, seed);
        corners.insert({c.pixels[0], c.pixels[1]});
    }
    CHECK(corners.size() == 9); // 3x3 offset space
}

TEST_CASE("stack_channels keeps order and validates dims") {
    GrayImage a(3, 2, 0.1f), b(3, 2, 0.2f), c(3, 2, 0.3f);
    MultiChannelImage single = stack_channels({a});
    CHECK(single.channels == 1);
    CHECK(single.channel(0).pixels == a.pixels);

    MultiChannelImage three = stack_channels({a, b, c});
    CHECK(three.channels == 3);
    CHECK(three.channel(1).pixels == b.pixels);

    GrayImage bad(2, 2, 0.0f);
    std::vector<GrayImage> mismatched{a, bad};
    CHECK_THROWS_AS(stack_channels(std::span<const GrayImage>(mismatched)), ParamError);
}

TEST_CASE("blur and resample commute with adding a constant") {
    Rng rng(99);
    GrayImage img(24, 18);
    for (float& v : img.pixels) v = static_cast<float>(rng.uniform());
    GrayImage shifted = img;
    for (float& v : shifted.pixels) v += 0.25f;

    GrayImage b1 = gaussian_blur(img, 1.5);
    GrayImage b2 = gaussian_blur(shifted, 1.5);
    for (size_t i = 0; i < b1.size(); ++i)
        CHECK(b2.pixels[i] - b1.pixels[i] == Catch::Approx(0.25).margin(1e-5));

    GrayImage r1 = resample(img, 0.5, Resample::Bilinear);
    GrayImage r2 = resample(shifted, 0.5, Resample::Bilinear);
    for (size_t i = 0; i < r1.size(); ++i)
        CHECK(r2.pixels[i] - r1.pixels[i] == Catch::Approx(0.25).margin(1e-5));
}
