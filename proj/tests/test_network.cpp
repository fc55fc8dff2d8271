#include <catch2/catch_amalgamated.hpp>

#include "ctseg/gradcheck.hpp"
#include "ctseg/network.hpp"

using namespace ctseg;

namespace {

Tensor4<double> random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
    Tensor4<double> t(n, c, h, w);
    Rng rng(seed);
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

} // namespace

TEST_CASE("shape validation catches inconsistent compositions") {
    NetworkSpec spec;
    spec.layers = {LayerSpec::conv(1, 8), LayerSpec::batchnorm(4)};
    CHECK_THROWS_AS(validate_shapes(spec, {1, 1, 8, 8}), ShapeError);

    spec.layers = {LayerSpec::conv(1, 8), LayerSpec::dense(100, 4)};
    CHECK_THROWS_AS(validate_shapes(spec, {1, 1, 8, 8}), ShapeError);

    spec.layers = {LayerSpec::res_begin(), LayerSpec::conv(1, 2)};
    CHECK_THROWS_AS(validate_shapes(spec, {1, 1, 8, 8}), ShapeError); // unmatched begin

    spec.layers = {LayerSpec::res_begin(), LayerSpec::conv(1, 2), LayerSpec::res_end()};
    CHECK_THROWS_AS(validate_shapes(spec, {1, 1, 8, 8}), ShapeError); // skip shape mismatch

    spec.layers = {LayerSpec::conv(1, 4), LayerSpec::conv(4, 1)};
    spec.global_skip = true;
    CHECK_NOTHROW(validate_shapes(spec, {1, 1, 8, 8}));
}

TEST_CASE("residual block with zeroed branch output is an identity") {
    NetworkSpec spec;
    spec.layers = {LayerSpec::res_begin(), LayerSpec::conv(2, 2), LayerSpec::res_end()};
    NetworkParams<double> params = init_params<double>(spec, 1);
    std::fill(params.layers[1].w.begin(), params.layers[1].w.end(), 0.0);
    Tensor4<double> x = random_tensor(1, 2, 5, 5, 2);
    Tensor4<double> y = forward(spec, params, x, Mode::Train);
    CHECK(y.data == x.data);
}

TEST_CASE("global skip with zeroed output conv is an identity") {
    NetworkSpec spec;
    spec.layers = {LayerSpec::conv(1, 4), LayerSpec::prelu(4), LayerSpec::conv(4, 1)};
    spec.global_skip = true;
    NetworkParams<double> params = init_params<double>(spec, 3);
    std::fill(params.layers[2].w.begin(), params.layers[2].w.end(), 0.0);
    Tensor4<double> x = random_tensor(2, 1, 6, 7, 4);
    Tensor4<double> y = forward(spec, params, x, Mode::Train);
    CHECK(y.data == x.data);
}

TEST_CASE("residual composition passes gradient checks") {
    NetworkSpec spec;
    spec.layers = {
        LayerSpec::conv(1, 4),
        LayerSpec::res_begin(),
        LayerSpec::conv(4, 4),
        LayerSpec::batchnorm(4),
        LayerSpec::prelu(4),
        LayerSpec::conv(4, 4),
        LayerSpec::batchnorm(4),
        LayerSpec::res_end(),
        LayerSpec::conv(4, 1),
    };
    spec.global_skip = true;
    NetworkParams<double> params = init_params<double>(spec, 5);
    Tensor4<double> x = random_tensor(2, 1, 6, 6, 6);
    CHECK(grad_check(spec, params, x, 7) < 1e-4);
}

TEST_CASE("forward is deterministic") {
    NetworkSpec spec;
    spec.layers = {LayerSpec::conv(1, 4), LayerSpec::leaky_relu(0.2), LayerSpec::conv(4, 1)};
    NetworkParams<double> params = init_params<double>(spec, 8);
    Tensor4<double> x = random_tensor(1, 1, 9, 9, 9);
    Tensor4<double> y1 = forward(spec, params, x, Mode::Train);
    Tensor4<double> y2 = forward(spec, params, x, Mode::Train);
    CHECK(y1.data == y2.data);
}

TEST_CASE("dense head after conv stack validates and runs") {
    NetworkSpec spec;
    spec.layers = {
        LayerSpec::conv(1, 4, 2),
        LayerSpec::leaky_relu(0.2),
        LayerSpec::dense(4 * 4 * 4, 3),
        LayerSpec::sigmoid(),
    };
    NetworkParams<double> params = init_params<double>(spec, 10);
    Tensor4<double> x = random_tensor(2, 1, 8, 8, 11);
    Tensor4<double> y = forward(spec, params, x, Mode::Train);
    CHECK(y.c == 3);
    CHECK(y.h == 1);
    for (double v : y.data) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    CHECK(grad_check(spec, params, x, 12) < 1e-4);
}
