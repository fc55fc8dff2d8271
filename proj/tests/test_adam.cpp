#include <catch2/catch_amalgamated.hpp>

#include "ctseg/adam.hpp"

using namespace ctseg;

TEST_CASE("adam with zero gradients is a fixed point") {
    std::vector<double> p{0.3, -1.2, 4.5};
    std::vector<double> g(3, 0.0);
    std::vector<double> m(3, 0.0), v(3, 0.0);
    const std::vector<double> before = p;
    AdamConfig cfg;
    for (long step = 1; step <= 5; ++step) adam_update(p, g, m, v, step, cfg);
    CHECK(p == before);
}

TEST_CASE("adam first step matches the closed form") {
    std::vector<double> p{0.0};
    std::vector<double> g{1.0};
    std::vector<double> m{0.0}, v{0.0};
    AdamConfig cfg;
    cfg.lr = 0.1;
    adam_update(p, g, m, v, 1, cfg);
    // mhat = vhat = 1 after bias correction; p1 = -lr / (1 + eps)
    CHECK(p[0] == Catch::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(p[0] == Catch::Approx(-0.09999999).margin(1e-7));
}

TEST_CASE("adam descends a convex quadratic monotonically") {
    // f(p) = (p - 1)^2, grad = 2 (p - 1)
    std::vector<double> p{-2.0};
    std::vector<double> m{0.0}, v{0.0};
    AdamConfig cfg;
    cfg.lr = 0.05;
    double prev_loss = (p[0] - 1.0) * (p[0] - 1.0);
    for (long step = 1; step <= 50; ++step) {
        std::vector<double> g{2.0 * (p[0] - 1.0)};
        adam_update(p, g, m, v, step, cfg);
        const double loss = (p[0] - 1.0) * (p[0] - 1.0);
        CHECK(loss < prev_loss);
        prev_loss = loss;
    }
}

TEST_CASE("network-level adam step updates every trainable buffer") {
    NetworkSpec spec;
    spec.layers = {LayerSpec::conv(1, 2), LayerSpec::batchnorm(2), LayerSpec::prelu(2)};
    NetworkParams<float> params = init_params<float>(spec, 1);
    AdamState<float> state(spec, params, AdamConfig{});

    NetworkParams<float> grads = zero_grads(spec, params);
    for (auto& layer : grads.layers) {
        for (float& v : layer.w) v = 1.0f;
        for (float& v : layer.gamma) v = 1.0f;
        for (float& v : layer.slope) v = 1.0f;
    }
    NetworkParams<float> before = params;
    adam_step(params, grads, state);
    CHECK(state.step == 1);
    for (size_t i = 0; i < params.layers.size(); ++i) {
        for (size_t j = 0; j < params.layers[i].w.size(); ++j)
            CHECK(params.layers[i].w[j] != before.layers[i].w[j]);
        for (size_t j = 0; j < params.layers[i].gamma.size(); ++j)
            CHECK(params.layers[i].gamma[j] != before.layers[i].gamma[j]);
        for (size_t j = 0; j < params.layers[i].slope.size(); ++j)
            CHECK(params.layers[i].slope[j] != before.layers[i].slope[j]);
        // biases had zero gradient: untouched
        for (size_t j = 0; j < params.layers[i].b.size(); ++j)
            CHECK(params.layers[i].b[j] == before.layers[i].b[j]);
    }
}
