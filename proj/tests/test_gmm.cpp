#include <catch2/catch_amalgamated.hpp>

#include "ctseg/gmm.hpp"

using namespace ctseg;

TEST_CASE("two separated clusters are recovered") {
    Rng rng(1);
    std::vector<double> data;
    std::vector<double> lo_pts, hi_pts;
    for (int i = 0; i < 400; ++i) {
        const double v = (i % 2 == 0) ? 0.2 + 0.01 * rng.normal() : 0.8 + 0.01 * rng.normal();
        data.push_back(v);
        (i % 2 == 0 ? lo_pts : hi_pts).push_back(v);
    }
    auto centroid = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return m / static_cast<double>(v.size());
    };
    GmmModel model = fit_gmm(data, 1, 2, 50, 7);
    REQUIRE(model.comps.size() == 2);
    std::vector<double> means{model.comps[0].mean[0], model.comps[1].mean[0]};
    std::sort(means.begin(), means.end());
    CHECK(means[0] == Catch::Approx(centroid(lo_pts)).margin(0.01));
    CHECK(means[1] == Catch::Approx(centroid(hi_pts)).margin(0.01));
    double wsum = 0.0;
    for (const GmmComponent& c : model.comps) wsum += c.weight;
    CHECK(wsum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("single component reduces to sample statistics") {
    Rng rng(2);
    std::vector<double> data;
    for (int i = 0; i < 100; ++i) data.push_back(rng.uniform());
    GmmModel model = fit_gmm(data, 1, 1, 10, 3);
    double mean = 0.0;
    for (double v : data) mean += v;
    mean /= static_cast<double>(data.size());
    double var = 0.0;
    for (double v : data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(data.size());
    CHECK(model.comps[0].mean[0] == Catch::Approx(mean).margin(1e-12));
    CHECK(model.comps[0].var[0] == Catch::Approx(var).margin(1e-12));
    CHECK(model.comps[0].weight == Catch::Approx(1.0));
}

TEST_CASE("EM log-likelihood is non-decreasing on random datasets") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (int dims : {1, 3}) {
            Rng rng(split_seed(seed, static_cast<std::uint64_t>(dims)));
            std::vector<double> data;
            const int n = 150;
            for (int i = 0; i < n * dims; ++i) data.push_back(rng.uniform() + 0.2 * rng.normal());
            std::vector<double> history;
            fit_gmm(data, dims, 4, 50, seed, &history);
            REQUIRE(history.size() == 50);
            for (size_t i = 1; i < history.size(); ++i)
                CHECK(history[i] >= history[i - 1] - 1e-9);
        }
    }
}

TEST_CASE("K is reduced when there are fewer samples") {
    std::vector<double> data{0.1, 0.5, 0.9};
    GmmModel model = fit_gmm(data, 1, 5, 5, 1);
    CHECK(model.comps.size() == 3);
}

TEST_CASE("variances respect the floor") {
    std::vector<double> data(50, 0.5); // identical samples
    GmmModel model = fit_gmm(data, 1, 2, 20, 9);
    for (const GmmComponent& c : model.comps)
        for (double v : c.var) CHECK(v >= kGmmVarFloor);
    CHECK(std::isfinite(model.log_likelihood(std::vector<double>{0.5})));
}

TEST_CASE("fit_gmm rejects bad input") {
    std::vector<double> data{0.1, 0.2, 0.3};
    CHECK_THROWS_AS(fit_gmm(data, 2, 1, 5, 1), ParamError); // 3 values, dims 2
    CHECK_THROWS_AS(fit_gmm(std::vector<double>{}, 1, 1, 5, 1), ParamError);
    CHECK_THROWS_AS(fit_gmm(data, 1, 0, 5, 1), ParamError);
}
