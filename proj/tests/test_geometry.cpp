#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "iclab/geometry.hpp"

using namespace iclab;

TEST_CASE("sample_unit returns unit vectors", "[geometry]") {
    RngStream rng(1, 0);
    for (int i = 0; i < 200; ++i) {
        const UnitVector v = sample_unit(2 + i % 19, rng);
        CHECK(std::abs(dot(v.coords, v.coords) - 1.0) <= 1e-9);
    }
}

TEST_CASE("sample_unit is deterministic per stream", "[geometry]") {
    RngStream a(42, 3), b(42, 3);
    const UnitVector va = sample_unit(10, a);
    const UnitVector vb = sample_unit(10, b);
    REQUIRE(va.coords == vb.coords);
}

TEST_CASE("sample_unit rejects d < 2", "[geometry]") {
    RngStream rng(1, 0);
    CHECK_THROWS_AS(sample_unit(1, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_unit(0, rng), std::invalid_argument);
}

TEST_CASE("draws are isotropic: mean pairwise inner product near zero", "[geometry]") {
    // Sum over all pairs x_i . x_j = (||S||^2 - n) / 2 with S the coordinate
    // sum, which keeps this O(n d) instead of O(n^2 d).
    const int n = 10000, d = 10;
    RngStream rng(2024, 0);
    std::vector<double> s(d, 0.0);
    for (int i = 0; i < n; ++i) {
        const UnitVector v = sample_unit(d, rng);
        for (int c = 0; c < d; ++c) s[static_cast<std::size_t>(c)] += v.coords[static_cast<std::size_t>(c)];
    }
    const double s2 = dot(s, s);
    const double n_pairs = 0.5 * n * (n - 1.0);
    const double mean_pair = (s2 - n) / (2.0 * n_pairs);
    const double sigma = 1.0 / std::sqrt(d * n_pairs);
    CHECK(std::abs(mean_pair) <= 3.0 * sigma);
}

TEST_CASE("perturb_within_cap honors the cap exactly", "[geometry]") {
    RngStream rng(7, 0);
    const UnitVector x = sample_unit(10, rng);

    double min_inner = 1.0, mean_inner = 0.0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        const UnitVector xp = perturb_within_cap(x, 0.02, rng);
        const double t = xp.dot_with(x);
        REQUIRE(t >= 0.98);
        REQUIRE(xp.coords != x.coords);
        CHECK(std::abs(dot(xp.coords, xp.coords) - 1.0) <= 1e-9);
        min_inner = std::min(min_inner, t);
        mean_inner += t;
    }
    mean_inner /= n;
    INFO("min inner " << min_inner << ", mean inner " << mean_inner);
    CHECK(min_inner >= 0.98);
    CHECK(mean_inner < 1.0);
}

TEST_CASE("perturb_within_cap with a nearly vacuous cap still returns unit vectors", "[geometry]") {
    RngStream rng(8, 0);
    const UnitVector x = sample_unit(5, rng);
    for (int i = 0; i < 100; ++i) {
        const UnitVector xp = perturb_within_cap(x, 0.999, rng);
        CHECK(xp.dot_with(x) >= 1.0 - 0.999);
    }
}

TEST_CASE("perturb_within_cap validates delta2", "[geometry]") {
    RngStream rng(9, 0);
    const UnitVector x = sample_unit(4, rng);
    CHECK_THROWS_AS(perturb_within_cap(x, 0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(perturb_within_cap(x, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(perturb_within_cap(x, -0.1, rng), std::invalid_argument);
}

TEST_CASE("UnitVector construction enforces the invariants", "[geometry]") {
    CHECK_THROWS_AS(UnitVector(std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(UnitVector(std::vector<double>{1.0, 1.0}), std::invalid_argument);
    CHECK_NOTHROW(UnitVector(std::vector<double>{1.0, 0.0}));
}
