#include <catch2/catch_amalgamated.hpp>

#include "iclab/rng.hpp"

using namespace iclab;

TEST_CASE("same seed and stream replay identically", "[rng]") {
    RngStream a(123, 7), b(123, 7);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    RngStream c(123, 7), d(123, 7);
    for (int i = 0; i < 100; ++i) {
        REQUIRE(c.uniform01() == d.uniform01());
        REQUIRE(c.gaussian() == d.gaussian());
    }
}

TEST_CASE("different streams decorrelate", "[rng]") {
    RngStream a(123, 0), b(123, 1);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
}

TEST_CASE("uniform01 stays in [0,1)", "[rng]") {
    RngStream rng(5, 0);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("uniform_int covers its range and nothing else", "[rng]") {
    RngStream rng(9, 3);
    int counts[6] = {0, 0, 0, 0, 0, 0};
    for (int i = 0; i < 60000; ++i) {
        const auto v = rng.uniform_int(1, 5);
        REQUIRE(v >= 1);
        REQUIRE(v <= 5);
        counts[v] += 1;
    }
    for (int v = 1; v <= 5; ++v) {
        // 3 sigma around 12000 for p = 1/5
        CHECK(std::abs(counts[v] - 12000) < 3 * std::sqrt(60000.0 * 0.2 * 0.8));
    }
    CHECK_THROWS_AS(rng.uniform_int(2, 1), std::invalid_argument);
}

TEST_CASE("gaussian moments look standard-normal", "[rng]") {
    RngStream rng(77, 0);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}
