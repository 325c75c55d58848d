#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "iclab/model.hpp"

using namespace iclab;

namespace {

// Context slots placed in the e1/e2 plane with prescribed inner products to
// the target x* = e1.
ContextBundle planar_bundle(const std::vector<double>& inners, const std::vector<double>& ys,
                            int d = 4, double y_star = 0.0) {
    REQUIRE(inners.size() == ys.size());
    std::vector<double> e1(static_cast<std::size_t>(d), 0.0);
    e1[0] = 1.0;
    ContextBundle b;
    b.target = LabeledExample{UnitVector(e1), y_star};
    for (std::size_t i = 0; i < inners.size(); ++i) {
        const double t = inners[i];
        std::vector<double> v(static_cast<std::size_t>(d), 0.0);
        v[0] = t;
        v[1] = std::sqrt(std::max(0.0, 1.0 - t * t));
        b.context.push_back(LabeledExample{UnitVector(v), ys[i]});
    }
    return b;
}

ContextBundle random_bundle(int d, int k, RngStream& rng) {
    ContextBundle b;
    b.target = LabeledExample{sample_unit(d, rng), rng.gaussian()};
    for (int i = 0; i < k; ++i) b.context.push_back(LabeledExample{sample_unit(d, rng), rng.gaussian()});
    return b;
}

InWeightsNet random_net(int d, int hidden, RngStream& rng, double scale = 0.7) {
    InWeightsNet net = InWeightsNet::zeros(d, hidden);
    for (int i = 0; i < net.n_params(); ++i) net.param(i) = scale * rng.gaussian();
    return net;
}

}  // namespace

TEST_CASE("uniform softmax arithmetic at k = 1, theta = 0", "[model]") {
    const auto b = planar_bundle({1.0}, {3.0});
    const auto fb = forward_reduced(b, ThetaParams{}, 0.0);
    REQUIRE(fb.s.size() == 2);
    CHECK(fb.s[0] == Catch::Approx(1.0));
    CHECK(fb.s[1] == Catch::Approx(1.0));
    CHECK(fb.Z == Catch::Approx(3.0));
    CHECK(fb.a[0] == Catch::Approx(1.0 / 3.0));
    CHECK(fb.a[1] == Catch::Approx(1.0 / 3.0));
    CHECK(fb.a_star == Catch::Approx(1.0 / 3.0));
    CHECK(fb.y_bar == Catch::Approx(3.0));
    CHECK(fb.y_hat == Catch::Approx(2.0));
}

TEST_CASE("theta2 = -40 saturates the self slot", "[model]") {
    const auto b = planar_bundle({0.3, -0.2, 0.05}, {5.0, -7.0, 2.0});
    const auto fb = forward_reduced(b, ThetaParams{0.0, -40.0, 0.0}, 1.5);
    CHECK(fb.a_star >= 1.0 - 1e-15);
    CHECK(std::abs(fb.y_hat - 1.5) <= 1e-13);
}

TEST_CASE("closed form matches the hand-derived k = 2 case", "[model]") {
    const auto b = planar_bundle({1.0, 0.0}, {2.0, -2.0});
    const auto fb = forward_reduced(b, ThetaParams{1.0, 0.0, 0.0}, 0.0);
    // s = (e, 1) for the context, s_eoc = exp(0*1 + 0) = 1, Z = 1 + e + 1 + 1,
    // y_bar = 0, so y_hat = (2e - 2) / (3 + e).
    const double e = std::exp(1.0);
    const double expect = (2.0 * e - 2.0) / (3.0 + e);
    CHECK(fb.y_hat == Catch::Approx(expect).epsilon(1e-12));
    CHECK(fb.y_hat == Catch::Approx(0.6010).margin(5e-5));
}

TEST_CASE("attention simplex holds for extreme parameters", "[model]") {
    RngStream rng(31, 0);
    const double extremes[] = {-700.0, -40.0, -1.0, 0.0, 1.0, 40.0, 700.0};
    for (double t1 : extremes)
        for (double t2 : extremes)
            for (double t3 : extremes) {
                const auto b = random_bundle(5, 4, rng);
                const auto fb = forward_reduced(b, ThetaParams{t1, t2, t3}, 0.3);
                double total = fb.a_star;
                for (double a : fb.a) total += a;
                REQUIRE(std::abs(total - 1.0) <= 1e-12);
                for (double a : fb.a) REQUIRE((a >= 0.0 && a <= 1.0));
            }
}

TEST_CASE("k = 0 contexts are rejected", "[model]") {
    ContextBundle b;
    std::vector<double> e1(4, 0.0);
    e1[0] = 1.0;
    b.target = LabeledExample{UnitVector(e1), 0.0};
    CHECK_THROWS_AS(forward_reduced(b, ThetaParams{}, 0.0), std::invalid_argument);
    const InWeightsNet net = InWeightsNet::zeros(4, 8);
    CHECK_THROWS_AS(forward_full(b, ThetaParams{}, net), std::invalid_argument);
}

TEST_CASE("increasing theta1 shifts attention toward the closest slot", "[model]") {
    const auto b = planar_bundle({0.9, 0.3, -0.4}, {1.0, 2.0, 3.0});
    const auto lo = forward_reduced(b, ThetaParams{0.5, 0.0, 0.0}, 0.0);
    const auto hi = forward_reduced(b, ThetaParams{1.5, 0.0, 0.0}, 0.0);
    CHECK(hi.a[0] > lo.a[0]);
    CHECK(hi.a[0] / hi.a[1] > lo.a[0] / lo.a[1]);
    CHECK(hi.a[0] / hi.a[2] > lo.a[0] / lo.a[2]);
}

TEST_CASE("permuting context slots permutes a and leaves y_hat unchanged", "[model]") {
    RngStream rng(32, 0);
    const auto b = random_bundle(6, 4, rng);
    ContextBundle p = b;
    const int order[] = {2, 0, 3, 1};
    for (int i = 0; i < 4; ++i) p.context[static_cast<std::size_t>(i)] = b.context[static_cast<std::size_t>(order[i])];

    const ThetaParams theta{0.8, -0.2, 0.5};
    const auto fb = forward_reduced(b, theta, 0.7);
    const auto fp = forward_reduced(p, theta, 0.7);
    for (int i = 0; i < 4; ++i)
        CHECK(fp.a[static_cast<std::size_t>(i)] == Catch::Approx(fb.a[static_cast<std::size_t>(order[i])]).epsilon(1e-14));
    CHECK(fp.a[4] == Catch::Approx(fb.a[4]).epsilon(1e-14));
    CHECK(fp.y_hat == Catch::Approx(fb.y_hat).epsilon(1e-13));
}

TEST_CASE("full construction equals the reduced closed form on 1000 random bundles", "[model]") {
    RngStream rng(33, 0);
    const int dims[] = {2, 5, 10, 20};
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = dims[trial % 4];
        const int k = static_cast<int>(rng.uniform_int(1, 5));
        const auto b = random_bundle(d, k, rng);
        const InWeightsNet net = random_net(d, 8, rng);
        const ThetaParams theta{-5.0 + 10.0 * rng.uniform01(), -5.0 + 10.0 * rng.uniform01(),
                                -5.0 + 10.0 * rng.uniform01()};
        const double reduced = forward_reduced(b, theta, fhat_eval(net, b.target.x)).y_hat;
        const double full = forward_full(b, theta, net);
        REQUIRE(std::abs(full - reduced) <= 1e-9);
    }
}

TEST_CASE("FFN gate nulls the net at context positions", "[model]") {
    // b2 is huge, so any gate leak at a context or EOC position would shift
    // that token's value slot and break the equivalence by ~1e6.
    RngStream rng(34, 0);
    const auto b = random_bundle(5, 3, rng);
    InWeightsNet net = random_net(5, 8, rng);
    net.b2 = 1e6;
    const ThetaParams theta{0.5, 0.1, -0.3};
    const double reduced = forward_reduced(b, theta, fhat_eval(net, b.target.x)).y_hat;
    const double full = forward_full(b, theta, net);
    CHECK(std::abs(full - reduced) <= 1e-9 * std::max(1.0, std::abs(reduced)));
}

TEST_CASE("full construction composes the k = 1 uniform case", "[model]") {
    const auto b = planar_bundle({1.0}, {3.0});
    const InWeightsNet net = InWeightsNet::zeros(4, 16);
    CHECK(forward_full(b, ThetaParams{}, net) == Catch::Approx(2.0));
}

TEST_CASE("forward_full rejects a net of mismatched dimension", "[model]") {
    RngStream rng(35, 0);
    const auto b = random_bundle(5, 2, rng);
    const InWeightsNet net = InWeightsNet::zeros(7, 4);
    CHECK_THROWS_AS(forward_full(b, ThetaParams{}, net), std::invalid_argument);
}

TEST_CASE("fhat_eval of a zero net is zero everywhere", "[model]") {
    RngStream rng(36, 0);
    const InWeightsNet net = InWeightsNet::zeros(6, 32);
    for (int i = 0; i < 20; ++i) CHECK(fhat_eval(net, sample_unit(6, rng)) == 0.0);
}

TEST_CASE("initial net has zero output layer, so fhat starts at zero", "[model]") {
    RngStream rng(37, 0);
    const InWeightsNet net = InWeightsNet::initial(6, 32, rng);
    for (int i = 0; i < 20; ++i) CHECK(fhat_eval(net, sample_unit(6, rng)) == 0.0);
}

TEST_CASE("hand-set net reads out the first coordinate through the linear regime", "[model]") {
    InWeightsNet net = InWeightsNet::zeros(4, 1);
    const double eps = 1e-4;
    net.w1[0] = eps;          // hidden pre-activation = eps * x_1
    net.w2[0] = 1.0 / eps;    // tanh(eps x)/eps ~ x for small eps
    RngStream rng(38, 0);
    for (int i = 0; i < 50; ++i) {
        const UnitVector x = sample_unit(4, rng);
        CHECK(fhat_eval(net, x) == Catch::Approx(x.coords[0]).margin(1e-6));
    }
}

TEST_CASE("net evaluation agrees with an independent re-implementation", "[model]") {
    RngStream rng(39, 0);
    const int d = 7, hidden = 16;
    const InWeightsNet net = random_net(d, hidden, rng);
    for (int trial = 0; trial < 100; ++trial) {
        const UnitVector x = sample_unit(d, rng);
        // second route: explicit hidden vector, reversed accumulation order
        std::vector<double> hvec(static_cast<std::size_t>(hidden), 0.0);
        for (int h = hidden - 1; h >= 0; --h) {
            double z = 0.0;
            for (int c = d - 1; c >= 0; --c) z += net.w1[static_cast<std::size_t>(h * d + c)] * x.coords[static_cast<std::size_t>(c)];
            hvec[static_cast<std::size_t>(h)] = std::tanh(z + net.b1[static_cast<std::size_t>(h)]);
        }
        double out = net.b2;
        for (int h = 0; h < hidden; ++h) out += net.w2[static_cast<std::size_t>(h)] * hvec[static_cast<std::size_t>(h)];
        CHECK(std::abs(out - fhat_eval(net, x)) <= 1e-12);
    }
}
