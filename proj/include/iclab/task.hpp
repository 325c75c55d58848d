#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "iclab/geometry.hpp"
#include "iclab/rng.hpp"

namespace iclab {

// Maps an input to its label. Used wherever a sampler has to manufacture a
// fresh example and needs its ground-truth label.
using Labeler = std::function<double(const UnitVector&)>;

// Linear ground truth f(x) = w.x with ||w|| = L, so the Lipschitz constant
// is exactly L.
struct TargetFunction {
    std::vector<double> w;
    double lipschitz = 0.0;

    TargetFunction() = default;
    TargetFunction(std::vector<double> weights, double L) : w(std::move(weights)), lipschitz(L) {
        if (!(L > 0.0)) throw std::invalid_argument("TargetFunction: L must be > 0");
        if (std::abs(norm2(w) - L) > kUnitNormTol * std::max(1.0, L))
            throw std::invalid_argument("TargetFunction: ||w|| must equal L");
    }
};

inline TargetFunction make_target(int d, double L, RngStream& rng) {
    UnitVector dir = sample_unit(d, rng);
    std::vector<double> w(dir.coords);
    for (auto& c : w) c *= L;
    return TargetFunction(std::move(w), L);
}

inline double eval_target(const TargetFunction& f, const UnitVector& x) {
    if (static_cast<int>(f.w.size()) != x.dim())
        throw std::invalid_argument("eval_target: dimension mismatch");
    return dot(f.w, x.coords);
}

inline Labeler labeler_of(const TargetFunction& f) {
    return [f](const UnitVector& x) { return eval_target(f, x); };
}

// Fixed random one-hidden-layer map, the nonlinear robustness option.
// lipschitz is the bound ||w2|| * ||W1||_F, not tight but valid.
struct NonlinearTarget {
    int d = 0;
    int hidden = 0;
    std::vector<double> w1;  // hidden x d, row-major
    std::vector<double> w2;  // hidden
    double lipschitz = 0.0;

    double operator()(const UnitVector& x) const {
        if (x.dim() != d) throw std::invalid_argument("NonlinearTarget: dimension mismatch");
        double out = 0.0;
        for (int h = 0; h < hidden; ++h) {
            double z = 0.0;
            for (int c = 0; c < d; ++c) z += w1[static_cast<std::size_t>(h * d + c)] * x.coords[static_cast<std::size_t>(c)];
            out += w2[static_cast<std::size_t>(h)] * std::tanh(z);
        }
        return out;
    }
};

inline NonlinearTarget make_nonlinear_target(int d, int hidden, double scale, RngStream& rng) {
    if (d < 2 || hidden < 1) throw std::invalid_argument("make_nonlinear_target: bad sizes");
    NonlinearTarget t;
    t.d = d;
    t.hidden = hidden;
    t.w1.resize(static_cast<std::size_t>(hidden * d));
    t.w2.resize(static_cast<std::size_t>(hidden));
    for (auto& v : t.w1) v = rng.gaussian() / std::sqrt(static_cast<double>(d));
    for (auto& v : t.w2) v = scale * rng.gaussian() / std::sqrt(static_cast<double>(hidden));
    double w1f = 0.0, w2n = 0.0;
    for (double v : t.w1) w1f += v * v;
    for (double v : t.w2) w2n += v * v;
    t.lipschitz = std::sqrt(w2n) * std::sqrt(w1f);
    return t;
}

inline std::vector<LabeledExample> make_pool(int n, int d, const Labeler& label, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("make_pool: n must be >= 1");
    std::vector<LabeledExample> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        UnitVector x = sample_unit(d, rng);
        const double y = label(x);
        pool.push_back(LabeledExample{std::move(x), y});
    }
    return pool;
}

// Population MSE of an in-weights estimator over a pool.
inline double measure_E(const std::function<double(const UnitVector&)>& fhat,
                        const std::vector<LabeledExample>& pool) {
    if (pool.empty()) throw std::invalid_argument("measure_E: empty pool");
    double acc = 0.0;
    for (const auto& ex : pool) {
        const double r = fhat(ex.x) - ex.y;
        acc += r * r;
    }
    return acc / static_cast<double>(pool.size());
}

// 2 L^2 delta2 <= E <= 2 L^2 (1 - delta1), the in-weights MSE sandwich.
struct BoundsReport {
    double lower = 0.0;
    double upper = 0.0;
    double measured_E = 0.0;
    bool in_range = false;
};

inline BoundsReport eq_A_bounds(double L, double delta1, double delta2, double measured_E) {
    if (!(L > 0.0)) throw std::invalid_argument("eq_A_bounds: L must be > 0");
    if (!(delta1 > 0.0 && delta1 < 1.0 && delta2 > 0.0 && delta2 < 1.0 && delta1 + delta2 < 1.0))
        throw std::invalid_argument("eq_A_bounds: deltas out of range");
    BoundsReport r;
    r.lower = 2.0 * L * L * delta2;
    r.upper = 2.0 * L * L * (1.0 - delta1);
    r.measured_E = measured_E;
    r.in_range = r.lower <= measured_E && measured_E <= r.upper;
    return r;
}

}  // namespace iclab
