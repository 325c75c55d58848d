#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "iclab/grad.hpp"
#include "iclab/model.hpp"
#include "iclab/regime.hpp"
#include "iclab/rng.hpp"

namespace iclab {

// Closed-form vs central-difference agreement over randomized configurations:
// d cycling {2,5,10}, k in [1,5], theta uniform in [-3,3]^3, fully random net
// and bundle. A component passes when the relative error is within tol_rel or
// the absolute error within tol_abs.
struct GradcheckResult {
    int passed = 0;
    int total = 0;
    double worst_rel = 0.0;
};

namespace detail {

inline bool grad_component_ok(double a, double b, double tol_rel, double tol_abs,
                              double& worst_rel) {
    const double abs_err = std::abs(a - b);
    const double mag = std::max(std::abs(a), std::abs(b));
    if (abs_err <= tol_abs) return true;
    const double rel = mag > 0.0 ? abs_err / mag : 0.0;
    worst_rel = std::max(worst_rel, rel);
    return rel <= tol_rel;
}

}  // namespace detail

inline GradcheckResult run_gradcheck(int n_configs, double h, std::uint64_t seed,
                                     double tol_rel = 1e-5, double tol_abs = 1e-8) {
    static constexpr int dims[] = {2, 5, 10};
    GradcheckResult res;
    res.total = n_configs;
    RngStream rng(seed, 42);

    for (int cfg = 0; cfg < n_configs; ++cfg) {
        const int d = dims[cfg % 3];
        const int k = static_cast<int>(rng.uniform_int(1, 5));

        ContextBundle bundle;
        bundle.target = LabeledExample{sample_unit(d, rng), rng.gaussian()};
        for (int i = 0; i < k; ++i)
            bundle.context.push_back(LabeledExample{sample_unit(d, rng), rng.gaussian()});

        ThetaParams theta{-3.0 + 6.0 * rng.uniform01(), -3.0 + 6.0 * rng.uniform01(),
                          -3.0 + 6.0 * rng.uniform01()};

        InWeightsNet net = InWeightsNet::zeros(d, 8);
        for (int i = 0; i < net.n_params(); ++i) net.param(i) = rng.gaussian() * 0.5;

        const GradientBundle cf = grads_closed_form(bundle, theta, net);
        const GradientBundle fd = grads_finite_diff(bundle, theta, net, h);

        bool ok = true;
        ok &= detail::grad_component_ok(cf.d_theta1, fd.d_theta1, tol_rel, tol_abs, res.worst_rel);
        ok &= detail::grad_component_ok(cf.d_theta2, fd.d_theta2, tol_rel, tol_abs, res.worst_rel);
        ok &= detail::grad_component_ok(cf.d_theta3, fd.d_theta3, tol_rel, tol_abs, res.worst_rel);
        ok &= detail::grad_component_ok(cf.d_fhat_out, fd.d_fhat_out, tol_rel, tol_abs, res.worst_rel);
        for (int i = 0; i < net.n_params(); ++i)
            ok &= detail::grad_component_ok(cf.d_net[static_cast<std::size_t>(i)],
                                            fd.d_net[static_cast<std::size_t>(i)], tol_rel, tol_abs,
                                            res.worst_rel);
        if (ok) ++res.passed;
    }
    return res;
}

}  // namespace iclab
