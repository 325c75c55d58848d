#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "iclab/model.hpp"
#include "iclab/regime.hpp"

namespace iclab {

// Instantaneous squared loss (y* - y_hat)^2.
inline double loss(const ContextBundle& bundle, const ThetaParams& theta, const InWeightsNet& net) {
    const double y_hat = forward_reduced(bundle, theta, fhat_eval(net, bundle.target.x)).y_hat;
    const double r = bundle.target.y - y_hat;
    return r * r;
}

struct GradientBundle {
    double d_theta1 = 0.0;
    double d_theta2 = 0.0;
    double d_theta3 = 0.0;
    std::vector<double> d_net;  // flat, layout = [w1 | b1 | w2 | b2]
    double d_fhat_out = 0.0;    // 2 a* (y_hat - y*)
};

// Analytic gradients. The score derivatives enter through the attention
// weights a_j = s_j / Z, which keeps everything finite under the max-shift.
inline GradientBundle grads_closed_form(const ContextBundle& bundle, const ThetaParams& theta,
                                        const InWeightsNet& net) {
    const int k = bundle.k();
    const int d = bundle.target.x.dim();
    const auto& xs = bundle.target.x;

    const double fhat = fhat_eval(net, xs);
    const AttentionBreakdown fb = forward_reduced(bundle, theta, fhat);
    const double f_star = bundle.target.y;
    const double y_hat = fb.y_hat;

    std::vector<double> t(static_cast<std::size_t>(k));
    double t_sum = 0.0;
    for (int i = 0; i < k; ++i) {
        t[static_cast<std::size_t>(i)] = bundle.context[static_cast<std::size_t>(i)].x.dot_with(xs);
        t_sum += t[static_cast<std::size_t>(i)];
    }

    GradientBundle g;
    // dl/ds_j = 2 (f - y_hat)(y_hat - y_j) / Z, and ds_j/dtheta carries s_j,
    // so every theta term reduces to 2 (f - y_hat)(y_hat - y_j) a_j * (...).
    for (int j = 0; j < k; ++j) {
        const double common = 2.0 * (f_star - y_hat) * (y_hat - bundle.context[static_cast<std::size_t>(j)].y) *
                              fb.a[static_cast<std::size_t>(j)];
        g.d_theta1 += common * t[static_cast<std::size_t>(j)];
        g.d_theta2 += common;
    }
    const double common_eoc = 2.0 * (f_star - y_hat) * (y_hat - fb.y_bar) * fb.a[static_cast<std::size_t>(k)];
    g.d_theta2 += common_eoc;
    g.d_theta3 = common_eoc * t_sum;

    g.d_fhat_out = 2.0 * fb.a_star * (y_hat - f_star);

    // Backprop through the one-hidden-layer net at x*.
    g.d_net.assign(static_cast<std::size_t>(net.n_params()), 0.0);
    const int w1n = net.hidden * d;
    for (int h = 0; h < net.hidden; ++h) {
        double z = net.b1[static_cast<std::size_t>(h)];
        const double* row = &net.w1[static_cast<std::size_t>(h * d)];
        for (int c = 0; c < d; ++c) z += row[c] * xs.coords[static_cast<std::size_t>(c)];
        const double th = std::tanh(z);
        g.d_net[static_cast<std::size_t>(w1n + net.hidden + h)] = g.d_fhat_out * th;  // w2
        const double dh = g.d_fhat_out * net.w2[static_cast<std::size_t>(h)] * (1.0 - th * th);
        g.d_net[static_cast<std::size_t>(w1n + h)] = dh;  // b1
        for (int c = 0; c < d; ++c)
            g.d_net[static_cast<std::size_t>(h * d + c)] = dh * xs.coords[static_cast<std::size_t>(c)];  // w1
    }
    g.d_net.back() = g.d_fhat_out;  // b2
    return g;
}

// Central-difference oracle over every scalar parameter. Test/diagnostic use
// only; never on the training path.
inline GradientBundle grads_finite_diff(const ContextBundle& bundle, const ThetaParams& theta,
                                        const InWeightsNet& net, double h) {
    if (!(h >= 1e-7 && h <= 1e-3))
        throw std::invalid_argument("grads_finite_diff: h must lie in [1e-7, 1e-3]");

    auto loss_at = [&](const ThetaParams& th, const InWeightsNet& n) {
        const double y_hat = forward_reduced(bundle, th, fhat_eval(n, bundle.target.x)).y_hat;
        const double r = bundle.target.y - y_hat;
        return r * r;
    };

    GradientBundle g;
    {
        ThetaParams tp = theta, tm = theta;
        tp.theta1 += h; tm.theta1 -= h;
        g.d_theta1 = (loss_at(tp, net) - loss_at(tm, net)) / (2.0 * h);
    }
    {
        ThetaParams tp = theta, tm = theta;
        tp.theta2 += h; tm.theta2 -= h;
        g.d_theta2 = (loss_at(tp, net) - loss_at(tm, net)) / (2.0 * h);
    }
    {
        ThetaParams tp = theta, tm = theta;
        tp.theta3 += h; tm.theta3 -= h;
        g.d_theta3 = (loss_at(tp, net) - loss_at(tm, net)) / (2.0 * h);
    }

    const double fhat = fhat_eval(net, bundle.target.x);
    auto loss_at_fhat = [&](double fv) {
        const double y_hat = forward_reduced(bundle, theta, fv).y_hat;
        const double r = bundle.target.y - y_hat;
        return r * r;
    };
    g.d_fhat_out = (loss_at_fhat(fhat + h) - loss_at_fhat(fhat - h)) / (2.0 * h);

    g.d_net.assign(static_cast<std::size_t>(net.n_params()), 0.0);
    InWeightsNet scratch = net;
    for (int i = 0; i < net.n_params(); ++i) {
        const double orig = scratch.param(i);
        scratch.param(i) = orig + h;
        const double lp = loss_at(theta, scratch);
        scratch.param(i) = orig - h;
        const double lm = loss_at(theta, scratch);
        scratch.param(i) = orig;
        g.d_net[static_cast<std::size_t>(i)] = (lp - lm) / (2.0 * h);
    }
    return g;
}

}  // namespace iclab
