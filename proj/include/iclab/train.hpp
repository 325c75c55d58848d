#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "iclab/grad.hpp"
#include "iclab/model.hpp"
#include "iclab/probes.hpp"
#include "iclab/regime.hpp"
#include "iclab/rng.hpp"
#include "iclab/task.hpp"

namespace iclab {

struct TrainConfig {
    RegimeKind regime = RegimeKind::CONTRASTIVE;
    RegimeParams params;
    int steps = 20000;
    int batch = 32;
    double lr_theta = 1e-2;
    double lr_net = 1e-3;
    int checkpoint_every = 500;
    std::uint64_t seed = 0;
    int hidden = 32;
    int n_diag = 128;  // held-out bundles per eval type at each checkpoint
    ProbeConfig probe;
    double divergence_limit = 1e6;

    void validate() const {
        params.validate();
        probe.validate();
        if (steps < 1) throw std::invalid_argument("train.steps must be >= 1");
        if (batch < 1) throw std::invalid_argument("train.batch must be >= 1");
        if (!(lr_theta > 0.0)) throw std::invalid_argument("train.lr_theta must be > 0");
        if (!(lr_net > 0.0)) throw std::invalid_argument("train.lr_net must be > 0");
        if (checkpoint_every < 1) throw std::invalid_argument("train.checkpoint_every must be >= 1");
        if (hidden < 1) throw std::invalid_argument("train.hidden must be >= 1");
        if (n_diag < 1) throw std::invalid_argument("train.n_diag must be >= 1");
    }
};

struct TrajectoryPoint {
    int step = 0;
    double theta1 = 0.0, theta2 = 0.0, theta3 = 0.0;
    double loss = 0.0;  // mean batch loss since the previous checkpoint
    double E = 0.0;     // held-out MSE of fhat
    double a_star_random = 0.0;
    double a_near_onenear = 0.0;
    double a_eoc_similar = 0.0;
    double iwl = 0.0, icl = 0.0, copy = 0.0;
    double grad_fhat_random = 0.0;   // mean |dl/dfhat| on held-out random bundles
    double grad_fhat_onenear = 0.0;  // same on held-out one-near bundles
};

using Trajectory = std::vector<TrajectoryPoint>;

struct TrainResult {
    MinimalModel model;
    Trajectory trajectory;
};

namespace detail {

struct Adam {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<double> m, v;
    long t = 0;

    Adam(double lr_, std::size_t n) : lr(lr_), m(n, 0.0), v(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
    }
};

}  // namespace detail

// Mini-batch training of (theta, net) under the configured context regime.
// Deterministic given cfg.seed. Checkpoints carry the held-out diagnostics
// and probe scores used throughout the analysis suite.
inline TrainResult train_run(const TrainConfig& cfg, const Labeler& label,
                             const std::vector<LabeledExample>& train_pool,
                             const std::vector<LabeledExample>& heldout_pool) {
    cfg.validate();
    if (train_pool.empty() || heldout_pool.empty())
        throw std::invalid_argument("train_run: pools must be non-empty");
    const int d = train_pool.front().x.dim();

    RngStream init_rng(cfg.seed, 0);
    RngStream data_rng(cfg.seed, 1);

    MinimalModel model;
    model.net = InWeightsNet::initial(d, cfg.hidden, init_rng);

    const NeighborIndex train_index = NeighborIndex::build(train_pool, cfg.params.delta2);

    detail::Adam adam_theta(cfg.lr_theta, 3);
    detail::Adam adam_net(cfg.lr_net, static_cast<std::size_t>(model.net.n_params()));

    const auto pool_n = static_cast<std::int64_t>(train_pool.size());
    const int n_params = model.net.n_params();

    Trajectory traj;
    double window_loss = 0.0;
    int window_count = 0;

    RegimeParams diag_params = cfg.params;

    auto checkpoint = [&](int step) {
        RngStream eval_rng(cfg.seed, 1000000ull + static_cast<std::uint64_t>(step));
        TrajectoryPoint pt;
        pt.step = step;
        pt.theta1 = model.theta.theta1;
        pt.theta2 = model.theta.theta2;
        pt.theta3 = model.theta.theta3;
        pt.loss = window_count > 0 ? window_loss / window_count : 0.0;

        pt.E = measure_E([&](const UnitVector& x) { return fhat_eval(model.net, x); }, heldout_pool);

        const auto heldout_n = static_cast<std::int64_t>(heldout_pool.size());
        double star = 0.0, near = 0.0, eoc = 0.0, gfr = 0.0, gfn = 0.0;
        for (int e = 0; e < cfg.n_diag; ++e) {
            const auto& target = heldout_pool[static_cast<std::size_t>(eval_rng.uniform_int(0, heldout_n - 1))];
            {
                ContextBundle b = sample_context(RegimeKind::RANDOM, heldout_pool, target,
                                                 diag_params, label, eval_rng);
                const auto fb = forward_reduced(b, model.theta, fhat_eval(model.net, target.x));
                star += fb.a_star;
                gfr += std::abs(2.0 * fb.a_star * (fb.y_hat - b.target.y));
            }
            {
                ContextBundle b = sample_context(RegimeKind::ONE_NEAR, heldout_pool, target,
                                                 diag_params, label, eval_rng);
                const auto fb = forward_reduced(b, model.theta, fhat_eval(model.net, target.x));
                near += fb.a[static_cast<std::size_t>(*b.near_index)];
                gfn += std::abs(2.0 * fb.a_star * (fb.y_hat - b.target.y));
            }
            {
                ContextBundle b = sample_context(RegimeKind::SIMILAR, heldout_pool, target,
                                                 diag_params, label, eval_rng);
                const auto fb = forward_reduced(b, model.theta, fhat_eval(model.net, target.x));
                eoc += fb.a[static_cast<std::size_t>(b.k())];
            }
        }
        pt.a_star_random = star / cfg.n_diag;
        pt.a_near_onenear = near / cfg.n_diag;
        pt.a_eoc_similar = eoc / cfg.n_diag;
        pt.grad_fhat_random = gfr / cfg.n_diag;
        pt.grad_fhat_onenear = gfn / cfg.n_diag;

        pt.iwl = iwl_score(model, heldout_pool, cfg.probe, eval_rng);
        pt.icl = cfg.probe.k >= 2 ? icl_score(model, heldout_pool, cfg.probe, eval_rng) : 0.0;
        pt.copy = cfg.probe.k >= 3 ? copy_score(model, heldout_pool, cfg.probe, eval_rng) : 0.0;

        traj.push_back(pt);
        window_loss = 0.0;
        window_count = 0;
    };

    std::vector<double> g_net(static_cast<std::size_t>(n_params), 0.0);
    std::vector<double> theta_vec(3, 0.0), g_theta(3, 0.0);

    for (int step = 1; step <= cfg.steps; ++step) {
        std::fill(g_theta.begin(), g_theta.end(), 0.0);
        std::fill(g_net.begin(), g_net.end(), 0.0);
        double batch_loss = 0.0;

        for (int b = 0; b < cfg.batch; ++b) {
            const auto idx = static_cast<int>(data_rng.uniform_int(0, pool_n - 1));
            ContextBundle bundle =
                sample_context(cfg.regime, train_pool, train_pool[static_cast<std::size_t>(idx)],
                               cfg.params, label, data_rng, &train_index, idx);
            const GradientBundle g = grads_closed_form(bundle, model.theta, model.net);
            g_theta[0] += g.d_theta1;
            g_theta[1] += g.d_theta2;
            g_theta[2] += g.d_theta3;
            for (int i = 0; i < n_params; ++i) g_net[static_cast<std::size_t>(i)] += g.d_net[static_cast<std::size_t>(i)];
            batch_loss += loss(bundle, model.theta, model.net);
        }
        const double inv_b = 1.0 / cfg.batch;
        for (auto& g : g_theta) g *= inv_b;
        for (auto& g : g_net) g *= inv_b;
        batch_loss *= inv_b;

        if (!(batch_loss <= cfg.divergence_limit))
            throw DivergenceError("train_run: loss " + std::to_string(batch_loss) + " exceeded " +
                                  std::to_string(cfg.divergence_limit) + " at step " +
                                  std::to_string(step));

        theta_vec[0] = model.theta.theta1;
        theta_vec[1] = model.theta.theta2;
        theta_vec[2] = model.theta.theta3;
        adam_theta.step(theta_vec, g_theta);
        model.theta.theta1 = theta_vec[0];
        model.theta.theta2 = theta_vec[1];
        model.theta.theta3 = theta_vec[2];

        std::vector<double> net_params(static_cast<std::size_t>(n_params));
        for (int i = 0; i < n_params; ++i) net_params[static_cast<std::size_t>(i)] = model.net.param(i);
        adam_net.step(net_params, g_net);
        for (int i = 0; i < n_params; ++i) model.net.param(i) = net_params[static_cast<std::size_t>(i)];

        window_loss += batch_loss;
        ++window_count;

        if (step % cfg.checkpoint_every == 0 || step == cfg.steps) checkpoint(step);
    }

    return TrainResult{std::move(model), std::move(traj)};
}

inline TrainResult train_run(const TrainConfig& cfg, const TargetFunction& task,
                             const std::vector<LabeledExample>& train_pool,
                             const std::vector<LabeledExample>& heldout_pool) {
    return train_run(cfg, labeler_of(task), train_pool, heldout_pool);
}

}  // namespace iclab
