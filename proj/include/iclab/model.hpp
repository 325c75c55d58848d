#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "iclab/geometry.hpp"
#include "iclab/regime.hpp"
#include "iclab/rng.hpp"

namespace iclab {

// The three learnable scalars of the second attention layer.
struct ThetaParams {
    double theta1 = 0.0;  // per-example similarity weight
    double theta2 = 0.0;  // global bias
    double theta3 = 0.0;  // aggregate-context (EOC) weight
};

// Gated position-wise feed-forward net acting as the in-weights estimator.
// One hidden tanh layer; the output layer starts at zero so fhat == 0 before
// any training.
struct InWeightsNet {
    int d = 0;
    int hidden = 0;
    std::vector<double> w1;  // hidden x d, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;

    static InWeightsNet zeros(int d, int hidden) {
        InWeightsNet n;
        n.d = d;
        n.hidden = hidden;
        n.w1.assign(static_cast<std::size_t>(d * hidden), 0.0);
        n.b1.assign(static_cast<std::size_t>(hidden), 0.0);
        n.w2.assign(static_cast<std::size_t>(hidden), 0.0);
        return n;
    }

    // Random first layer, zero output layer.
    static InWeightsNet initial(int d, int hidden, RngStream& rng) {
        InWeightsNet n = zeros(d, hidden);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (auto& v : n.w1) v = scale * rng.gaussian();
        return n;
    }

    int n_params() const { return hidden * d + hidden + hidden + 1; }

    double& param(int i) {
        const int w1n = hidden * d;
        if (i < w1n) return w1[static_cast<std::size_t>(i)];
        i -= w1n;
        if (i < hidden) return b1[static_cast<std::size_t>(i)];
        i -= hidden;
        if (i < hidden) return w2[static_cast<std::size_t>(i)];
        return b2;
    }
    double param(int i) const { return const_cast<InWeightsNet*>(this)->param(i); }

    double eval(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != d)
            throw std::invalid_argument("InWeightsNet::eval: dimension mismatch");
        double out = b2;
        for (int h = 0; h < hidden; ++h) {
            double z = b1[static_cast<std::size_t>(h)];
            const double* row = &w1[static_cast<std::size_t>(h * d)];
            for (int c = 0; c < d; ++c) z += row[c] * x[static_cast<std::size_t>(c)];
            out += w2[static_cast<std::size_t>(h)] * std::tanh(z);
        }
        return out;
    }
};

inline double fhat_eval(const InWeightsNet& net, const UnitVector& x) {
    return net.eval(x.coords);
}

struct MinimalModel {
    ThetaParams theta;
    InWeightsNet net;
};

// Attention decomposition at the query position.
// s[0..k-1] are the context scores, s[k] the EOC score; a mirrors s; the self
// slot has fixed logit 0 so a_star = 1/Z. The a's are computed through a
// max-shifted softmax and always sum to 1; s and Z are the nominal
// exponentials and can overflow for extreme theta without affecting a.
struct AttentionBreakdown {
    std::vector<double> s;
    double Z = 0.0;
    std::vector<double> a;
    double a_star = 0.0;
    double y_bar = 0.0;
    double y_hat = 0.0;
};

inline AttentionBreakdown forward_reduced(const ContextBundle& bundle, const ThetaParams& theta,
                                          double fhat_value) {
    const int k = bundle.k();
    if (k < 1) throw std::invalid_argument("forward_reduced: context must hold at least one example");

    std::vector<double> t(static_cast<std::size_t>(k));
    double t_sum = 0.0, y_sum = 0.0;
    for (int i = 0; i < k; ++i) {
        t[static_cast<std::size_t>(i)] = bundle.context[static_cast<std::size_t>(i)].x.dot_with(bundle.target.x);
        t_sum += t[static_cast<std::size_t>(i)];
        y_sum += bundle.context[static_cast<std::size_t>(i)].y;
    }

    AttentionBreakdown out;
    out.y_bar = y_sum / static_cast<double>(k);

    std::vector<double> logit(static_cast<std::size_t>(k + 1));
    double max_logit = 0.0;  // the self logit participates in the shift
    for (int i = 0; i < k; ++i) {
        logit[static_cast<std::size_t>(i)] = theta.theta1 * t[static_cast<std::size_t>(i)] + theta.theta2;
        max_logit = std::max(max_logit, logit[static_cast<std::size_t>(i)]);
    }
    logit[static_cast<std::size_t>(k)] = theta.theta3 * t_sum + theta.theta2;
    max_logit = std::max(max_logit, logit[static_cast<std::size_t>(k)]);

    out.s.resize(static_cast<std::size_t>(k + 1));
    out.a.resize(static_cast<std::size_t>(k + 1));
    const double e_self = std::exp(-max_logit);
    double z_shift = e_self;
    for (int i = 0; i <= k; ++i) {
        const double e = std::exp(logit[static_cast<std::size_t>(i)] - max_logit);
        out.a[static_cast<std::size_t>(i)] = e;  // shifted for now
        z_shift += e;
        out.s[static_cast<std::size_t>(i)] = std::exp(logit[static_cast<std::size_t>(i)]);
    }
    for (auto& ai : out.a) ai /= z_shift;
    out.a_star = e_self / z_shift;

    out.Z = 1.0;
    for (double si : out.s) out.Z += si;

    double y_hat = out.a_star * fhat_value;
    for (int i = 0; i < k; ++i) y_hat += out.a[static_cast<std::size_t>(i)] * bundle.context[static_cast<std::size_t>(i)].y;
    y_hat += out.a[static_cast<std::size_t>(k)] * out.y_bar;
    out.y_hat = y_hat;
    return out;
}

namespace detail {

// d_model = 3d+3 embedding layout: [x (d) | ctx flag | sum_x (d) | x* (d) |
// query flag | value]. The query/gate flag at index 3d+1 drives the FFN.
inline std::vector<std::vector<double>> token_embeddings(const ContextBundle& bundle) {
    const int d = bundle.target.x.dim();
    const int k = bundle.k();
    const int dm = 3 * d + 3;
    std::vector<std::vector<double>> h(static_cast<std::size_t>(k + 2),
                                       std::vector<double>(static_cast<std::size_t>(dm), 0.0));
    double y_sum = 0.0;
    for (int i = 0; i < k; ++i) {
        auto& e = h[static_cast<std::size_t>(i)];
        const auto& ex = bundle.context[static_cast<std::size_t>(i)];
        for (int c = 0; c < d; ++c) e[static_cast<std::size_t>(c)] = ex.x.coords[static_cast<std::size_t>(c)];
        e[static_cast<std::size_t>(d)] = 1.0;
        e[static_cast<std::size_t>(dm - 1)] = ex.y;
        y_sum += ex.y;
    }
    {  // EOC token: first-layer aggregate of the context
        auto& e = h[static_cast<std::size_t>(k)];
        e[static_cast<std::size_t>(d)] = 1.0;
        for (int i = 0; i < k; ++i)
            for (int c = 0; c < d; ++c)
                e[static_cast<std::size_t>(d + 1 + c)] += bundle.context[static_cast<std::size_t>(i)].x.coords[static_cast<std::size_t>(c)];
        e[static_cast<std::size_t>(dm - 1)] = y_sum / static_cast<double>(k);
    }
    {  // query token
        auto& e = h[static_cast<std::size_t>(k + 1)];
        for (int c = 0; c < d; ++c) e[static_cast<std::size_t>(2 * d + 1 + c)] = bundle.target.x.coords[static_cast<std::size_t>(c)];
        e[static_cast<std::size_t>(3 * d + 1)] = 1.0;
    }
    return h;
}

inline std::vector<std::vector<double>> query_matrix(int d) {
    // W_Q = [ 0_{(d+1) x (2d+1)} | I_{d+1} | 0 ]
    const int dm = 3 * d + 3;
    std::vector<std::vector<double>> wq(static_cast<std::size_t>(d + 1),
                                        std::vector<double>(static_cast<std::size_t>(dm), 0.0));
    for (int r = 0; r < d + 1; ++r) wq[static_cast<std::size_t>(r)][static_cast<std::size_t>(2 * d + 1 + r)] = 1.0;
    return wq;
}

inline std::vector<std::vector<double>> key_matrix(int d, const ThetaParams& theta) {
    // W_K = [ theta1 I_d  0  theta3 I_d  0 ; 0  theta2  0  0 ]
    const int dm = 3 * d + 3;
    std::vector<std::vector<double>> wk(static_cast<std::size_t>(d + 1),
                                        std::vector<double>(static_cast<std::size_t>(dm), 0.0));
    for (int r = 0; r < d; ++r) {
        wk[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] = theta.theta1;
        wk[static_cast<std::size_t>(r)][static_cast<std::size_t>(d + 1 + r)] = theta.theta3;
    }
    wk[static_cast<std::size_t>(d)][static_cast<std::size_t>(d)] = theta.theta2;
    return wk;
}

inline std::vector<double> value_matrix(int d) {
    // W_V selects the last embedding dimension
    std::vector<double> wv(static_cast<std::size_t>(3 * d + 3), 0.0);
    wv.back() = 1.0;
    return wv;
}

inline std::vector<double> matvec(const std::vector<std::vector<double>>& m,
                                  std::span<const double> v) {
    std::vector<double> out(m.size(), 0.0);
    for (std::size_t r = 0; r < m.size(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < v.size(); ++c) acc += m[r][c] * v[c];
        out[r] = acc;
    }
    return out;
}

}  // namespace detail

// Explicit transformer construction: embeddings, gated FFN residual,
// materialized W_Q/W_K/W_V, unscaled logits with query self-logit 0. Agrees
// with forward_reduced to 1e-9; the two paths share no attention arithmetic.
inline double forward_full(const ContextBundle& bundle, const ThetaParams& theta,
                           const InWeightsNet& net) {
    const int k = bundle.k();
    if (k < 1) throw std::invalid_argument("forward_full: context must hold at least one example");
    const int d = bundle.target.x.dim();
    if (net.d != d) throw std::invalid_argument("forward_full: net dimension mismatch");

    auto h = detail::token_embeddings(bundle);

    // Position-wise FFN, gated on the (3d+2)-th dimension, residual into the
    // value slot. The gate is 0 at context/EOC positions, so their
    // contribution is exactly zero.
    for (auto& emb : h) {
        const double gate = emb[static_cast<std::size_t>(3 * d + 1)];
        const double f = gate * net.eval(std::span<const double>(emb).subspan(static_cast<std::size_t>(2 * d + 1), static_cast<std::size_t>(d)));
        emb[static_cast<std::size_t>(3 * d + 2)] += f;
    }

    const auto wq = detail::query_matrix(d);
    const auto wk = detail::key_matrix(d, theta);
    const auto wv = detail::value_matrix(d);

    const auto q = detail::matvec(wq, h[static_cast<std::size_t>(k + 1)]);

    std::vector<double> logits(static_cast<std::size_t>(k + 2), 0.0);
    std::vector<double> values(static_cast<std::size_t>(k + 2), 0.0);
    for (int i = 0; i < k + 2; ++i) {
        const auto key = detail::matvec(wk, h[static_cast<std::size_t>(i)]);
        logits[static_cast<std::size_t>(i)] = dot(q, key);
        values[static_cast<std::size_t>(i)] = dot(wv, h[static_cast<std::size_t>(i)]);
    }

    double max_logit = logits[0];
    for (double l : logits) max_logit = std::max(max_logit, l);
    double z = 0.0;
    std::vector<double> w(static_cast<std::size_t>(k + 2), 0.0);
    for (int i = 0; i < k + 2; ++i) {
        w[static_cast<std::size_t>(i)] = std::exp(logits[static_cast<std::size_t>(i)] - max_logit);
        z += w[static_cast<std::size_t>(i)];
    }
    double out = 0.0;
    for (int i = 0; i < k + 2; ++i) out += w[static_cast<std::size_t>(i)] / z * values[static_cast<std::size_t>(i)];
    return out;
}

}  // namespace iclab
