#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "iclab/model.hpp"
#include "iclab/regime.hpp"
#include "iclab/rng.hpp"

namespace iclab {

struct ProbeConfig {
    double tau = 1.0;     // output kernel width
    int k = 4;            // context size used by the probes
    int n_eval = 512;     // targets per probe
    double delta1 = 0.3;  // caps for diagnostic bundle construction
    double delta2 = 0.02;

    void validate() const {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("probe.tau must be finite and > 0");
        if (k < 1) throw std::invalid_argument("probe.k must be >= 1");
        if (n_eval < 1) throw std::invalid_argument("probe.n_eval must be >= 1");
        if (!(delta1 > 0.0 && delta1 < 1.0)) throw std::invalid_argument("probe.delta1 must lie in (0,1)");
        if (!(delta2 > 0.0 && delta2 < 1.0)) throw std::invalid_argument("probe.delta2 must lie in (0,1)");
    }
};

// K(x,x') in [0,1] on the unit sphere.
inline double input_kernel(const UnitVector& a, const UnitVector& b) {
    return (1.0 + a.dot_with(b)) / 2.0;
}

// sim(y,y') in (0,1], sim(y,y) = 1.
inline double output_sim(double y, double yp, double tau) {
    const double d = y - yp;
    return std::exp(-(d * d) / tau);
}

namespace detail {

inline const LabeledExample& random_pool_draw(const std::vector<LabeledExample>& pool, RngStream& rng) {
    return pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
}

// One-similar context: a paraphrase of the target carrying the gold label
// y*, placed among k-1 plain pool draws. Returns the paraphrase position.
inline int build_one_similar(ContextBundle& bundle, const std::vector<LabeledExample>& pool,
                             const LabeledExample& target, const ProbeConfig& cfg, RngStream& rng) {
    bundle.context.clear();
    bundle.target = target;
    const int i_star = static_cast<int>(rng.uniform_int(0, cfg.k - 1));
    for (int i = 0; i < cfg.k; ++i) {
        if (i == i_star) {
            UnitVector para = perturb_within_cap(target.x, cfg.delta2, rng);
            bundle.context.push_back(LabeledExample{std::move(para), target.y});
        } else {
            bundle.context.push_back(random_pool_draw(pool, rng));
        }
    }
    return i_star;
}

}  // namespace detail

// Similarity between predictions under a random context and the zero-shot
// (pure in-weights) prediction.
inline double iwl_score(const MinimalModel& model, const std::vector<LabeledExample>& pool,
                        const ProbeConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (pool.empty()) throw std::invalid_argument("iwl_score: empty pool");
    double acc = 0.0;
    for (int e = 0; e < cfg.n_eval; ++e) {
        const LabeledExample& target = detail::random_pool_draw(pool, rng);
        ContextBundle bundle;
        bundle.target = target;
        for (int i = 0; i < cfg.k; ++i) bundle.context.push_back(detail::random_pool_draw(pool, rng));
        const double y_phi = fhat_eval(model.net, target.x);
        const double y_c = forward_reduced(bundle, model.theta, y_phi).y_hat;
        acc += output_sim(y_c, y_phi, cfg.tau);
    }
    return acc / static_cast<double>(cfg.n_eval);
}

// Similarity of the prediction under a one-similar context to the context
// labels, weighted by input similarity. The paraphrase slot participates in
// both the numerator and the denominator.
inline double icl_score(const MinimalModel& model, const std::vector<LabeledExample>& pool,
                        const ProbeConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (cfg.k < 2) throw std::invalid_argument("icl_score: requires k >= 2");
    if (pool.empty()) throw std::invalid_argument("icl_score: empty pool");
    double acc = 0.0;
    for (int e = 0; e < cfg.n_eval; ++e) {
        const LabeledExample& target = detail::random_pool_draw(pool, rng);
        ContextBundle bundle;
        detail::build_one_similar(bundle, pool, target, cfg, rng);
        const double y_c =
            forward_reduced(bundle, model.theta, fhat_eval(model.net, target.x)).y_hat;
        double num = 0.0, den = 0.0;
        for (const auto& ex : bundle.context) {
            const double kk = input_kernel(target.x, ex.x);
            num += kk * output_sim(y_c, ex.y, cfg.tau);
            den += kk;
        }
        acc += num / den;
    }
    return acc / static_cast<double>(cfg.n_eval);
}

// Blind-copy probe: labels of the one-similar context are cyclically shifted
// by one so no x_i keeps its own y_i; the score is the best similarity to a
// label other than the one now attached to the paraphrase slot.
inline double copy_score(const MinimalModel& model, const std::vector<LabeledExample>& pool,
                         const ProbeConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (cfg.k < 3) throw std::invalid_argument("copy_score: requires k >= 3");
    if (pool.empty()) throw std::invalid_argument("copy_score: empty pool");
    double acc = 0.0;
    for (int e = 0; e < cfg.n_eval; ++e) {
        const LabeledExample& target = detail::random_pool_draw(pool, rng);
        ContextBundle bundle;
        const int i_star = detail::build_one_similar(bundle, pool, target, cfg, rng);
        std::vector<double> shuffled(static_cast<std::size_t>(cfg.k));
        for (int i = 0; i < cfg.k; ++i)
            shuffled[static_cast<std::size_t>(i)] = bundle.context[static_cast<std::size_t>((i + 1) % cfg.k)].y;
        for (int i = 0; i < cfg.k; ++i) bundle.context[static_cast<std::size_t>(i)].y = shuffled[static_cast<std::size_t>(i)];
        const double y_c =
            forward_reduced(bundle, model.theta, fhat_eval(model.net, target.x)).y_hat;
        double best = 0.0;
        for (int i = 0; i < cfg.k; ++i) {
            if (i == i_star) continue;  // label attached to the paraphrase is excluded
            best = std::max(best, output_sim(y_c, bundle.context[static_cast<std::size_t>(i)].y, cfg.tau));
        }
        acc += best;
    }
    return acc / static_cast<double>(cfg.n_eval);
}

enum class StationaryLabel { IWL, COPY_EOC, ICL_INDIVIDUAL, MIXTURE_ADAPTIVE, UNCLASSIFIED };

inline const char* to_string(StationaryLabel l) {
    switch (l) {
        case StationaryLabel::IWL: return "IWL";
        case StationaryLabel::COPY_EOC: return "COPY_EOC";
        case StationaryLabel::ICL_INDIVIDUAL: return "ICL_INDIVIDUAL";
        case StationaryLabel::MIXTURE_ADAPTIVE: return "MIXTURE_ADAPTIVE";
        case StationaryLabel::UNCLASSIFIED: return "UNCLASSIFIED";
    }
    return "?";
}

struct StationaryReport {
    StationaryLabel label = StationaryLabel::UNCLASSIFIED;
    double a_star_random = 0.0;
    double a_star_similar = 0.0;
    double a_star_onenear = 0.0;
    double a_eoc_similar = 0.0;
    double a_near_onenear = 0.0;
};

// Attention-mass measurements on diagnostic bundles of each eval type, then
// the case classification. MIXTURE_ADAPTIVE is tested before ICL_INDIVIDUAL
// since its condition set is strictly stronger.
inline StationaryReport classify_stationary(const MinimalModel& model,
                                            const std::vector<LabeledExample>& pool,
                                            const Labeler& label, const ProbeConfig& cfg,
                                            RngStream& rng) {
    cfg.validate();
    RegimeParams rp;
    rp.delta1 = cfg.delta1;
    rp.delta2 = cfg.delta2;
    rp.k_min = cfg.k;
    rp.k_max = cfg.k;

    StationaryReport rep;
    for (int e = 0; e < cfg.n_eval; ++e) {
        const LabeledExample& target = detail::random_pool_draw(pool, rng);
        {
            ContextBundle b = sample_context(RegimeKind::RANDOM, pool, target, rp, label, rng);
            rep.a_star_random += forward_reduced(b, model.theta, fhat_eval(model.net, target.x)).a_star;
        }
        {
            ContextBundle b = sample_context(RegimeKind::SIMILAR, pool, target, rp, label, rng);
            const auto fb = forward_reduced(b, model.theta, fhat_eval(model.net, target.x));
            rep.a_star_similar += fb.a_star;
            rep.a_eoc_similar += fb.a[static_cast<std::size_t>(b.k())];
        }
        {
            ContextBundle b = sample_context(RegimeKind::ONE_NEAR, pool, target, rp, label, rng);
            const auto fb = forward_reduced(b, model.theta, fhat_eval(model.net, target.x));
            rep.a_star_onenear += fb.a_star;
            rep.a_near_onenear += fb.a[static_cast<std::size_t>(*b.near_index)];
        }
    }
    const double n = static_cast<double>(cfg.n_eval);
    rep.a_star_random /= n;
    rep.a_star_similar /= n;
    rep.a_star_onenear /= n;
    rep.a_eoc_similar /= n;
    rep.a_near_onenear /= n;

    if (rep.a_star_random >= 0.9 && rep.a_star_similar >= 0.9 && rep.a_star_onenear >= 0.9)
        rep.label = StationaryLabel::IWL;
    else if (rep.a_eoc_similar >= 0.9 && rep.a_star_random < 0.5)
        rep.label = StationaryLabel::COPY_EOC;
    else if (rep.a_star_random >= 0.9 && rep.a_near_onenear >= 0.8)
        rep.label = StationaryLabel::MIXTURE_ADAPTIVE;
    else if (rep.a_near_onenear >= 0.8)
        rep.label = StationaryLabel::ICL_INDIVIDUAL;
    else
        rep.label = StationaryLabel::UNCLASSIFIED;
    return rep;
}

inline constexpr std::array<RegimeKind, 5> kAllRegimes = {
    RegimeKind::RANDOM, RegimeKind::SIMILAR, RegimeKind::ONE_NEAR, RegimeKind::RAND_SIM_MIX,
    RegimeKind::CONTRASTIVE};

inline constexpr std::array<RegimeKind, 3> kEvalColumns = {RegimeKind::RANDOM, RegimeKind::SIMILAR,
                                                           RegimeKind::ONE_NEAR};

// 5 training regimes x 3 eval context types. Cells hold mean eval loss plus
// mean attention masses; a_near is NaN in columns without a designated near
// slot.
struct CrossRegimeMatrix {
    std::array<std::array<double, 3>, 5> mean_loss{};
    std::array<std::array<double, 3>, 5> a_star{};
    std::array<std::array<double, 3>, 5> a_eoc{};
    std::array<std::array<double, 3>, 5> a_near{};
};

inline CrossRegimeMatrix cross_regime_eval(const std::array<MinimalModel, 5>& models,
                                           const std::vector<LabeledExample>& pool,
                                           const Labeler& label, const ProbeConfig& cfg,
                                           RngStream& rng) {
    cfg.validate();
    RegimeParams rp;
    rp.delta1 = cfg.delta1;
    rp.delta2 = cfg.delta2;
    rp.k_min = cfg.k;
    rp.k_max = cfg.k;

    CrossRegimeMatrix m;
    for (std::size_t col = 0; col < kEvalColumns.size(); ++col) {
        // The same eval bundles are applied to every row.
        std::vector<ContextBundle> bundles;
        bundles.reserve(static_cast<std::size_t>(cfg.n_eval));
        for (int e = 0; e < cfg.n_eval; ++e) {
            const LabeledExample& target = detail::random_pool_draw(pool, rng);
            bundles.push_back(sample_context(kEvalColumns[col], pool, target, rp, label, rng));
        }
        for (std::size_t row = 0; row < models.size(); ++row) {
            double lsum = 0.0, star = 0.0, eoc = 0.0, near = 0.0;
            int near_n = 0;
            for (const auto& b : bundles) {
                const auto fb =
                    forward_reduced(b, models[row].theta, fhat_eval(models[row].net, b.target.x));
                const double r = b.target.y - fb.y_hat;
                lsum += r * r;
                star += fb.a_star;
                eoc += fb.a[static_cast<std::size_t>(b.k())];
                if (b.near_index) {
                    near += fb.a[static_cast<std::size_t>(*b.near_index)];
                    ++near_n;
                }
            }
            const double n = static_cast<double>(bundles.size());
            m.mean_loss[row][col] = lsum / n;
            m.a_star[row][col] = star / n;
            m.a_eoc[row][col] = eoc / n;
            m.a_near[row][col] =
                near_n > 0 ? near / near_n : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return m;
}

}  // namespace iclab
