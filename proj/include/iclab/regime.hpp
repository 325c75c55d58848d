#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "iclab/geometry.hpp"
#include "iclab/rng.hpp"
#include "iclab/task.hpp"

namespace iclab {

enum class RegimeKind { RANDOM, SIMILAR, ONE_NEAR, RAND_SIM_MIX, CONTRASTIVE };

inline const char* to_string(RegimeKind k) {
    switch (k) {
        case RegimeKind::RANDOM: return "RANDOM";
        case RegimeKind::SIMILAR: return "SIMILAR";
        case RegimeKind::ONE_NEAR: return "ONE_NEAR";
        case RegimeKind::RAND_SIM_MIX: return "RAND_SIM_MIX";
        case RegimeKind::CONTRASTIVE: return "CONTRASTIVE";
    }
    return "?";
}

inline RegimeKind regime_from_string(const std::string& s) {
    if (s == "RANDOM") return RegimeKind::RANDOM;
    if (s == "SIMILAR") return RegimeKind::SIMILAR;
    if (s == "ONE_NEAR") return RegimeKind::ONE_NEAR;
    if (s == "RAND_SIM_MIX") return RegimeKind::RAND_SIM_MIX;
    if (s == "CONTRASTIVE") return RegimeKind::CONTRASTIVE;
    throw std::invalid_argument("unknown regime: " + s);
}

struct RegimeParams {
    double delta1 = 0.3;   // random cap: x_i . x* <= delta1
    double delta2 = 0.02;  // near cap:   x_i . x* >= 1 - delta2
    double p = 0.5;
    double epsilon = 0.1;
    int k_min = 1;
    int k_max = 5;

    void validate() const {
        if (!(delta1 > 0.0 && delta1 < 1.0)) throw std::invalid_argument("regime.delta1 must lie in (0,1)");
        if (!(delta2 > 0.0 && delta2 < 1.0)) throw std::invalid_argument("regime.delta2 must lie in (0,1)");
        if (!(delta1 + delta2 < 1.0)) throw std::invalid_argument("regime.delta1 + regime.delta2 must be < 1");
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("regime.p must lie in [0,1]");
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("regime.epsilon must lie in [0,1]");
        if (!(epsilon + p <= 1.0)) throw std::invalid_argument("regime.epsilon + regime.p must be <= 1");
        if (!(1 <= k_min && k_min <= k_max)) throw std::invalid_argument("regime.k_min/k_max must satisfy 1 <= k_min <= k_max");
    }
};

// One training/eval instance: k context examples plus a target.
// `regime` is the geometric regime the context actually satisfies;
// `base` is the mixture component that was drawn (they differ only when an
// epsilon-injection turns a RANDOM draw into a one-near context).
struct ContextBundle {
    std::vector<LabeledExample> context;
    LabeledExample target;
    RegimeKind regime = RegimeKind::RANDOM;
    RegimeKind base = RegimeKind::RANDOM;
    std::optional<int> near_index;
    bool synthetic_near = false;

    int k() const { return static_cast<int>(context.size()); }
};

struct RegimeVerdict {
    std::vector<double> inner;  // x_i . x* per slot
    bool random_ok = false;
    bool similar_ok = false;
    bool one_near_ok = false;
    int near_count = 0;

    bool confirms(RegimeKind kind) const {
        switch (kind) {
            case RegimeKind::RANDOM: return random_ok;
            case RegimeKind::SIMILAR: return similar_ok;
            case RegimeKind::ONE_NEAR: return one_near_ok;
            case RegimeKind::RAND_SIM_MIX: return random_ok || similar_ok;
            case RegimeKind::CONTRASTIVE: return random_ok || similar_ok || one_near_ok;
        }
        return false;
    }
};

// Geometric check of the regime conditions. Malformed bundles produce failed
// verdicts rather than exceptions.
inline RegimeVerdict check_regime(const ContextBundle& bundle, const RegimeParams& params) {
    RegimeVerdict v;
    if (bundle.context.empty()) return v;
    for (const auto& ex : bundle.context)
        if (ex.x.dim() != bundle.target.x.dim()) return v;
    v.inner.reserve(bundle.context.size());
    for (const auto& ex : bundle.context) v.inner.push_back(ex.x.dot_with(bundle.target.x));

    bool all_random = true, all_similar = true;
    int near = 0, random_rest = 0;
    for (double t : v.inner) {
        if (!(t <= params.delta1)) all_random = false;
        if (!(t >= 1.0 - params.delta2)) all_similar = false;
        if (t >= 1.0 - params.delta2) ++near;
        else if (t <= params.delta1) ++random_rest;
    }
    v.near_count = near;
    v.random_ok = all_random;
    v.similar_ok = all_similar;
    v.one_near_ok = near == 1 && random_rest == static_cast<int>(v.inner.size()) - 1;
    return v;
}

namespace detail {

inline constexpr int kPoolAttempts = 512;

inline bool same_point(const UnitVector& a, const UnitVector& b) {
    return a.coords == b.coords;
}

inline LabeledExample draw_random_slot(const std::vector<LabeledExample>& pool,
                                       const LabeledExample& target, const RegimeParams& params,
                                       const Labeler& label, RngStream& rng) {
    const auto n = static_cast<std::int64_t>(pool.size());
    for (int attempt = 0; attempt < kPoolAttempts && n > 0; ++attempt) {
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
        if (pool[idx].x.dot_with(target.x) <= params.delta1) return pool[idx];
    }
    // Pool has no usable member within the attempt budget; the random cap is
    // a geometric condition, so fall back to fresh sphere draws.
    for (int attempt = 0; attempt < kRejectionBudget; ++attempt) {
        UnitVector x = sample_unit(target.x.dim(), rng);
        if (x.dot_with(target.x) <= params.delta1) {
            const double y = label(x);
            return LabeledExample{std::move(x), y};
        }
    }
    throw SamplingError("draw_random_slot: rejection budget exceeded");
}

inline std::vector<int> near_candidates(const std::vector<LabeledExample>& pool,
                                        const LabeledExample& target, double delta2) {
    std::vector<int> out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (same_point(pool[i].x, target.x)) continue;
        if (pool[i].x.dot_with(target.x) >= 1.0 - delta2) out.push_back(static_cast<int>(i));
    }
    return out;
}

inline LabeledExample synth_near(const LabeledExample& target, const RegimeParams& params,
                                 const Labeler& label, RngStream& rng) {
    UnitVector x = perturb_within_cap(target.x, params.delta2, rng);
    const double y = label(x);
    return LabeledExample{std::move(x), y};
}

}  // namespace detail

// Neighbor lists per pool element under the near cap, built once so that
// training loops do not rescan the pool for every bundle. Entry i lists the
// pool indices j != i with x_j . x_i >= 1 - delta2.
struct NeighborIndex {
    std::vector<std::vector<int>> lists;

    static NeighborIndex build(const std::vector<LabeledExample>& pool, double delta2) {
        NeighborIndex idx;
        idx.lists.resize(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            for (std::size_t j = i + 1; j < pool.size(); ++j) {
                if (pool[i].x.dot_with(pool[j].x) >= 1.0 - delta2) {
                    idx.lists[i].push_back(static_cast<int>(j));
                    idx.lists[j].push_back(static_cast<int>(i));
                }
            }
        }
        return idx;
    }
};

// Builds a ContextBundle under the requested regime. `label` supplies y for
// any synthesized example. `target_pool_index` >= 0 together with `index`
// short-circuits the neighbor scan for pool-resident targets.
inline ContextBundle sample_context(RegimeKind kind, const std::vector<LabeledExample>& pool,
                                    const LabeledExample& target, const RegimeParams& params,
                                    const Labeler& label, RngStream& rng,
                                    const NeighborIndex* index = nullptr,
                                    int target_pool_index = -1) {
    params.validate();
    if (pool.empty()) throw std::invalid_argument("sample_context: empty pool");

    const int k = static_cast<int>(rng.uniform_int(params.k_min, params.k_max));

    auto candidates_for_target = [&]() -> std::vector<int> {
        if (index != nullptr && target_pool_index >= 0 &&
            target_pool_index < static_cast<int>(index->lists.size()))
            return index->lists[static_cast<std::size_t>(target_pool_index)];
        return detail::near_candidates(pool, target, params.delta2);
    };

    auto near_example = [&](std::vector<int>& cands) -> LabeledExample {
        if (!cands.empty()) {
            const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cands.size()) - 1));
            const int pool_idx = cands[pick];
            cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(pick));
            return pool[static_cast<std::size_t>(pool_idx)];
        }
        return detail::synth_near(target, params, label, rng);
    };

    ContextBundle bundle;
    bundle.target = target;

    auto build_random = [&]() {
        bundle.context.clear();
        for (int i = 0; i < k; ++i)
            bundle.context.push_back(detail::draw_random_slot(pool, target, params, label, rng));
        bundle.regime = RegimeKind::RANDOM;
        bundle.near_index.reset();
    };
    auto build_similar = [&]() {
        bundle.context.clear();
        auto cands = candidates_for_target();
        for (int i = 0; i < k; ++i) bundle.context.push_back(near_example(cands));
        bundle.regime = RegimeKind::SIMILAR;
        bundle.near_index.reset();
    };
    auto build_one_near = [&]() {
        bundle.context.clear();
        const int j_star = static_cast<int>(rng.uniform_int(0, k - 1));
        auto cands = candidates_for_target();
        for (int i = 0; i < k; ++i) {
            if (i == j_star)
                bundle.context.push_back(near_example(cands));
            else
                bundle.context.push_back(detail::draw_random_slot(pool, target, params, label, rng));
        }
        bundle.regime = RegimeKind::ONE_NEAR;
        bundle.near_index = j_star;
    };

    switch (kind) {
        case RegimeKind::RANDOM:
            build_random();
            bundle.base = RegimeKind::RANDOM;
            break;
        case RegimeKind::SIMILAR:
            build_similar();
            bundle.base = RegimeKind::SIMILAR;
            break;
        case RegimeKind::ONE_NEAR:
            build_one_near();
            bundle.base = RegimeKind::ONE_NEAR;
            break;
        case RegimeKind::RAND_SIM_MIX: {
            if (rng.bernoulli(0.5))
                build_random();
            else
                build_similar();
            bundle.base = bundle.regime;
            break;
        }
        case RegimeKind::CONTRASTIVE: {
            const double u = rng.uniform01();
            if (u < 1.0 - params.p)
                build_random();
            else if (u < 1.0 - params.p / 2.0)
                build_similar();
            else
                build_one_near();
            bundle.base = bundle.regime;
            if (rng.bernoulli(params.epsilon)) {
                // Injection keeps the bundle inside one regime condition: a
                // one-near base re-synthesizes its designated slot, the
                // others replace a uniformly chosen one.
                const int slot = bundle.base == RegimeKind::ONE_NEAR
                                     ? *bundle.near_index
                                     : static_cast<int>(rng.uniform_int(0, k - 1));
                bundle.context[static_cast<std::size_t>(slot)] =
                    detail::synth_near(target, params, label, rng);
                bundle.synthetic_near = true;
                bundle.near_index = slot;
                if (bundle.base == RegimeKind::RANDOM) bundle.regime = RegimeKind::ONE_NEAR;
            }
            break;
        }
    }
    return bundle;
}

}  // namespace iclab
