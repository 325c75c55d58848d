#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iclab/pfa.hpp"
#include "iclab/probes.hpp"
#include "iclab/regime.hpp"
#include "iclab/train.hpp"

namespace iclab {

struct TaskConfig {
    int d = 10;
    double L = 1.0;
    int pool_train = 4096;
    int pool_heldout = 1024;
    std::uint64_t seed = 1;
    bool nonlinear = false;

    void validate() const {
        if (d < 2) throw std::invalid_argument("task.d must be >= 2");
        if (!(L > 0.0)) throw std::invalid_argument("task.L must be > 0");
        if (pool_train < 1) throw std::invalid_argument("task.pool_train must be >= 1");
        if (pool_heldout < 1) throw std::invalid_argument("task.pool_heldout must be >= 1");
    }
};

struct PfaConfig {
    int m = 4;
    int c = 4;
    int vocab_full = 25;
    int vocab_similar = 12;
    int n_states = 3;
    std::string alphabet = "rijphtw";
    int count = 200;
    std::uint64_t seed = 11;
    std::string regime = "CONTRASTIVE";

    void validate() const {
        if (m < 1 || c < 1) throw std::invalid_argument("pfa.m and pfa.c must be >= 1");
        if (vocab_full < 2 || vocab_full > 26) throw std::invalid_argument("pfa.vocab_full must lie in [2,26]");
        if (vocab_similar < 2 || vocab_similar > vocab_full)
            throw std::invalid_argument("pfa.vocab_similar must lie in [2, vocab_full]");
        if (n_states < 1) throw std::invalid_argument("pfa.n_states must be >= 1");
        if (alphabet.size() < 2) throw std::invalid_argument("pfa.alphabet must have >= 2 letters");
        if (count < 1) throw std::invalid_argument("pfa.count must be >= 1");
        regime_from_string(regime);
    }
};

struct ExperimentConfig {
    TaskConfig task;
    RegimeParams regime;
    TrainConfig train;
    ProbeConfig probe;
    PfaConfig pfa;
    std::string output_dir = "out";

    void validate() const {
        task.validate();
        regime.validate();
        train.validate();
        probe.validate();
        pfa.validate();
        if (output_dir.empty()) throw std::invalid_argument("output_dir must be non-empty");
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
}

template <class T>
void assign_if(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    detail::reject_unknown_keys(j, {"task", "regime", "train", "probe", "pfa", "output_dir"}, "");

    if (j.contains("task")) {
        const auto& t = j.at("task");
        detail::reject_unknown_keys(t, {"d", "L", "pool_train", "pool_heldout", "seed", "nonlinear"},
                                    "task.");
        detail::assign_if(t, "d", cfg.task.d);
        detail::assign_if(t, "L", cfg.task.L);
        detail::assign_if(t, "pool_train", cfg.task.pool_train);
        detail::assign_if(t, "pool_heldout", cfg.task.pool_heldout);
        detail::assign_if(t, "seed", cfg.task.seed);
        detail::assign_if(t, "nonlinear", cfg.task.nonlinear);
    }
    if (j.contains("regime")) {
        const auto& r = j.at("regime");
        detail::reject_unknown_keys(r, {"delta1", "delta2", "p", "epsilon", "k_min", "k_max"},
                                    "regime.");
        detail::assign_if(r, "delta1", cfg.regime.delta1);
        detail::assign_if(r, "delta2", cfg.regime.delta2);
        detail::assign_if(r, "p", cfg.regime.p);
        detail::assign_if(r, "epsilon", cfg.regime.epsilon);
        detail::assign_if(r, "k_min", cfg.regime.k_min);
        detail::assign_if(r, "k_max", cfg.regime.k_max);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        detail::reject_unknown_keys(t,
                                    {"regime", "steps", "batch", "lr_theta", "lr_net",
                                     "checkpoint_every", "seed", "hidden", "n_diag"},
                                    "train.");
        if (t.contains("regime")) cfg.train.regime = regime_from_string(t.at("regime").get<std::string>());
        detail::assign_if(t, "steps", cfg.train.steps);
        detail::assign_if(t, "batch", cfg.train.batch);
        detail::assign_if(t, "lr_theta", cfg.train.lr_theta);
        detail::assign_if(t, "lr_net", cfg.train.lr_net);
        detail::assign_if(t, "checkpoint_every", cfg.train.checkpoint_every);
        detail::assign_if(t, "seed", cfg.train.seed);
        detail::assign_if(t, "hidden", cfg.train.hidden);
        detail::assign_if(t, "n_diag", cfg.train.n_diag);
    }
    if (j.contains("probe")) {
        const auto& p = j.at("probe");
        detail::reject_unknown_keys(p, {"tau", "k", "n_eval"}, "probe.");
        detail::assign_if(p, "tau", cfg.probe.tau);
        detail::assign_if(p, "k", cfg.probe.k);
        detail::assign_if(p, "n_eval", cfg.probe.n_eval);
    }
    if (j.contains("pfa")) {
        const auto& p = j.at("pfa");
        detail::reject_unknown_keys(p,
                                    {"m", "c", "vocab_full", "vocab_similar", "n_states",
                                     "alphabet", "count", "seed", "regime"},
                                    "pfa.");
        detail::assign_if(p, "m", cfg.pfa.m);
        detail::assign_if(p, "c", cfg.pfa.c);
        detail::assign_if(p, "vocab_full", cfg.pfa.vocab_full);
        detail::assign_if(p, "vocab_similar", cfg.pfa.vocab_similar);
        detail::assign_if(p, "n_states", cfg.pfa.n_states);
        detail::assign_if(p, "alphabet", cfg.pfa.alphabet);
        detail::assign_if(p, "count", cfg.pfa.count);
        detail::assign_if(p, "seed", cfg.pfa.seed);
        detail::assign_if(p, "regime", cfg.pfa.regime);
    }
    detail::assign_if(j, "output_dir", cfg.output_dir);

    // the probe caps mirror the regime section
    cfg.probe.delta1 = cfg.regime.delta1;
    cfg.probe.delta2 = cfg.regime.delta2;
    cfg.train.params = cfg.regime;
    cfg.train.probe = cfg.probe;

    cfg.validate();
    return cfg;
}

// "--set section.key=value" overrides, applied before validation.
inline nlohmann::json apply_overrides(nlohmann::json j, const std::vector<std::string>& overrides) {
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override must look like section.key=value: '" + ov + "'");
        const std::string path = ov.substr(0, eq);
        const std::string raw = ov.substr(eq + 1);

        nlohmann::json value;
        try {
            value = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error&) {
            value = raw;  // unquoted strings
        }

        nlohmann::json* node = &j;
        std::size_t pos = 0;
        while (true) {
            const auto dotpos = path.find('.', pos);
            const std::string key = path.substr(pos, dotpos == std::string::npos ? std::string::npos : dotpos - pos);
            if (key.empty()) throw std::invalid_argument("override has an empty key segment: '" + ov + "'");
            if (dotpos == std::string::npos) {
                (*node)[key] = value;
                break;
            }
            node = &(*node)[key];
            pos = dotpos + 1;
        }
    }
    return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    return config_from_json(apply_overrides(std::move(j), overrides));
}

inline ExperimentConfig default_config(const std::vector<std::string>& overrides = {}) {
    return config_from_json(apply_overrides(nlohmann::json::object(), overrides));
}

}  // namespace iclab
