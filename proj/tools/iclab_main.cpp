// Experiment runner for the minimal in-context/in-weights laboratory.
//
// Subcommands: gradcheck, train, probe, matrix, sweep, pfa-gen, pfa-score,
// report. Exit codes: 0 success, 1 validation failure, 2 tolerance failure,
// 3 divergence abort.

#include <algorithm>
#include <array>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iclab/config.hpp"
#include "iclab/gradcheck.hpp"
#include "iclab/io.hpp"
#include "iclab/pfa.hpp"
#include "iclab/probes.hpp"
#include "iclab/report.hpp"
#include "iclab/rng.hpp"
#include "iclab/task.hpp"
#include "iclab/train.hpp"

namespace fs = std::filesystem;
using namespace iclab;

namespace {

void emit_error(const std::string& category, const std::string& message) {
    std::string one_line = message;
    std::replace(one_line.begin(), one_line.end(), '\n', ' ');
    std::cerr << "error: " << category << ": " << one_line << "\n";
}

struct World {
    ExperimentConfig cfg;
    Labeler label;
    double L = 1.0;
    std::vector<LabeledExample> train_pool;
    std::vector<LabeledExample> heldout_pool;
};

World build_world(const ExperimentConfig& cfg) {
    World w;
    w.cfg = cfg;
    RngStream task_rng(cfg.task.seed, 100);
    if (cfg.task.nonlinear) {
        NonlinearTarget t = make_nonlinear_target(cfg.task.d, 32, cfg.task.L, task_rng);
        w.L = t.lipschitz;
        w.label = [t](const UnitVector& x) { return t(x); };
    } else {
        TargetFunction t = make_target(cfg.task.d, cfg.task.L, task_rng);
        w.L = t.lipschitz;
        w.label = labeler_of(t);
    }
    RngStream pool_rng(cfg.task.seed, 101);
    w.train_pool = make_pool(cfg.task.pool_train, cfg.task.d, w.label, pool_rng);
    RngStream held_rng(cfg.task.seed, 102);
    w.heldout_pool = make_pool(cfg.task.pool_heldout, cfg.task.d, w.label, held_rng);
    return w;
}

ExperimentConfig resolve_config(const std::string& config_path,
                                const std::vector<std::string>& overrides) {
    if (config_path.empty()) return default_config(overrides);
    return load_config(config_path, overrides);
}

std::string regime_dir_name(RegimeKind r) { return to_string(r); }

void write_run_outputs(const fs::path& dir, const TrainResult& result, RegimeKind regime) {
    save_trajectory(dir / "trajectory.csv", result.trajectory);
    save_checkpoint(dir / "checkpoint.txt", result.model, regime);
}

int cmd_gradcheck(int n, double h, std::uint64_t seed) {
    const GradcheckResult res = run_gradcheck(n, h, seed);
    std::cout << res.passed << "/" << res.total << " within tol\n";
    if (res.passed != res.total) {
        emit_error("tolerance",
                   "gradcheck failed for " + std::to_string(res.total - res.passed) +
                       " configs, worst rel err " + format_double(res.worst_rel));
        return 2;
    }
    return 0;
}

void print_run_summary(const World& w, const TrainResult& result, RegimeKind regime) {
    const TrajectoryPoint& last = result.trajectory.back();
    const BoundsReport bounds =
        eq_A_bounds(w.L, w.cfg.regime.delta1, w.cfg.regime.delta2, last.E);
    RngStream rng(w.cfg.train.seed, 7777);
    const StationaryReport rep =
        classify_stationary(result.model, w.heldout_pool, w.label, w.cfg.probe, rng);
    std::cout << "regime=" << to_string(regime) << " steps=" << last.step
              << " loss=" << format_double(last.loss) << " E=" << format_double(last.E)
              << " E_lower=" << format_double(bounds.lower)
              << " E_upper=" << format_double(bounds.upper)
              << " E_in_range=" << (bounds.in_range ? "true" : "false")
              << " theta=(" << format_double(last.theta1) << "," << format_double(last.theta2)
              << "," << format_double(last.theta3) << ")"
              << " class=" << to_string(rep.label) << "\n";
}

int cmd_train(const ExperimentConfig& cfg) {
    World w = build_world(cfg);
    const TrainResult result = train_run(cfg.train, w.label, w.train_pool, w.heldout_pool);
    const fs::path dir = fs::path(cfg.output_dir) / regime_dir_name(cfg.train.regime);
    write_run_outputs(dir, result, cfg.train.regime);
    print_run_summary(w, result, cfg.train.regime);
    std::cout << "wrote " << (dir / "trajectory.csv").string() << " and "
              << (dir / "checkpoint.txt").string() << "\n";
    return 0;
}

int cmd_probe(const ExperimentConfig& cfg, const std::vector<std::string>& checkpoints) {
    World w = build_world(cfg);
    std::ostringstream csv;
    csv << "checkpoint,regime,iwl,icl,copy,label,a_star_random,a_star_similar,a_star_onenear,"
           "a_eoc_similar,a_near_onenear\n";
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const LoadedCheckpoint ck = load_checkpoint(checkpoints[i]);
        RngStream rng(w.cfg.task.seed, 500 + i);
        const double iwl = iwl_score(ck.model, w.heldout_pool, cfg.probe, rng);
        const double icl = icl_score(ck.model, w.heldout_pool, cfg.probe, rng);
        const double copy = copy_score(ck.model, w.heldout_pool, cfg.probe, rng);
        const StationaryReport rep =
            classify_stationary(ck.model, w.heldout_pool, w.label, cfg.probe, rng);
        csv << checkpoints[i] << ',' << to_string(ck.regime) << ',' << format_double(iwl) << ','
            << format_double(icl) << ',' << format_double(copy) << ',' << to_string(rep.label)
            << ',' << format_double(rep.a_star_random) << ',' << format_double(rep.a_star_similar)
            << ',' << format_double(rep.a_star_onenear) << ',' << format_double(rep.a_eoc_similar)
            << ',' << format_double(rep.a_near_onenear) << '\n';
        std::cout << checkpoints[i] << ": iwl=" << format_double(iwl)
                  << " icl=" << format_double(icl) << " copy=" << format_double(copy)
                  << " class=" << to_string(rep.label) << "\n";
    }
    const fs::path out = fs::path(cfg.output_dir) / "probes.csv";
    atomic_write_file(out, csv.str());
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

std::string encode_matrix_csv(const CrossRegimeMatrix& m) {
    std::ostringstream csv;
    csv << "train_regime,loss_random,loss_similar,loss_onenear,a_star_random,a_star_similar,"
           "a_star_onenear,a_eoc_random,a_eoc_similar,a_eoc_onenear,a_near_random,a_near_similar,"
           "a_near_onenear\n";
    for (std::size_t row = 0; row < kAllRegimes.size(); ++row) {
        csv << to_string(kAllRegimes[row]);
        for (std::size_t col = 0; col < 3; ++col) csv << ',' << format_double(m.mean_loss[row][col]);
        for (std::size_t col = 0; col < 3; ++col) csv << ',' << format_double(m.a_star[row][col]);
        for (std::size_t col = 0; col < 3; ++col) csv << ',' << format_double(m.a_eoc[row][col]);
        for (std::size_t col = 0; col < 3; ++col) csv << ',' << format_double(m.a_near[row][col]);
        csv << '\n';
    }
    return csv.str();
}

bool contrastive_best_or_tied(const CrossRegimeMatrix& m, double tie_rel, std::ostream& log) {
    constexpr std::size_t contrastive_row = 4;
    bool all_ok = true;
    static const char* col_names[] = {"random", "similar", "onenear"};
    for (std::size_t col = 0; col < 3; ++col) {
        double best = m.mean_loss[0][col];
        for (std::size_t row = 1; row < 5; ++row) best = std::min(best, m.mean_loss[row][col]);
        const double c = m.mean_loss[contrastive_row][col];
        const bool ok = c <= best * (1.0 + tie_rel) + 1e-12;
        log << "column=" << col_names[col] << " best=" << format_double(best)
            << " contrastive=" << format_double(c) << " margin=" << format_double(c - best)
            << (ok ? " (best-or-tied)" : " (worse)") << "\n";
        all_ok &= ok;
    }
    return all_ok;
}

int cmd_matrix(const ExperimentConfig& cfg, const std::vector<std::string>& checkpoints) {
    if (checkpoints.size() != 5)
        throw std::invalid_argument("matrix: exactly five checkpoints are required, one per regime");
    World w = build_world(cfg);
    std::array<MinimalModel, 5> models;
    std::array<bool, 5> seen{};
    for (const auto& path : checkpoints) {
        const LoadedCheckpoint ck = load_checkpoint(path);
        const auto row = static_cast<std::size_t>(ck.regime);
        if (seen[row])
            throw std::invalid_argument("matrix: duplicate checkpoint for regime " +
                                        std::string(to_string(ck.regime)));
        seen[row] = true;
        models[row] = ck.model;
    }
    RngStream rng(cfg.task.seed, 555);
    const CrossRegimeMatrix m = cross_regime_eval(models, w.heldout_pool, w.label, cfg.probe, rng);
    const fs::path out = fs::path(cfg.output_dir) / "matrix.csv";
    atomic_write_file(out, encode_matrix_csv(m));
    const bool flag = contrastive_best_or_tied(m, 0.05, std::cout);
    std::cout << "contrastive_best_or_tied=" << (flag ? "true" : "false") << "\n";
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, int jobs) {
    World w = build_world(cfg);

    std::array<TrainResult, 5> results;
    std::array<std::string, 5> failures;

    auto run_one = [&](std::size_t idx) {
        TrainConfig tc = cfg.train;
        tc.regime = kAllRegimes[idx];
        tc.seed = cfg.train.seed + 1000003ull * idx;
        try {
            results[idx] = train_run(tc, w.label, w.train_pool, w.heldout_pool);
        } catch (const std::exception& e) {
            failures[idx] = e.what();
        }
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < 5; ++i) run_one(i);
    } else {
        std::vector<std::thread> workers;
        for (std::size_t i = 0; i < 5; ++i) workers.emplace_back(run_one, i);
        for (auto& t : workers) t.join();
    }
    for (std::size_t i = 0; i < 5; ++i)
        if (!failures[i].empty())
            throw DivergenceError("sweep: " + std::string(to_string(kAllRegimes[i])) + ": " +
                                  failures[i]);

    std::array<MinimalModel, 5> models;
    for (std::size_t i = 0; i < 5; ++i) {
        models[i] = results[i].model;
        const fs::path dir = fs::path(cfg.output_dir) / regime_dir_name(kAllRegimes[i]);
        write_run_outputs(dir, results[i], kAllRegimes[i]);
        print_run_summary(w, results[i], kAllRegimes[i]);
    }

    RngStream rng(cfg.task.seed, 555);
    const CrossRegimeMatrix m = cross_regime_eval(models, w.heldout_pool, w.label, cfg.probe, rng);
    const fs::path out = fs::path(cfg.output_dir) / "matrix.csv";
    atomic_write_file(out, encode_matrix_csv(m));
    const bool flag = contrastive_best_or_tied(m, 0.05, std::cout);
    std::cout << "contrastive_best_or_tied=" << (flag ? "true" : "false") << "\n";
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

nlohmann::json corpus_meta(const CorpusInstance& inst, int index) {
    nlohmann::json j;
    j["index"] = index;
    j["regime"] = to_string(inst.regime);
    j["k"] = static_cast<int>(inst.context.size());
    j["jaccard"] = inst.jaccard;
    j["x_star"] = inst.x_star;
    j["y_star"] = inst.y_star;
    j["paraphrase_slot"] = inst.paraphrase_slot;
    j["synthetic_near"] = inst.synthetic_near;
    return j;
}

int cmd_pfa_gen(const ExperimentConfig& cfg) {
    const auto& pc = cfg.pfa;
    const SymbolTable table_full =
        make_symbol_table(pc.vocab_full, pc.n_states, pc.alphabet, pc.seed);
    const SymbolTable table_similar =
        make_symbol_table(pc.vocab_similar, pc.n_states, pc.alphabet, pc.seed);
    RngStream task_rng(pc.seed, 900);
    const AlignmentTask task = make_alignment_task(pc.m, pc.c, task_rng);
    const RegimeKind kind = regime_from_string(pc.regime);
    RngStream rng(pc.seed, 901 + static_cast<std::uint64_t>(kind));
    const auto corpus = build_corpus(kind, pc.count, table_full, table_similar, task, cfg.regime, rng);

    std::ostringstream prompts, meta;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        prompts << corpus[i].prompt() << '\n';
        meta << corpus_meta(corpus[i], static_cast<int>(i)).dump() << '\n';
    }
    const fs::path base = fs::path(cfg.output_dir);
    const std::string stem = "pfa_" + pc.regime;
    atomic_write_file(base / (stem + ".txt"), prompts.str());
    atomic_write_file(base / (stem + ".meta.jsonl"), meta.str());
    std::cout << "wrote " << corpus.size() << " instances to " << (base / (stem + ".txt")).string()
              << "\n";
    return 0;
}

int cmd_pfa_score(const ExperimentConfig& cfg, const std::string& meta_path,
                  const std::string& pred_path) {
    const auto& pc = cfg.pfa;
    const SymbolTable table_full =
        make_symbol_table(pc.vocab_full, pc.n_states, pc.alphabet, pc.seed);
    RngStream task_rng(pc.seed, 900);
    const AlignmentTask task = make_alignment_task(pc.m, pc.c, task_rng);

    std::vector<std::string> xs, golds;
    {
        std::istringstream in(read_file(meta_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            xs.push_back(j.at("x_star").get<std::string>());
            golds.push_back(j.at("y_star").get<std::string>());
        }
    }
    std::vector<std::string> preds;
    {
        std::istringstream in(read_file(pred_path));
        std::string line;
        while (std::getline(in, line)) preds.push_back(line);
        while (!preds.empty() && preds.back().empty()) preds.pop_back();
    }
    if (preds.size() != xs.size())
        throw std::invalid_argument("pfa-score: prediction count " + std::to_string(preds.size()) +
                                    " does not match instance count " + std::to_string(xs.size()));

    std::ostringstream csv;
    csv << "index,score\n";
    double mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double s = score_output(table_full, task, xs[i], preds[i]);
        csv << i << ',' << format_double(s) << '\n';
        mean += s;
    }
    mean /= static_cast<double>(xs.size());
    const fs::path out = fs::path(cfg.output_dir) / "pfa_scores.csv";
    atomic_write_file(out, csv.str());
    std::cout << "scored " << xs.size() << " predictions, mean=" << format_double(mean)
              << ", max=" << pc.c << "\n";
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_report(const ExperimentConfig& cfg, const std::vector<std::string>& traj_paths) {
    if (traj_paths.empty()) throw std::invalid_argument("report: at least one trajectory required");

    struct Named {
        std::string name;
        Trajectory traj;
    };
    std::vector<Named> runs;
    for (const auto& p : traj_paths) {
        fs::path fp(p);
        std::string name = fp.stem().string();
        if (name == "trajectory" && fp.has_parent_path())
            name = fp.parent_path().filename().string();
        runs.push_back(Named{name, load_trajectory(fp)});
    }

    struct Metric {
        const char* key;
        double TrajectoryPoint::* field;
    };
    static const Metric metrics[] = {
        {"loss", &TrajectoryPoint::loss},
        {"E", &TrajectoryPoint::E},
        {"a_star_random", &TrajectoryPoint::a_star_random},
        {"a_near_onenear", &TrajectoryPoint::a_near_onenear},
        {"a_eoc_similar", &TrajectoryPoint::a_eoc_similar},
        {"iwl", &TrajectoryPoint::iwl},
        {"icl", &TrajectoryPoint::icl},
        {"copy", &TrajectoryPoint::copy},
        {"grad_fhat_random", &TrajectoryPoint::grad_fhat_random},
        {"grad_fhat_onenear", &TrajectoryPoint::grad_fhat_onenear},
        {"theta1", &TrajectoryPoint::theta1},
        {"theta2", &TrajectoryPoint::theta2},
        {"theta3", &TrajectoryPoint::theta3},
    };

    const fs::path base = fs::path(cfg.output_dir);
    for (const auto& m : metrics) {
        std::vector<ChartSeries> series;
        for (const auto& run : runs) {
            ChartSeries s;
            s.name = run.name;
            for (const auto& pt : run.traj) {
                s.x.push_back(static_cast<double>(pt.step));
                s.y.push_back(pt.*(m.field));
            }
            series.push_back(std::move(s));
        }
        atomic_write_file(base / ("chart_" + std::string(m.key) + ".svg"),
                          svg_line_chart(m.key, "training steps", m.key, series));
    }

    std::ostringstream summary;
    summary << "name,step,theta1,theta2,theta3,loss,E,a_star_random,a_near_onenear,a_eoc_similar,"
               "iwl,icl,copy,grad_fhat_random,grad_fhat_onenear\n";
    for (const auto& run : runs) {
        if (run.traj.empty()) continue;
        const auto& p = run.traj.back();
        summary << run.name << ',' << p.step << ',' << format_double(p.theta1) << ','
                << format_double(p.theta2) << ',' << format_double(p.theta3) << ','
                << format_double(p.loss) << ',' << format_double(p.E) << ','
                << format_double(p.a_star_random) << ',' << format_double(p.a_near_onenear) << ','
                << format_double(p.a_eoc_similar) << ',' << format_double(p.iwl) << ','
                << format_double(p.icl) << ',' << format_double(p.copy) << ','
                << format_double(p.grad_fhat_random) << ',' << format_double(p.grad_fhat_onenear)
                << '\n';
    }
    atomic_write_file(base / "summary.csv", summary.str());
    std::cout << "wrote " << static_cast<int>(sizeof(metrics) / sizeof(metrics[0]))
              << " charts and summary.csv under " << base.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimal-model laboratory for in-context/in-weights learning mixtures"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON experiment config (defaults apply when omitted)");
    app.add_option("--set", overrides, "override config entries, e.g. --set train.steps=1000");
    app.fallthrough();

    auto* sc_gradcheck = app.add_subcommand("gradcheck", "closed-form vs finite-difference oracle");
    int gc_n = 200;
    double gc_h = 1e-5;
    std::uint64_t gc_seed = 20240901;
    sc_gradcheck->add_option("--configs", gc_n, "number of random configurations");
    sc_gradcheck->add_option("--fd-step", gc_h, "finite-difference step");
    sc_gradcheck->add_option("--seed", gc_seed, "rng seed");

    auto* sc_train = app.add_subcommand("train", "train one regime, write trajectory + checkpoint");

    auto* sc_probe = app.add_subcommand("probe", "compute probe scores for checkpoints");
    std::vector<std::string> probe_ckpts;
    sc_probe->add_option("--checkpoint", probe_ckpts, "checkpoint file(s)")->required();

    auto* sc_matrix = app.add_subcommand("matrix", "cross-regime eval matrix from 5 checkpoints");
    std::vector<std::string> matrix_ckpts;
    sc_matrix->add_option("--checkpoint", matrix_ckpts, "five checkpoint files")->required();

    auto* sc_sweep = app.add_subcommand("sweep", "train all five regimes and emit the matrix");
    int sweep_jobs = 1;
    sc_sweep->add_option("--jobs", sweep_jobs, "parallel workers (default 1)");

    auto* sc_pfa_gen = app.add_subcommand("pfa-gen", "generate a PFA alignment corpus");

    auto* sc_pfa_score = app.add_subcommand("pfa-score", "score predictions for a corpus");
    std::string meta_path, pred_path;
    sc_pfa_score->add_option("--meta", meta_path, "corpus .meta.jsonl file")->required();
    sc_pfa_score->add_option("--pred", pred_path, "predictions, one per line")->required();

    auto* sc_report = app.add_subcommand("report", "render SVG charts from trajectories");
    std::vector<std::string> traj_paths;
    sc_report->add_option("--trajectory", traj_paths, "trajectory csv file(s)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("validation", e.what());
        return 1;
    }

    try {
        if (sc_gradcheck->parsed()) return cmd_gradcheck(gc_n, gc_h, gc_seed);
        const ExperimentConfig cfg = resolve_config(config_path, overrides);
        if (sc_train->parsed()) return cmd_train(cfg);
        if (sc_probe->parsed()) return cmd_probe(cfg, probe_ckpts);
        if (sc_matrix->parsed()) return cmd_matrix(cfg, matrix_ckpts);
        if (sc_sweep->parsed()) return cmd_sweep(cfg, sweep_jobs);
        if (sc_pfa_gen->parsed()) return cmd_pfa_gen(cfg);
        if (sc_pfa_score->parsed()) return cmd_pfa_score(cfg, meta_path, pred_path);
        if (sc_report->parsed()) return cmd_report(cfg, traj_paths);
        emit_error("validation", "no subcommand given");
        return 1;
    } catch (const DivergenceError& e) {
        emit_error("divergence", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        emit_error("validation", e.what());
        return 1;
    } catch (const nlohmann::json::exception& e) {
        emit_error("validation", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("runtime", e.what());
        return 1;
    }
}
