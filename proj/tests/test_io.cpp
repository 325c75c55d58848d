#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "iclab/config.hpp"
#include "iclab/io.hpp"
#include "iclab/report.hpp"

using namespace iclab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path p = fs::temp_directory_path() / "iclab_io_test";
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("format_double round-trips random 64-bit values", "[io]") {
    RngStream rng(1, 0);
    for (int i = 0; i < 2000; ++i) {
        double v = rng.gaussian() * std::pow(10.0, static_cast<double>(rng.uniform_int(-300, 300)));
        if (i % 17 == 0) v = 0.0;
        if (i % 23 == 0) v = -v;
        const double back = parse_double(format_double(v));
        REQUIRE(back == v);
    }
    CHECK(std::isnan(parse_double(format_double(std::nan("")))));
    CHECK(parse_double(format_double(INFINITY)) == INFINITY);
    CHECK_THROWS_AS(parse_double("12x"), std::invalid_argument);
}

TEST_CASE("checkpoint save/load is exact", "[io]") {
    RngStream rng(2, 0);
    MinimalModel m;
    m.theta = ThetaParams{1.25, -40.0, 1e-17};
    m.net = InWeightsNet::zeros(6, 5);
    for (int i = 0; i < m.net.n_params(); ++i) m.net.param(i) = rng.gaussian();

    const fs::path path = temp_dir() / "ck.txt";
    save_checkpoint(path, m, RegimeKind::ONE_NEAR);
    const LoadedCheckpoint back = load_checkpoint(path);

    CHECK(back.regime == RegimeKind::ONE_NEAR);
    CHECK(back.model.theta.theta1 == m.theta.theta1);
    CHECK(back.model.theta.theta2 == m.theta.theta2);
    CHECK(back.model.theta.theta3 == m.theta.theta3);
    REQUIRE(back.model.net.n_params() == m.net.n_params());
    for (int i = 0; i < m.net.n_params(); ++i) REQUIRE(back.model.net.param(i) == m.net.param(i));
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));
}

TEST_CASE("checkpoint decoding validates structure", "[io]") {
    CHECK_THROWS(decode_checkpoint("garbage"));
    CHECK_THROWS(decode_checkpoint("iclab-checkpoint v1\nregime RANDOM\nd 4\nhidden 2\n"));
}

TEST_CASE("trajectory csv round-trips", "[io]") {
    Trajectory traj;
    RngStream rng(3, 0);
    for (int i = 1; i <= 5; ++i) {
        TrajectoryPoint p;
        p.step = i * 100;
        p.theta1 = rng.gaussian();
        p.theta2 = rng.gaussian();
        p.theta3 = rng.gaussian();
        p.loss = std::abs(rng.gaussian());
        p.E = std::abs(rng.gaussian());
        p.a_star_random = rng.uniform01();
        p.a_near_onenear = rng.uniform01();
        p.a_eoc_similar = rng.uniform01();
        p.iwl = rng.uniform01();
        p.icl = rng.uniform01();
        p.copy = rng.uniform01();
        p.grad_fhat_random = std::abs(rng.gaussian());
        p.grad_fhat_onenear = std::abs(rng.gaussian());
        traj.push_back(p);
    }
    const fs::path path = temp_dir() / "traj.csv";
    save_trajectory(path, traj);
    const Trajectory back = load_trajectory(path);
    REQUIRE(back.size() == traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK(back[i].step == traj[i].step);
        CHECK(back[i].theta1 == traj[i].theta1);
        CHECK(back[i].E == traj[i].E);
        CHECK(back[i].grad_fhat_onenear == traj[i].grad_fhat_onenear);
    }
    CHECK_THROWS(decode_trajectory("not,a,header\n1,2,3\n"));
}

TEST_CASE("atomic_write_file leaves no temp file behind", "[io]") {
    const fs::path path = temp_dir() / "atomic.txt";
    atomic_write_file(path, "hello\n");
    CHECK(read_file(path) == "hello\n");
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));
    atomic_write_file(path, "replaced\n");
    CHECK(read_file(path) == "replaced\n");
}

TEST_CASE("default config is valid and overrides apply", "[config][io]") {
    const ExperimentConfig cfg = default_config();
    CHECK(cfg.task.d == 10);
    CHECK(cfg.train.steps == 20000);
    CHECK(cfg.regime.delta1 == 0.3);

    const ExperimentConfig tuned = default_config({"train.steps=123", "regime.delta1=0.2",
                                                   "train.regime=RANDOM", "task.nonlinear=true"});
    CHECK(tuned.train.steps == 123);
    CHECK(tuned.regime.delta1 == 0.2);
    CHECK(tuned.train.params.delta1 == 0.2);
    CHECK(tuned.train.regime == RegimeKind::RANDOM);
    CHECK(tuned.task.nonlinear);
}

TEST_CASE("config rejects unknown keys by name", "[config][io]") {
    try {
        default_config({"train.stepz=5"});
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("stepz") != std::string::npos);
    }
}

TEST_CASE("config rejects out-of-range values naming the field", "[config][io]") {
    try {
        default_config({"regime.delta1=1.5"});
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("delta1") != std::string::npos);
    }
}

TEST_CASE("config file loading honors json contents", "[config][io]") {
    const fs::path path = temp_dir() / "cfg.json";
    atomic_write_file(path,
                      "{\"task\": {\"d\": 5, \"L\": 2.0}, \"train\": {\"steps\": 7}, "
                      "\"output_dir\": \"somewhere\"}\n");
    const ExperimentConfig cfg = load_config(path);
    CHECK(cfg.task.d == 5);
    CHECK(cfg.task.L == 2.0);
    CHECK(cfg.train.steps == 7);
    CHECK(cfg.output_dir == "somewhere");
    CHECK_THROWS_AS(load_config(temp_dir() / "missing.json"), std::invalid_argument);
}

TEST_CASE("svg charts are deterministic byte-for-byte", "[io]") {
    ChartSeries s1{"RANDOM", {0, 1, 2, 3}, {0.5, 0.25, 0.1, 0.05}};
    ChartSeries s2{"CONTRASTIVE", {0, 1, 2, 3}, {0.5, 0.4, 0.42, 0.45}};
    const std::string a = svg_line_chart("loss", "steps", "loss", {s1, s2});
    const std::string b = svg_line_chart("loss", "steps", "loss", {s1, s2});
    CHECK(a == b);
    CHECK(a.find("<svg") == 0);
    CHECK(a.find("RANDOM") != std::string::npos);
    CHECK(a.find("CONTRASTIVE") != std::string::npos);

    ChartSeries s3 = s2;
    s3.y[3] = 0.9;
    CHECK(svg_line_chart("loss", "steps", "loss", {s1, s3}) != a);

    // degenerate inputs still render
    const std::string flat = svg_line_chart("x", "s", "v", {ChartSeries{"one", {1.0}, {2.0}}});
    CHECK(flat.find("<svg") == 0);
}
