#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iclab/model.hpp"
#include "iclab/regime.hpp"
#include "iclab/train.hpp"

namespace iclab {

// Shortest representation that round-trips a 64-bit double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline double parse_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || end != begin + s.size())
        throw std::invalid_argument("parse_double: not a number: '" + s + "'");
    return v;
}

// All emitted files go through a temp-file + rename so failures never leave
// partial output behind.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write_file: cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("atomic_write_file: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file: cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- checkpoint

inline constexpr const char* kCheckpointMagic = "iclab-checkpoint v1";

inline std::string encode_checkpoint(const MinimalModel& model, RegimeKind regime) {
    std::ostringstream out;
    out << kCheckpointMagic << '\n';
    out << "regime " << to_string(regime) << '\n';
    out << "d " << model.net.d << '\n';
    out << "hidden " << model.net.hidden << '\n';
    out << "theta " << format_double(model.theta.theta1) << ' ' << format_double(model.theta.theta2)
        << ' ' << format_double(model.theta.theta3) << '\n';
    auto dump = [&out](const char* name, const std::vector<double>& v) {
        out << name;
        for (double x : v) out << ' ' << format_double(x);
        out << '\n';
    };
    dump("w1", model.net.w1);
    dump("b1", model.net.b1);
    dump("w2", model.net.w2);
    out << "b2 " << format_double(model.net.b2) << '\n';
    return out.str();
}

inline void save_checkpoint(const std::filesystem::path& path, const MinimalModel& model,
                            RegimeKind regime) {
    atomic_write_file(path, encode_checkpoint(model, regime));
}

struct LoadedCheckpoint {
    MinimalModel model;
    RegimeKind regime = RegimeKind::RANDOM;
};

inline LoadedCheckpoint decode_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic)
        throw std::runtime_error("checkpoint: bad magic line");

    LoadedCheckpoint ck;
    auto expect_key = [&](const char* key) -> std::istringstream {
        if (!std::getline(in, line)) throw std::runtime_error(std::string("checkpoint: missing ") + key);
        std::istringstream ls(line);
        std::string k;
        ls >> k;
        if (k != key) throw std::runtime_error("checkpoint: expected '" + std::string(key) + "', got '" + k + "'");
        return ls;
    };

    {
        auto ls = expect_key("regime");
        std::string r;
        ls >> r;
        ck.regime = regime_from_string(r);
    }
    int d = 0, hidden = 0;
    {
        auto ls = expect_key("d");
        ls >> d;
    }
    {
        auto ls = expect_key("hidden");
        ls >> hidden;
    }
    if (d < 2 || hidden < 1) throw std::runtime_error("checkpoint: bad dimensions");
    ck.model.net = InWeightsNet::zeros(d, hidden);

    auto read_doubles = [&](std::istringstream& ls, std::vector<double>& v, std::size_t n) {
        v.resize(n);
        std::string tok;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(ls >> tok)) throw std::runtime_error("checkpoint: truncated parameter block");
            v[i] = parse_double(tok);
        }
        if (ls >> tok) throw std::runtime_error("checkpoint: trailing data in parameter block");
    };

    {
        auto ls = expect_key("theta");
        std::vector<double> t;
        read_doubles(ls, t, 3);
        ck.model.theta = ThetaParams{t[0], t[1], t[2]};
    }
    {
        auto ls = expect_key("w1");
        read_doubles(ls, ck.model.net.w1, static_cast<std::size_t>(d * hidden));
    }
    {
        auto ls = expect_key("b1");
        read_doubles(ls, ck.model.net.b1, static_cast<std::size_t>(hidden));
    }
    {
        auto ls = expect_key("w2");
        read_doubles(ls, ck.model.net.w2, static_cast<std::size_t>(hidden));
    }
    {
        auto ls = expect_key("b2");
        std::vector<double> b;
        read_doubles(ls, b, 1);
        ck.model.net.b2 = b[0];
    }
    return ck;
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path));
}

// ---------------------------------------------------------------- trajectory

inline constexpr const char* kTrajectoryHeader =
    "step,theta1,theta2,theta3,loss,E,a_star_random,a_near_onenear,a_eoc_similar,iwl,icl,copy,"
    "grad_fhat_random,grad_fhat_onenear";

inline std::string encode_trajectory(const Trajectory& traj) {
    std::ostringstream out;
    out << kTrajectoryHeader << '\n';
    for (const auto& p : traj) {
        out << p.step << ',' << format_double(p.theta1) << ',' << format_double(p.theta2) << ','
            << format_double(p.theta3) << ',' << format_double(p.loss) << ',' << format_double(p.E)
            << ',' << format_double(p.a_star_random) << ',' << format_double(p.a_near_onenear)
            << ',' << format_double(p.a_eoc_similar) << ',' << format_double(p.iwl) << ','
            << format_double(p.icl) << ',' << format_double(p.copy) << ','
            << format_double(p.grad_fhat_random) << ',' << format_double(p.grad_fhat_onenear)
            << '\n';
    }
    return out.str();
}

inline void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
    atomic_write_file(path, encode_trajectory(traj));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline Trajectory decode_trajectory(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kTrajectoryHeader)
        throw std::runtime_error("trajectory: bad or missing header");
    Trajectory traj;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 14) throw std::runtime_error("trajectory: bad column count");
        TrajectoryPoint p;
        p.step = static_cast<int>(std::stol(f[0]));
        p.theta1 = parse_double(f[1]);
        p.theta2 = parse_double(f[2]);
        p.theta3 = parse_double(f[3]);
        p.loss = parse_double(f[4]);
        p.E = parse_double(f[5]);
        p.a_star_random = parse_double(f[6]);
        p.a_near_onenear = parse_double(f[7]);
        p.a_eoc_similar = parse_double(f[8]);
        p.iwl = parse_double(f[9]);
        p.icl = parse_double(f[10]);
        p.copy = parse_double(f[11]);
        p.grad_fhat_random = parse_double(f[12]);
        p.grad_fhat_onenear = parse_double(f[13]);
        traj.push_back(p);
    }
    return traj;
}

inline Trajectory load_trajectory(const std::filesystem::path& path) {
    return decode_trajectory(read_file(path));
}

}  // namespace iclab
