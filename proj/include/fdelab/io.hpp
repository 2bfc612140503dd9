#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fdelab/errors.hpp"
#include "fdelab/grid.hpp"
#include "fdelab/solver.hpp"
#include "fdelab/stationary.hpp"

namespace fdelab {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline void write_csv(const std::filesystem::path& path, const Table& t) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    for (std::size_t j = 0; j < t.header.size(); ++j) out << (j ? "," : "") << t.header[j];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
        out << '\n';
    }
}

inline Table read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            first = false;
            double probe;
            const auto r = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), probe);
            if (r.ec != std::errc() || r.ptr != cells[0].data() + cells[0].size()) {
                t.header = cells;
                continue;
            }
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            double v;
            const auto r = std::from_chars(c.data(), c.data() + c.size(), v);
            if (r.ec != std::errc()) throw Error("malformed number '" + c + "' in '" + path.string() + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Nodal datum from a file: one value per row, or (coordinate, value) rows; an optional header is skipped.
inline Field read_nodal_file(const std::filesystem::path& path, std::size_t expected) {
    const Table t = read_csv(path);
    Field u;
    for (const auto& row : t.rows) {
        if (row.empty() || row.size() > 2) throw ConfigError("nodal file: expected one or two columns per row");
        u.push_back(row.back());
    }
    if (u.size() != expected)
        throw ConfigError("nodal file: " + std::to_string(u.size()) + " values for " + std::to_string(expected) + " nodes");
    return u;
}

inline std::string coordinate_label(const Grid& grid) {
    return grid.spec().kind == DomainKind::Interval ? "x" : "r";
}

/// Columns: tau, then one column per node. Every `stride`-th snapshot plus the last one is written.
inline Table trajectory_table(const Grid& grid, const std::vector<FlowState>& snapshots, std::size_t stride,
                              const char* time_label = "tau") {
    Table t;
    t.header.push_back(time_label);
    for (std::size_t i = 0; i < grid.size(); ++i) t.header.push_back("u" + std::to_string(i));
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        if (k % stride != 0 && k + 1 != snapshots.size()) continue;
        std::vector<double> row{snapshots[k].time};
        row.insert(row.end(), snapshots[k].u.begin(), snapshots[k].u.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline nlohmann::json trajectory_sidecar(const Trajectory& traj) {
    nlohmann::json j;
    j["m"] = traj.m;
    j["reached"] = traj.reached;
    j["extinction_time"] = traj.reached ? nlohmann::json(traj.extinction_time) : nlohmann::json(nullptr);
    j["extinction_bracket"] = traj.reached ? nlohmann::json::array({traj.bracket_lo, traj.bracket_hi})
                                           : nlohmann::json(nullptr);
    j["resolution_limited"] = traj.resolution_limited;
    j["rejected_steps"] = traj.rejected_steps;
    j["snapshots"] = traj.snapshots.size();
    j["step_log"] = traj.step_log;
    return j;
}

inline nlohmann::json rescaled_sidecar(const RescaledTrajectory& r) {
    return {{"m", r.m}, {"T", r.T}, {"blow_up", r.blow_up}, {"collapsed", r.collapsed},
            {"snapshots", r.snapshots.size()}, {"horizon", r.horizon()}};
}

inline Table profile_table(const Grid& grid, const StationaryProfile& p) {
    Table t;
    t.header = {coordinate_label(grid), "V", "S"};
    for (std::size_t i = 0; i < grid.size(); ++i) t.rows.push_back({grid.coords()[i], p.V[i], p.S[i]});
    return t;
}

inline nlohmann::json profile_sidecar(const StationaryProfile& p) {
    return {{"p", p.p}, {"c", p.c}, {"induced_T", std::isfinite(p.induced_T) ? nlohmann::json(p.induced_T) : nlohmann::json(nullptr)},
            {"residual", p.residual}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace fdelab
