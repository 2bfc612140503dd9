#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fdelab/errors.hpp"
#include "fdelab/grid.hpp"
#include "fdelab/solver.hpp"

namespace fdelab {

using json = nlohmann::json;

/// One initial datum. Profile-based kinds carry (p, c) of the Lane-Emden-Fowler
/// profile; p must equal 1/m.
struct InitialSpec {
    enum class Kind { SeparableProfile, GaussianBump, ScaledProfile, PerturbedProfile, NodalFile };
    Kind kind = Kind::GaussianBump;
    double p = 2.0;
    double c = 2.0;
    double center = 0.0;
    double width = 0.15;
    double amplitude = 1.0;
    double factor = 1.0;   ///< ScaledProfile: factor · S
    double epsilon = 0.2;  ///< PerturbedProfile: S (1 + ε cos(π r/R))
    std::string path;      ///< NodalFile

    bool operator==(const InitialSpec&) const = default;
};

inline const char* to_string(InitialSpec::Kind k) {
    switch (k) {
        case InitialSpec::Kind::SeparableProfile: return "separable_profile";
        case InitialSpec::Kind::GaussianBump: return "gaussian_bump";
        case InitialSpec::Kind::ScaledProfile: return "scaled_profile";
        case InitialSpec::Kind::PerturbedProfile: return "perturbed_profile";
        case InitialSpec::Kind::NodalFile: return "nodal_file";
    }
    return "?";
}

enum class FlowKind { None, Cdp, Rcdp };

inline const char* to_string(FlowKind k) {
    switch (k) {
        case FlowKind::None: return "none";
        case FlowKind::Cdp: return "cdp";
        case FlowKind::Rcdp: return "rcdp";
    }
    return "?";
}

struct FlowSpec {
    FlowKind kind = FlowKind::Cdp;
    SolverControls cdp;
    RescaledControls rcdp;
    bool calibrate = true;            ///< rcdp: calibrate T against the datum, else use the profile's T
    double calibration_t_max = 14.0;  ///< rcdp: horizon of each calibration trial

    bool operator==(const FlowSpec& o) const {
        auto same_cdp = [](const SolverControls& a, const SolverControls& b) {
            return a.dt0 == b.dt0 && a.dt_max == b.dt_max && a.dt_min == b.dt_min && a.max_steps == b.max_steps &&
                   a.snapshot_stride == b.snapshot_stride && a.extinction_threshold == b.extinction_threshold &&
                   a.extinction_fraction == b.extinction_fraction && a.growth == b.growth &&
                   a.easy_iterations == b.easy_iterations;
        };
        auto same_rcdp = [](const RescaledControls& a, const RescaledControls& b) {
            return a.dt == b.dt && a.t_max == b.t_max && a.snapshot_stride == b.snapshot_stride &&
                   a.blowup_factor == b.blowup_factor && a.collapse_factor == b.collapse_factor;
        };
        return kind == o.kind && same_cdp(cdp, o.cdp) && same_rcdp(rcdp, o.rcdp) && calibrate == o.calibrate &&
               calibration_t_max == o.calibration_t_max;
    }
};

struct DiagnosticSpec {
    std::string name;
    json params = json::object();

    bool operator==(const DiagnosticSpec&) const = default;
};

struct RunConfig {
    std::string name = "run";
    DomainSpec domain = DomainSpec::ball(1.0, 3, 400);
    double m = 0.5;
    std::vector<InitialSpec> initial;
    FlowSpec flow;
    std::vector<DiagnosticSpec> diagnostics;
    std::string output_dir = "runs";
    std::size_t trajectory_csv_stride = 50;  ///< every k-th snapshot (plus the last) goes to the CSV
    std::uint64_t seed = 0;

    bool operator==(const RunConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

/// JSON has no infinity; unbounded limits are written as null.
inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double read_number(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
    return v.get<double>();
}

template <class T>
T read_value(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: '") + key + "' has the wrong type");
    }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
}

}  // namespace detail

inline json to_json(const InitialSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    switch (s.kind) {
        case InitialSpec::Kind::SeparableProfile:
            j["p"] = s.p;
            j["c"] = s.c;
            break;
        case InitialSpec::Kind::ScaledProfile:
            j["p"] = s.p;
            j["c"] = s.c;
            j["factor"] = s.factor;
            break;
        case InitialSpec::Kind::PerturbedProfile:
            j["p"] = s.p;
            j["c"] = s.c;
            j["epsilon"] = s.epsilon;
            break;
        case InitialSpec::Kind::GaussianBump:
            j["center"] = s.center;
            j["width"] = s.width;
            j["amplitude"] = s.amplitude;
            break;
        case InitialSpec::Kind::NodalFile:
            j["path"] = s.path;
            break;
    }
    return j;
}

inline InitialSpec initial_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("config: each initial datum needs a 'kind'");
    InitialSpec s;
    const std::string kind = detail::read_value<std::string>(j, "kind", "");
    if (kind == "separable_profile") {
        s.kind = InitialSpec::Kind::SeparableProfile;
        detail::reject_unknown(j, {"kind", "p", "c"}, "initial");
    } else if (kind == "scaled_profile") {
        s.kind = InitialSpec::Kind::ScaledProfile;
        detail::reject_unknown(j, {"kind", "p", "c", "factor"}, "initial");
    } else if (kind == "perturbed_profile") {
        s.kind = InitialSpec::Kind::PerturbedProfile;
        detail::reject_unknown(j, {"kind", "p", "c", "epsilon"}, "initial");
    } else if (kind == "gaussian_bump") {
        s.kind = InitialSpec::Kind::GaussianBump;
        detail::reject_unknown(j, {"kind", "center", "width", "amplitude"}, "initial");
    } else if (kind == "nodal_file") {
        s.kind = InitialSpec::Kind::NodalFile;
        detail::reject_unknown(j, {"kind", "path"}, "initial");
    } else {
        throw ConfigError("config: unknown initial kind '" + kind + "'");
    }
    s.p = detail::read_number(j, "p", s.p);
    s.c = detail::read_number(j, "c", s.c);
    s.center = detail::read_number(j, "center", s.center);
    s.width = detail::read_number(j, "width", s.width);
    s.amplitude = detail::read_number(j, "amplitude", s.amplitude);
    s.factor = detail::read_number(j, "factor", s.factor);
    s.epsilon = detail::read_number(j, "epsilon", s.epsilon);
    s.path = detail::read_value<std::string>(j, "path", s.path);
    return s;
}

inline json to_json(const RunConfig& c) {
    json j;
    j["name"] = c.name;
    j["domain"] = {{"kind", c.domain.kind == DomainKind::Interval ? "interval" : "ball"},
                   {"extent", c.domain.extent},
                   {"dimension", c.domain.dimension},
                   {"nodes", c.domain.nodes}};
    j["m"] = c.m;
    j["initial"] = json::array();
    for (const auto& s : c.initial) j["initial"].push_back(to_json(s));
    const auto& k = c.flow.cdp;
    const auto& r = c.flow.rcdp;
    j["flow"] = {{"kind", to_string(c.flow.kind)},
                 {"cdp",
                  {{"dt0", k.dt0},
                   {"dt_max", detail::finite_or_null(k.dt_max)},
                   {"dt_min", k.dt_min},
                   {"max_steps", k.max_steps},
                   {"snapshot_stride", k.snapshot_stride},
                   {"extinction_threshold", k.extinction_threshold},
                   {"extinction_fraction", k.extinction_fraction},
                   {"growth", k.growth},
                   {"easy_iterations", k.easy_iterations}}},
                 {"rcdp",
                  {{"dt", r.dt},
                   {"t_max", r.t_max},
                   {"snapshot_stride", r.snapshot_stride},
                   {"blowup_factor", r.blowup_factor},
                   {"collapse_factor", r.collapse_factor}}},
                 {"calibrate", c.flow.calibrate},
                 {"calibration_t_max", c.flow.calibration_t_max}};
    j["diagnostics"] = json::array();
    for (const auto& d : c.diagnostics) j["diagnostics"].push_back({{"name", d.name}, {"params", d.params}});
    j["output_dir"] = c.output_dir;
    j["trajectory_csv_stride"] = c.trajectory_csv_stride;
    j["seed"] = c.seed;
    return j;
}

/// Parses a configuration. Unknown keys and malformed values raise ConfigError.
inline RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    detail::reject_unknown(j, {"name", "domain", "m", "initial", "flow", "diagnostics", "output_dir",
                               "trajectory_csv_stride", "seed"},
                           "top level");
    RunConfig c;
    c.name = detail::read_value<std::string>(j, "name", c.name);
    if (!j.contains("domain") || !j.contains("m") || !j.contains("initial"))
        throw ConfigError("config: 'domain', 'm' and 'initial' are required");

    const json& d = j.at("domain");
    detail::reject_unknown(d, {"kind", "extent", "dimension", "nodes"}, "domain");
    const std::string kind = detail::read_value<std::string>(d, "kind", "ball");
    const double extent = detail::read_number(d, "extent", 1.0);
    const int nodes = detail::read_value<int>(d, "nodes", 400);
    if (kind == "interval")
        c.domain = DomainSpec::interval(extent, nodes);
    else if (kind == "ball")
        c.domain = DomainSpec::ball(extent, detail::read_value<int>(d, "dimension", 3), nodes);
    else
        throw ConfigError("config: domain kind must be 'interval' or 'ball'");

    c.m = detail::read_number(j, "m", c.m);
    const json& init = j.at("initial");
    if (!init.is_array() || init.empty()) throw ConfigError("config: 'initial' must be a non-empty list");
    for (const auto& e : init) c.initial.push_back(initial_from_json(e));

    if (j.contains("flow")) {
        const json& f = j.at("flow");
        detail::reject_unknown(f, {"kind", "cdp", "rcdp", "calibrate", "calibration_t_max"}, "flow");
        const std::string fk = detail::read_value<std::string>(f, "kind", "cdp");
        if (fk == "cdp")
            c.flow.kind = FlowKind::Cdp;
        else if (fk == "rcdp")
            c.flow.kind = FlowKind::Rcdp;
        else if (fk == "none")
            c.flow.kind = FlowKind::None;
        else
            throw ConfigError("config: flow kind must be 'cdp', 'rcdp' or 'none'");
        if (f.contains("cdp")) {
            const json& k = f.at("cdp");
            detail::reject_unknown(k, {"dt0", "dt_max", "dt_min", "max_steps", "snapshot_stride", "extinction_threshold",
                                       "extinction_fraction", "growth", "easy_iterations"},
                                   "flow.cdp");
            auto& s = c.flow.cdp;
            s.dt0 = detail::read_number(k, "dt0", s.dt0);
            s.dt_max = detail::read_number(k, "dt_max", s.dt_max);
            s.dt_min = detail::read_number(k, "dt_min", s.dt_min);
            s.max_steps = detail::read_value<long>(k, "max_steps", s.max_steps);
            s.snapshot_stride = detail::read_value<int>(k, "snapshot_stride", s.snapshot_stride);
            s.extinction_threshold = detail::read_number(k, "extinction_threshold", s.extinction_threshold);
            s.extinction_fraction = detail::read_number(k, "extinction_fraction", s.extinction_fraction);
            s.growth = detail::read_number(k, "growth", s.growth);
            s.easy_iterations = detail::read_value<int>(k, "easy_iterations", s.easy_iterations);
        }
        if (f.contains("rcdp")) {
            const json& r = f.at("rcdp");
            detail::reject_unknown(r, {"dt", "t_max", "snapshot_stride", "blowup_factor", "collapse_factor"},
                                   "flow.rcdp");
            auto& s = c.flow.rcdp;
            s.dt = detail::read_number(r, "dt", s.dt);
            s.t_max = detail::read_number(r, "t_max", s.t_max);
            s.snapshot_stride = detail::read_value<int>(r, "snapshot_stride", s.snapshot_stride);
            s.blowup_factor = detail::read_number(r, "blowup_factor", s.blowup_factor);
            s.collapse_factor = detail::read_number(r, "collapse_factor", s.collapse_factor);
        }
        c.flow.calibrate = detail::read_value<bool>(f, "calibrate", c.flow.calibrate);
        c.flow.calibration_t_max = detail::read_number(f, "calibration_t_max", c.flow.calibration_t_max);
    }
    if (j.contains("diagnostics")) {
        const json& ds = j.at("diagnostics");
        if (!ds.is_array()) throw ConfigError("config: 'diagnostics' must be a list");
        for (const auto& e : ds) {
            if (!e.is_object() || !e.contains("name")) throw ConfigError("config: each diagnostic needs a 'name'");
            detail::reject_unknown(e, {"name", "params"}, "diagnostics");
            DiagnosticSpec s;
            s.name = detail::read_value<std::string>(e, "name", "");
            if (e.contains("params")) s.params = e.at("params");
            if (!s.params.is_object()) throw ConfigError("config: diagnostic params must be an object");
            c.diagnostics.push_back(std::move(s));
        }
    }
    c.output_dir = detail::read_value<std::string>(j, "output_dir", c.output_dir);
    c.trajectory_csv_stride = detail::read_value<std::size_t>(j, "trajectory_csv_stride", c.trajectory_csv_stride);
    c.seed = detail::read_value<std::uint64_t>(j, "seed", c.seed);
    return c;
}

inline const std::vector<std::string>& diagnostic_names() {
    static const std::vector<std::string> names = {
        "separable_error", "benilan_crandall", "extinction_sandwich", "lp_decay",          "monotonicity",
        "ghp_band",        "representation",   "energy_identities",   "smoothing",         "harnack",
        "spectral",        "entropy_decay",    "linearized_oracle",   "p_limit",           "subcritical_tracks"};
    return names;
}

/// Semantic checks beyond the JSON shape; throws ConfigError.
inline void validate(const RunConfig& c) {
    if (c.name.empty() || c.name.find('/') != std::string::npos) throw ConfigError("config: invalid run name");
    if (!(c.m > 0.0 && c.m < 1.0)) throw ConfigError("config: m must lie in (0,1)");
    if (c.domain.nodes < 16) throw ConfigError("config: at least 16 nodes are required");
    if (!(c.domain.extent > 0.0)) throw ConfigError("config: domain extent must be positive");
    if (c.domain.dimension < 1) throw ConfigError("config: dimension must be at least 1");
    if (c.trajectory_csv_stride == 0) throw ConfigError("config: trajectory_csv_stride must be positive");
    if (c.initial.empty()) throw ConfigError("config: at least one initial datum is required");
    for (const auto& s : c.initial) {
        switch (s.kind) {
            case InitialSpec::Kind::SeparableProfile:
            case InitialSpec::Kind::ScaledProfile:
            case InitialSpec::Kind::PerturbedProfile:
                if (std::abs(s.p * c.m - 1.0) > 1e-12) throw ConfigError("config: profile exponent p must equal 1/m");
                if (!(s.c > 0.0)) throw ConfigError("config: profile constant c must be positive");
                if (s.kind == InitialSpec::Kind::ScaledProfile && !(s.factor >= 0.0))
                    throw ConfigError("config: scale factor must be nonnegative");
                if (s.kind == InitialSpec::Kind::PerturbedProfile && !(std::abs(s.epsilon) < 1.0))
                    throw ConfigError("config: perturbation amplitude must lie in (-1,1)");
                break;
            case InitialSpec::Kind::GaussianBump:
                if (!(s.width > 0.0) || !(s.amplitude >= 0.0))
                    throw ConfigError("config: bump width must be positive and amplitude nonnegative");
                if (c.domain.kind == DomainKind::RadialBall && s.center != 0.0)
                    throw ConfigError("config: bumps on a ball must be centred (radial data)");
                if (c.domain.kind == DomainKind::Interval && !(s.center > 0.0 && s.center < c.domain.extent))
                    throw ConfigError("config: bump centre must lie inside the interval");
                break;
            case InitialSpec::Kind::NodalFile:
                if (!std::filesystem::is_regular_file(s.path))
                    throw ConfigError("config: nodal file '" + s.path + "' does not exist");
                break;
        }
    }
    const auto& k = c.flow.cdp;
    if (!(k.dt0 > 0.0) || !(k.dt_max > 0.0) || !(k.growth >= 1.0) || k.snapshot_stride < 1 || k.max_steps < 1 ||
        !(k.extinction_fraction > 0.0 && k.extinction_fraction < 1.0) || !(k.extinction_threshold > 0.0))
        throw ConfigError("config: invalid cdp solver controls");
    const auto& r = c.flow.rcdp;
    if (!(r.dt > 0.0) || !(r.t_max > 0.0) || r.snapshot_stride < 1 || !(r.blowup_factor > 1.0) ||
        !(r.collapse_factor > 0.0 && r.collapse_factor < 1.0))
        throw ConfigError("config: invalid rcdp solver controls");
    if (c.flow.kind == FlowKind::Rcdp && c.flow.calibrate && !(c.flow.calibration_t_max > 0.0))
        throw ConfigError("config: calibration horizon must be positive");
    const auto& names = diagnostic_names();
    for (const auto& d : c.diagnostics)
        if (std::find(names.begin(), names.end(), d.name) == names.end())
            throw ConfigError("config: unknown diagnostic '" + d.name + "'");
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunConfig c = config_from_json(j);
    validate(c);
    return c;
}

// ---------------------------------------------------------------------------
// Presets

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "separable-gold", "benilan-crandall",     "sandwich-m05",      "sandwich-m07",   "ghp-band-m07",
        "sharp-rate-m05", "linearized-oracle-m05", "p-limit-interval", "subcritical-m01"};
    return names;
}

namespace detail {

inline SolverControls preset_cdp_controls() {
    SolverControls s;
    s.dt0 = 1e-10;
    s.dt_max = 1e-4;
    s.growth = 1.1;
    s.extinction_fraction = 0.005;
    return s;
}

inline InitialSpec bump(double width) {
    InitialSpec s;
    s.kind = InitialSpec::Kind::GaussianBump;
    s.width = width;
    return s;
}

inline std::vector<DiagnosticSpec> trajectory_suite(double m) {
    return {{"monotonicity", {{"tolerance", 1e-6}}},
            {"benilan_crandall", {{"q", {2.0, 4.0}}}},
            {"energy_identities", {{"identity_tolerance", 0.02}, {"hminus1_tolerance", 0.01}}},
            {"representation", {{"strides", {1, 10, 100, 1000}}, {"tolerance", 1e-3}}},
            {"lp_decay", {{"p", 1.0 + m}, {"window", {0.5, 0.95}}, {"tolerance", 0.05}}}};
}

}  // namespace detail

/// Configuration for a named acceptance scenario; unknown names raise ConfigError listing the valid ones.
inline RunConfig preset(const std::string& name) {
    RunConfig c;
    c.name = name;
    c.domain = DomainSpec::ball(1.0, 3, 400);
    c.flow.cdp = detail::preset_cdp_controls();

    if (name == "separable-gold") {
        c.m = 0.5;
        InitialSpec s;
        s.kind = InitialSpec::Kind::SeparableProfile;
        s.p = 2.0;
        s.c = 2.0;  // induced T = 1
        c.initial = {s};
        c.diagnostics = {{"separable_error", {{"horizon_fraction", 0.9}, {"tolerance", 0.01}, {"extinction_tolerance", 0.02}}}};
        for (auto& d : detail::trajectory_suite(c.m)) c.diagnostics.push_back(d);
        c.diagnostics.push_back({"extinction_sandwich", {{"p", 1.5}}});
        c.diagnostics.push_back({"smoothing", {{"p", 2.0}, {"weighted", false}}});
        c.diagnostics.push_back({"harnack", {{"radius", 0.5}, {"start_fraction", 0.1}, {"p", 2.0}, {"kappa_star", 0.1}}});
        c.diagnostics.push_back({"ghp_band", {{"window", {0.5, 0.95}}}});
    } else if (name == "benilan-crandall") {
        c.m = 0.6;
        c.initial = {detail::bump(0.2)};
        c.diagnostics = {{"benilan_crandall", {{"q", {2.0, 4.0}}}},
                         {"monotonicity", {{"tolerance", 1e-6}}},
                         {"smoothing", {{"p", 2.0}, {"weighted", false}}},
                         {"smoothing", {{"p", 2.0}, {"weighted", true}}}};
    } else if (name == "sandwich-m05" || name == "sandwich-m07") {
        c.m = name == "sandwich-m05" ? 0.5 : 0.7;
        c.initial = {detail::bump(0.15)};
        c.diagnostics = {{"extinction_sandwich", {{"p", 1.0 + c.m}}}};
        for (auto& d : detail::trajectory_suite(c.m)) c.diagnostics.push_back(d);
    } else if (name == "ghp-band-m07") {
        c.m = 0.7;
        c.initial = {detail::bump(0.15), detail::bump(0.3)};
        c.diagnostics = {{"ghp_band", {{"window", {0.5, 0.95}}, {"overlap_factor", 3.0}}},
                         {"monotonicity", {{"tolerance", 1e-6}}},
                         {"benilan_crandall", {{"q", {2.0, 4.0}}}}};
    } else if (name == "sharp-rate-m05") {
        c.m = 0.5;
        InitialSpec s;
        s.kind = InitialSpec::Kind::PerturbedProfile;
        s.p = 2.0;
        s.c = 2.0;
        s.epsilon = 0.2;
        c.initial = {s};
        c.flow.kind = FlowKind::Rcdp;
        c.flow.rcdp.dt = 2e-3;
        c.flow.rcdp.t_max = 5.0;
        c.flow.calibrate = true;
        c.flow.calibration_t_max = 14.0;
        c.diagnostics = {{"spectral", {{"k_max", 12}}},
                         {"entropy_decay", {{"tail_fraction", 0.4}, {"tolerance", 0.1}}}};
    } else if (name == "linearized-oracle-m05") {
        c.m = 0.5;
        InitialSpec s;
        s.kind = InitialSpec::Kind::PerturbedProfile;
        s.p = 2.0;
        s.c = 2.0;
        s.epsilon = 0.2;
        c.initial = {s};
        c.flow.kind = FlowKind::None;
        c.diagnostics = {{"spectral", {{"k_max", 12}}},
                         {"linearized_oracle", {{"times", {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}}, {"tolerance", 1e-6}}}};
    } else if (name == "p-limit-interval") {
        c.domain = DomainSpec::interval(1.0, 400);
        c.m = 1.0 / 1.05;
        InitialSpec s;
        s.kind = InitialSpec::Kind::SeparableProfile;
        s.p = 1.05;
        s.c = 9.869604401089358;  // π², the p = 1 limit of c
        c.initial = {s};
        c.flow.kind = FlowKind::None;
        c.diagnostics = {{"p_limit", {{"tolerance", 0.1}}}};
    } else if (name == "subcritical-m01") {
        c.m = 0.1;
        c.initial = {detail::bump(0.3)};
        c.diagnostics = {{"subcritical_tracks",
                          {{"q", {1.1, 2.0}}, {"power_q", {1.0}}, {"horizon_factor", 9.0}, {"tail_fraction", 1.0 / 3.0}}},
                         {"monotonicity", {{"tolerance", 1e-6}}},
                         {"benilan_crandall", {{"q", {2.0, 4.0}}}},
                         {"ghp_band", {{"window", {0.5, 0.95}}}}};
    } else {
        std::string list;
        for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "'; valid presets: " + list);
    }
    return c;
}

}  // namespace fdelab
