#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fdelab/config.hpp"
#include "fdelab/diagnostics.hpp"
#include "fdelab/exponents.hpp"
#include "fdelab/io.hpp"
#include "fdelab/spectral.hpp"
#include "fdelab/stationary.hpp"

namespace fdelab {

enum class Status { Pass, Fail, Measured };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Pass: return "PASS";
        case Status::Fail: return "FAIL";
        case Status::Measured: return "MEASURED";
    }
    return "?";
}

struct DiagnosticResult {
    std::string label;  ///< diagnostic name, suffixed with the datum index on multi-datum runs
    Status status = Status::Measured;
    json report;        ///< name, window, measured values, tolerance, status
    std::vector<std::pair<std::string, Table>> series;
};

struct ExperimentResult {
    RunConfig config;
    std::optional<Grid> grid;
    std::vector<Field> data;
    std::optional<StationaryProfile> profile;  ///< reference profile (matched to the rescaled flow's T when there is one)
    std::optional<SpectralData> spectral;
    std::vector<Trajectory> trajectories;
    std::vector<RescaledTrajectory> rescaled;
    std::vector<Calibration> calibrations;
    std::vector<DiagnosticResult> diagnostics;
    double scheme_constant = std::numeric_limits<double>::quiet_NaN();
    bool solver_failure = false;
    std::string failure_message;

    [[nodiscard]] bool all_pass() const {
        return std::none_of(diagnostics.begin(), diagnostics.end(),
                            [](const DiagnosticResult& d) { return d.status == Status::Fail; });
    }
    /// 0 all PASS, 1 a diagnostic failed, 3 solver failure.
    [[nodiscard]] int exit_code() const { return solver_failure ? 3 : (all_pass() ? 0 : 1); }
};

// ---------------------------------------------------------------------------
// Initial data

inline Field build_initial(const Grid& grid, const InitialSpec& s, double m) {
    const std::size_t n = grid.size();
    Field u(n);
    switch (s.kind) {
        case InitialSpec::Kind::SeparableProfile:
        case InitialSpec::Kind::ScaledProfile:
        case InitialSpec::Kind::PerturbedProfile: {
            if (std::abs(s.p * m - 1.0) > 1e-12) throw ConfigError("initial: profile exponent p must equal 1/m");
            const StationaryProfile pr = solve_lef(grid, s.p, s.c);
            for (std::size_t i = 0; i < n; ++i) {
                double f = 1.0;
                if (s.kind == InitialSpec::Kind::ScaledProfile) f = s.factor;
                if (s.kind == InitialSpec::Kind::PerturbedProfile)
                    f = 1.0 + s.epsilon * std::cos(std::numbers::pi * grid.radial_coordinate(i) / grid.radius());
                u[i] = f * pr.S[i];
            }
            break;
        }
        case InitialSpec::Kind::GaussianBump:
            for (std::size_t i = 0; i < n; ++i) {
                const double d = grid.coords()[i] - s.center;
                u[i] = s.amplitude * std::exp(-d * d / (2.0 * s.width * s.width));
            }
            break;
        case InitialSpec::Kind::NodalFile:
            u = read_nodal_file(s.path, n);
            for (double v : u)
                if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("nodal file: values must be finite and nonnegative");
            break;
    }
    return u;
}

inline bool is_profile_datum(const InitialSpec& s) {
    return s.kind == InitialSpec::Kind::SeparableProfile || s.kind == InitialSpec::Kind::ScaledProfile ||
           s.kind == InitialSpec::Kind::PerturbedProfile;
}

// ---------------------------------------------------------------------------
// Scheme constant

/// C in sup|u/U - 1| <= C (dt + h²), measured on the separable gold run
/// (N=3 ball, 400 nodes, m=1/2, induced T=1) with the preset controls.
inline double reference_scheme_constant() {
    static const double C = [] {
        const Grid grid(DomainSpec::ball(1.0, 3, 400));
        const StationaryProfile pr = solve_lef_for_time(grid, 0.5, 1.0);
        const Trajectory traj = run_cdp(grid, pr.S, 0.5, detail::preset_cdp_controls());
        return calibrate_scheme_constant(grid, traj, pr);
    }();
    return C;
}

// ---------------------------------------------------------------------------
// Diagnostics

namespace detail {

inline double param(const json& p, const char* key, double fallback) {
    return p.contains(key) && p.at(key).is_number() ? p.at(key).get<double>() : fallback;
}

template <class T>
std::vector<T> param_list(const json& p, const char* key, std::vector<T> fallback) {
    if (!p.contains(key)) return fallback;
    try {
        return p.at(key).get<std::vector<T>>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("diagnostic parameter '") + key + "' must be a list");
    }
}

inline std::pair<double, double> param_window(const json& p, std::pair<double, double> fallback) {
    const auto w = param_list<double>(p, "window", {fallback.first, fallback.second});
    if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("diagnostic parameter 'window' must be [lo, hi] with lo < hi");
    return {w[0], w[1]};
}

inline DiagnosticResult make_result(const std::string& label, Status status, json report) {
    report["name"] = label;
    report["status"] = to_string(status);
    return {label, status, std::move(report), {}};
}

inline Status pass_if(bool ok) { return ok ? Status::Pass : Status::Fail; }

inline double max_accepted_dt(const Trajectory& t) {
    return t.step_log.empty() ? 0.0 : *std::max_element(t.step_log.begin(), t.step_log.end());
}

inline const Trajectory& need_trajectory(const ExperimentResult& r, std::size_t k, const std::string& who) {
    if (k >= r.trajectories.size()) throw ConfigError(who + ": needs a cdp flow");
    return r.trajectories[k];
}

}  // namespace detail

inline DiagnosticResult diagnose_separable(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                           const std::string& label) {
    const Grid& grid = *r.grid;
    const InitialSpec& s = r.config.initial[k];
    if (s.kind != InitialSpec::Kind::SeparableProfile) throw ConfigError("separable_error: datum must be a separable profile");
    const Trajectory& traj = detail::need_trajectory(r, k, "separable_error");
    const StationaryProfile pr = solve_lef(grid, s.p, s.c);
    const double hf = detail::param(d.params, "horizon_fraction", 0.9);
    const double tol = detail::param(d.params, "tolerance", 0.01);
    const double ext_tol = detail::param(d.params, "extinction_tolerance", 0.02);
    const double T = pr.induced_T;
    double err = 0.0;
    Table series{{"tau", "sup_relative_error"}, {}};
    for (const auto& st : traj.snapshots) {
        if (st.time > hf * T) break;
        const Field U = separable_solution(pr, st.time);
        double e = 0.0;
        for (std::size_t i = 0; i < U.size(); ++i)
            if (U[i] > 0.0) e = std::max(e, std::abs(st.u[i] / U[i] - 1.0));
        err = std::max(err, e);
        series.rows.push_back({st.time, e});
    }
    const double t_err = traj.reached ? std::abs(traj.extinction_time - T) / T : std::numeric_limits<double>::infinity();
    json rep = {{"window", {0.0, hf * T}},
                {"measured",
                 {{"sup_relative_error", err},
                  {"extinction_time", traj.reached ? json(traj.extinction_time) : json(nullptr)},
                  {"induced_T", T},
                  {"extinction_relative_error", std::isfinite(t_err) ? json(t_err) : json(nullptr)},
                  {"scheme_constant", calibrate_scheme_constant(grid, traj, pr, hf)}}},
                {"tolerance", {{"sup_relative_error", tol}, {"extinction_relative_error", ext_tol}}}};
    auto res = detail::make_result(label, detail::pass_if(err < tol && t_err < ext_tol), rep);
    res.series.emplace_back("error", std::move(series));
    return res;
}

inline DiagnosticResult diagnose_benilan_crandall(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                                  const std::string& label) {
    const Grid& grid = *r.grid;
    const Trajectory& traj = detail::need_trajectory(r, k, "benilan_crandall");
    const double C = detail::param(d.params, "scheme_constant", r.scheme_constant);
    const double h = grid.spacing();
    const double tol = C * (detail::max_accepted_dt(traj) + h * h);
    const auto qs = detail::param_list<double>(d.params, "q", {2.0, 4.0});
    const BenilanCrandallReport bc = benilan_crandall_report(grid, traj, qs, tol);
    json nq = json::array();
    bool ok = bc.pass;
    for (const auto& c : bc.nq) {
        nq.push_back({{"q", c.q}, {"max_ratio", c.max_ratio}, {"pass", c.pass}});
        ok = ok && c.pass;
    }
    json rep = {{"window", "all snapshot pairs with t > 0"},
                {"measured", {{"max_violation", bc.max_violation}, {"nq", nq}, {"scheme_constant", C}}},
                {"tolerance", tol}};
    return detail::make_result(label, detail::pass_if(ok), rep);
}

inline DiagnosticResult diagnose_sandwich(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                          const std::string& label) {
    const Trajectory& traj = detail::need_trajectory(r, k, "extinction_sandwich");
    const double p = detail::param(d.params, "p", 1.0 + r.config.m);
    const SandwichReport s = extinction_sandwich(*r.grid, traj, p);
    json rep = {{"window", "extinction time"},
                {"measured",
                 {{"T", s.T},
                  {"lower", s.lower},
                  {"upper", s.upper},
                  {"upper_widened", s.upper_widened},
                  {"upper_printed_constant", s.upper_printed},
                  {"p", p}}},
                {"tolerance", "upper bound widened by 10%"}};
    return detail::make_result(label, detail::pass_if(s.pass), rep);
}

inline DiagnosticResult diagnose_lp_decay(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                          const std::string& label) {
    const Grid& grid = *r.grid;
    const Trajectory& traj = detail::need_trajectory(r, k, "lp_decay");
    const double m = r.config.m;
    const double p = detail::param(d.params, "p", 1.0 + m);
    const auto [lo, hi] = detail::param_window(d.params, {0.5, 0.95});
    const double tol = detail::param(d.params, "tolerance", 0.05);
    double cp = 0.0;
    try {
        cp = extinction_constants(m, p, grid).cp;
    } catch (const RegimeError&) {
    }
    const DecayFit f = lp_decay_fit(grid, traj, p, lo, hi, cp);
    const bool ok = std::abs(f.fit.slope - f.expected) <= f.fit.ci95() + tol * f.expected;
    json rep = {{"window", {lo * traj.extinction_time, hi * traj.extinction_time}},
                {"measured",
                 {{"slope", f.fit.slope},
                  {"ci95", f.fit.ci95()},
                  {"samples", f.fit.samples},
                  {"expected", f.expected},
                  {"p", p},
                  {"min_lower_bound_ratio", cp > 0.0 ? json(f.min_lower_ratio) : json(nullptr)}}},
                {"tolerance", tol}};
    return detail::make_result(label, detail::pass_if(ok), rep);
}

inline DiagnosticResult diagnose_monotonicity(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                              const std::string& label) {
    const Trajectory& traj = detail::need_trajectory(r, k, "monotonicity");
    const double tol = detail::param(d.params, "tolerance", 1e-6);
    const MonotonicityReport mr = monotonicity_report(*r.grid, traj, tol);
    json rep = {{"window", "consecutive snapshots"},
                {"measured",
                 {{"Q", mr.Q},
                  {"Qstar", mr.Qstar},
                  {"lyapunov", mr.lyapunov},
                  {"l1_phi1", mr.l1_phi1},
                  {"l2_phi1", mr.l2_phi1},
                  {"hminus1", mr.hminus1}}},
                {"tolerance", tol}};
    return detail::make_result(label, detail::pass_if(mr.pass()), rep);
}

inline json band_json(const GhpBand& b) { return {{"inf_lo", b.inf_lo}, {"sup_hi", b.sup_hi}, {"samples", b.times.size()}}; }

inline DiagnosticResult diagnose_ghp(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                     const std::string& label) {
    const Trajectory& traj = detail::need_trajectory(r, k, "ghp_band");
    const auto [lo, hi] = detail::param_window(d.params, {0.5, 0.95});
    const GhpBand b = ghp_band(*r.grid, traj, lo, hi);
    const bool supercritical = critical_exponents(r.config.m, r.grid->dimension()).sobolev == SobolevRegime::Supercritical;
    json rep = {{"window", {lo * traj.extinction_time, hi * traj.extinction_time}}, {"measured", band_json(b)},
                {"tolerance", supercritical ? "0 < inf lo <= sup hi < inf" : "measured only (m <= m_s)"}};
    auto res = detail::make_result(label, supercritical ? detail::pass_if(b.pass) : Status::Measured, rep);
    Table t{{"tau", "lo", "hi"}, {}};
    for (std::size_t i = 0; i < b.times.size(); ++i) t.rows.push_back({b.times[i], b.lo[i], b.hi[i]});
    res.series.emplace_back("band", std::move(t));
    return res;
}

inline DiagnosticResult diagnose_ghp_overlap(const ExperimentResult& r, const DiagnosticSpec& d) {
    const auto [lo, hi] = detail::param_window(d.params, {0.5, 0.95});
    const double factor = detail::param(d.params, "overlap_factor", 3.0);
    std::vector<GhpBand> bands;
    for (const auto& t : r.trajectories) bands.push_back(ghp_band(*r.grid, t, lo, hi));
    bool ok = true;
    double worst_lo = 1.0, worst_hi = 1.0;
    for (std::size_t a = 0; a < bands.size(); ++a)
        for (std::size_t b = a + 1; b < bands.size(); ++b) {
            const BandOverlap o = band_overlap(bands[a], bands[b], factor);
            ok = ok && o.pass;
            worst_lo = std::max(worst_lo, o.lo_ratio);
            worst_hi = std::max(worst_hi, o.hi_ratio);
        }
    json rep = {{"window", {lo, hi}}, {"measured", {{"lo_edge_ratio", worst_lo}, {"hi_edge_ratio", worst_hi}}},
                {"tolerance", factor}};
    return detail::make_result("ghp_overlap", detail::pass_if(ok), rep);
}

inline DiagnosticResult diagnose_representation(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                                const std::string& label) {
    const Trajectory& traj = detail::need_trajectory(r, k, "representation");
    const auto strides = detail::param_list<std::size_t>(d.params, "strides", {1, 10, 100, 1000});
    const double tol = detail::param(d.params, "tolerance", 1e-3);
    const RepresentationReport rr = representation_sandwich(*r.grid, traj, strides, tol);
    json rep = {{"window", {{"strides", strides}}},
                {"measured", {{"lower_violation", rr.lower_violation}, {"upper_violation", rr.upper_violation},
                              {"pairs", rr.pairs}}},
                {"tolerance", tol}};
    return detail::make_result(label, detail::pass_if(rr.pass), rep);
}

inline DiagnosticResult diagnose_energy(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                        const std::string& label) {
    const Trajectory& traj = detail::need_trajectory(r, k, "energy_identities");
    const double it = detail::param(d.params, "identity_tolerance", 0.02);
    const double ht = detail::param(d.params, "hminus1_tolerance", 0.01);
    const EnergyReport e = energy_identities(*r.grid, traj, it, ht);
    json rep = {{"window", "consecutive snapshots"},
                {"measured",
                 {{"energy_identity_error", e.max_energy_identity_error},
                  {"hminus1_identity_error", e.max_hminus1_identity_error},
                  {"chain_ratio", e.max_chain_ratio},
                  {"qstar_ratio", e.max_qstar_ratio},
                  {"pairs", e.pairs}}},
                {"tolerance", {{"energy_identity", it}, {"hminus1_identity", ht}, {"chain_ratio", 1.0}, {"qstar_ratio", 1.0}}}};
    return detail::make_result(label, detail::pass_if(e.pass), rep);
}

inline DiagnosticResult diagnose_smoothing(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                           const std::string& label) {
    const Trajectory& traj = detail::need_trajectory(r, k, "smoothing");
    const double p = detail::param(d.params, "p", 2.0);
    const bool weighted = d.params.value("weighted", false);
    const SmoothingReport s = smoothing_report(*r.grid, traj, p, weighted);
    json rep = {{"window", {0.0, 0.5 * traj.extinction_time}},
                {"measured", {{"sup_kappa", s.sup_kappa}, {"sup_kappa_boundary", s.sup_kappa_boundary},
                              {"theta", s.theta}, {"p", p}, {"weighted", weighted}}},
                {"tolerance", "measured only"}};
    auto res = detail::make_result(label + (weighted ? "_weighted" : ""),
                                   std::isfinite(s.sup_kappa) && std::isfinite(s.sup_kappa_boundary) ? Status::Measured
                                                                                                    : Status::Fail,
                                   rep);
    Table t{{"tau", "kappa", "kappa_boundary"}, {}};
    for (std::size_t i = 0; i < s.times.size(); ++i) t.rows.push_back({s.times[i], s.kappa[i], s.kappa_boundary[i]});
    res.series.emplace_back("kappa", std::move(t));
    return res;
}

inline DiagnosticResult diagnose_harnack(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                         const std::string& label) {
    const Trajectory& traj = detail::need_trajectory(r, k, "harnack");
    const double radius = detail::param(d.params, "radius", 0.5 * r.grid->radius());
    const double start = detail::param(d.params, "start_fraction", 0.1);
    const double p = detail::param(d.params, "p", 2.0);
    const double kappa = detail::param(d.params, "kappa_star", 1.0);
    const double t0 = start * traj.extinction_time;
    std::size_t k0 = 0;
    while (k0 + 1 < traj.snapshots.size() && traj.snapshots[k0].time < t0) ++k0;
    const HarnackReport h = harnack_diagnostic(*r.grid, traj, radius, k0, p, kappa);
    json rep = {{"window", {traj.snapshots[k0].time + 0.5 * h.t_star, traj.snapshots[k0].time + h.t_star}},
                {"measured", {{"t_star", h.t_star}, {"H_p", h.H_p}, {"max_ratio", h.max_ratio}, {"samples", h.samples},
                              {"kappa_star", kappa}}},
                {"tolerance", "finite ratio on a non-empty window"}};
    const bool ok = h.samples > 0 && std::isfinite(h.max_ratio) && h.max_ratio >= 1.0;
    return detail::make_result(label, ok ? Status::Measured : Status::Fail, rep);
}

inline json spectral_json(const SpectralData& s, std::size_t count) {
    std::vector<double> ev(s.eigenvalues.begin(), s.eigenvalues.begin() + std::min(count, s.eigenvalues.size()));
    return {{"eigenvalues", ev},       {"k_p", s.k_p}, {"lambda_p", s.lambda_p}, {"h_omega_margin", s.h_omega_margin},
            {"degenerate", s.degenerate}, {"p", s.p},  {"c", s.c},
            {"sector", "radial (non-radial modes are not computed)"}};
}

inline DiagnosticResult diagnose_spectral(const ExperimentResult& r, const DiagnosticSpec& d) {
    if (!r.spectral) throw ConfigError("spectral: no reference profile");
    const auto kmax = static_cast<std::size_t>(detail::param(d.params, "k_max", 12));
    json rep = {{"window", "radial sector"}, {"measured", spectral_json(*r.spectral, kmax)}, {"tolerance", "measured only"}};
    return detail::make_result("spectral", r.spectral->degenerate ? Status::Fail : Status::Measured, rep);
}

inline DiagnosticResult diagnose_entropy(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                         const std::string& label) {
    if (k >= r.rescaled.size() || r.config.flow.kind != FlowKind::Rcdp) throw ConfigError("entropy_decay: needs an rcdp flow");
    if (!r.spectral || !r.profile) throw ConfigError("entropy_decay: no reference profile");
    const double tail = detail::param(d.params, "tail_fraction", 0.4);
    const double tol = detail::param(d.params, "tolerance", 0.1);
    const EntropySeries s = relative_error_and_entropy(*r.grid, r.rescaled[k], *r.profile, *r.spectral, tail);
    const bool rate_ok = s.fitted_rate > 0.0 && std::abs(s.fitted_rate - s.expected_rate) <= tol * s.expected_rate;
    const double horizon = r.rescaled[k].horizon();
    json rep = {{"window", {(1.0 - tail) * horizon, horizon}},
                {"measured",
                 {{"fitted_rate", s.fitted_rate},
                  {"rate_ci95", s.tail_fit.ci95()},
                  {"expected_rate", s.expected_rate},
                  {"delta_monotone_tail", s.delta_monotone_tail},
                  {"asymptotic_regime", s.asymptotic},
                  {"final_delta", s.delta.back()},
                  {"comparison_constant", s.comparison_constant},
                  {"T", r.rescaled[k].T}}},
                {"tolerance", tol}};
    auto res = detail::make_result(label, detail::pass_if(rate_ok && s.delta_monotone_tail && s.asymptotic), rep);
    Table t{{"t", "delta", "entropy", "linear_entropy"}, {}};
    for (int j = 0; j < r.spectral->k_p; ++j) t.header.push_back("Q" + std::to_string(j + 1));
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        std::vector<double> row{s.times[i], s.delta[i], s.entropy[i], s.linear[i]};
        row.insert(row.end(), s.nonlinear_quotients[i].begin(), s.nonlinear_quotients[i].end());
        t.rows.push_back(std::move(row));
    }
    res.series.emplace_back("entropy", std::move(t));
    return res;
}

inline DiagnosticResult diagnose_linearized(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                            const std::string& label) {
    const Grid& grid = *r.grid;
    const InitialSpec& spec = r.config.initial[k];
    if (!is_profile_datum(spec)) throw ConfigError("linearized_oracle: datum must be profile based");
    const StationaryProfile pr = solve_lef(grid, spec.p, spec.c);
    const SpectralData s = weighted_spectrum(grid, pr, grid.size());
    const auto times = detail::param_list<double>(d.params, "times", {0.0, 0.5, 1.0, 2.0, 4.0, 8.0});
    const double tol = detail::param(d.params, "tolerance", 1e-6);
    if (times.size() < 2) throw ConfigError("linearized_oracle: at least two times are required");

    Field f0(grid.size());
    for (std::size_t i = 0; i < f0.size(); ++i) f0[i] = std::pow(r.data[k][i], r.config.m) - pr.V[i];
    const LinearizedRecord rec = linearized_flow(grid, s, f0, times);
    double identity = 0.0;
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        identity = std::max(identity, std::abs(rec.entropy[i] - rec.entropy_series[i]) / rec.entropy_series[i]);

    Field g0 = f0;
    for (int j = 0; j < s.k_p; ++j) {
        const Field& phi = s.eigenfields[static_cast<std::size_t>(j)];
        const double a = weighted_inner(grid, s, f0, phi);
        for (std::size_t i = 0; i < g0.size(); ++i) g0[i] -= a * phi[i];
    }
    const LinearizedRecord low = linearized_flow(grid, s, g0, times);
    const std::size_t n = times.size();
    const double rate = -(std::log(low.entropy[n - 1]) - std::log(low.entropy[n - 2])) / (times[n - 1] - times[n - 2]);
    const double expected = 2.0 * s.lambda_p / s.p;
    // dE/dt = -(2/p) I at the last time, by a centred difference of the exact series.
    const double tl = times[n - 1], dh = 1e-4;
    const LinearizedRecord fd = linearized_flow(grid, s, g0, {tl - dh, tl, tl + dh});
    const double dEdt = (fd.entropy[2] - fd.entropy[0]) / (2.0 * dh);
    const double fisher_err = std::abs(dEdt + 2.0 / s.p * fd.fisher[1]) / std::abs(dEdt);

    const double rate_err = std::abs(rate - expected) / expected;
    json rep = {{"window", times},
                {"measured",
                 {{"series_identity_error", identity},
                  {"low_mode_free_rate", rate},
                  {"expected_rate", expected},
                  {"rate_relative_error", rate_err},
                  {"fisher_identity_error", fisher_err},
                  {"k_p", s.k_p},
                  {"lambda_p", s.lambda_p}}},
                {"tolerance", tol}};
    auto res = detail::make_result(label, detail::pass_if(identity <= tol && rate_err <= tol), rep);
    Table t{{"t", "entropy", "entropy_series", "fisher", "entropy_low_mode_free"}, {}};
    for (std::size_t i = 0; i < n; ++i)
        t.rows.push_back({rec.times[i], rec.entropy[i], rec.entropy_series[i], rec.fisher[i], low.entropy[i]});
    res.series.emplace_back("entropy", std::move(t));
    return res;
}

inline DiagnosticResult diagnose_p_limit(const ExperimentResult& r, const DiagnosticSpec& d) {
    if (!r.spectral) throw ConfigError("p_limit: no reference profile");
    const double tol = detail::param(d.params, "tolerance", 0.1);
    const auto& ev = r.grid->eigenvalues();
    const double gap = ev[1] - ev[0];
    const double err = std::abs(r.spectral->lambda_p - gap) / gap;
    json rep = {{"window", "spectrum"},
                {"measured", {{"lambda_p", r.spectral->lambda_p}, {"laplacian_gap", gap}, {"relative_error", err},
                              {"p", r.spectral->p}, {"k_p", r.spectral->k_p}}},
                {"tolerance", tol}};
    return detail::make_result("p_limit", detail::pass_if(err <= tol), rep);
}

inline DiagnosticResult diagnose_subcritical(const ExperimentResult& r, std::size_t k, const DiagnosticSpec& d,
                                             const std::string& label) {
    const Trajectory& traj = detail::need_trajectory(r, k, "subcritical_tracks");
    const RescaledTrajectory resc = rescale(traj);
    const auto qs = detail::param_list<double>(d.params, "q", {1.0 + r.config.m, 2.0});
    const auto pqs = detail::param_list<double>(d.params, "power_q", {1.0});
    const double horizon = detail::param(d.params, "horizon_factor", 9.0) * resc.T;
    const double tail = detail::param(d.params, "tail_fraction", 1.0 / 3.0);
    if (resc.horizon() < horizon) throw PreconditionError("subcritical_tracks: rescaled trajectory shorter than the horizon");
    const SubcriticalReport s = subcritical_tracks(*r.grid, resc, r.data[k], qs, pqs, horizon, tail);
    const double pc = critical_exponents(r.config.m, r.grid->dimension()).p_c;
    bool ok = s.energy_bound_holds;
    json tracks = json::array();
    for (const auto& tr : s.tracks) {
        tracks.push_back({{"q", tr.q}, {"on_power", tr.on_power}, {"trend", to_string(tr.trend)},
                          {"increasing_tail", tr.monotone_increasing_tail},
                          {"decreasing_tail", tr.monotone_decreasing_tail}, {"final", tr.values.back()}});
        if (tr.on_power) ok = ok && tr.monotone_decreasing_tail;
        else if (tr.q >= pc) ok = ok && tr.monotone_increasing_tail;
    }
    json rep = {{"window", {(1.0 - tail) * horizon, horizon}},
                {"measured", {{"sup_energy_norm", s.sup_energy_norm}, {"energy_bound", s.energy_bound}, {"tracks", tracks},
                              {"T", resc.T}}},
                {"tolerance", "energy bound; monotone tails"}};
    auto res = detail::make_result(label, detail::pass_if(ok), rep);
    Table t{{"t"}, {}};
    for (const auto& tr : s.tracks) t.header.push_back((tr.on_power ? "wm_L" : "w_L") + format_double(tr.q));
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        std::vector<double> row{s.times[i]};
        for (const auto& tr : s.tracks) row.push_back(tr.values[i]);
        t.rows.push_back(std::move(row));
    }
    res.series.emplace_back("tracks", std::move(t));
    return res;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace detail {

inline bool per_datum(const std::string& name) {
    return name != "spectral" && name != "p_limit";
}

inline bool needs_scheme_constant(const RunConfig& c) {
    for (const auto& d : c.diagnostics)
        if (d.name == "benilan_crandall" && !d.params.contains("scheme_constant")) return true;
    return false;
}

}  // namespace detail

/// Runs the flows and diagnostics of a validated configuration without touching the filesystem.
inline ExperimentResult execute(const RunConfig& config) {
    validate(config);
    ExperimentResult r;
    r.config = config;
    r.grid.emplace(config.domain);
    const Grid& grid = *r.grid;
    const double m = config.m;
    for (const auto& s : config.initial) r.data.push_back(build_initial(grid, s, m));

    try {
        if (config.flow.kind == FlowKind::Cdp) {
            for (const auto& u0 : r.data) {
                r.trajectories.push_back(run_cdp(grid, u0, m, config.flow.cdp));
                if (!r.trajectories.back().reached) {
                    r.solver_failure = true;
                    r.failure_message = "extinction not reached within max_steps";
                }
            }
        } else if (config.flow.kind == FlowKind::Rcdp) {
            for (std::size_t k = 0; k < r.data.size(); ++k) {
                double T = 0.0;
                if (config.flow.calibrate) {
                    const Trajectory guess = run_cdp_to_extinction(grid, r.data[k], m, config.flow.cdp);
                    RescaledControls rc = config.flow.rcdp;
                    rc.t_max = config.flow.calibration_t_max;
                    r.calibrations.push_back(calibrate_extinction_time(grid, r.data[k], m, guess.extinction_time, rc));
                    T = r.calibrations.back().T;
                } else if (is_profile_datum(config.initial[k])) {
                    T = induced_extinction_time(m, config.initial[k].c);
                } else {
                    throw ConfigError("rcdp without calibration needs a profile-based datum");
                }
                r.rescaled.push_back(run_rcdp(grid, r.data[k], m, T, config.flow.rcdp));
            }
        }
    } catch (const StepRejected& e) {
        r.solver_failure = true;
        r.failure_message = e.what();
    } catch (const NotReached& e) {
        r.solver_failure = true;
        r.failure_message = e.what();
    }

    // Reference profile: matched to the rescaled flow's T, else the first profile datum.
    if (!r.rescaled.empty()) {
        r.profile = solve_lef_for_time(grid, m, r.rescaled.front().T);
    } else {
        for (const auto& s : config.initial)
            if (is_profile_datum(s)) {
                r.profile = solve_lef(grid, s.p, s.c);
                break;
            }
    }
    if (r.profile) {
        std::size_t kmax = 12;
        for (const auto& d : config.diagnostics)
            if (d.name == "spectral") kmax = static_cast<std::size_t>(detail::param(d.params, "k_max", 12));
        r.spectral = weighted_spectrum(grid, *r.profile, std::max<std::size_t>(kmax, 3));
    }
    if (r.solver_failure) return r;

    if (detail::needs_scheme_constant(config)) r.scheme_constant = reference_scheme_constant();

    const std::size_t nd = r.data.size();
    for (const auto& d : config.diagnostics) {
        if (!detail::per_datum(d.name)) {
            r.diagnostics.push_back(d.name == "spectral" ? diagnose_spectral(r, d) : diagnose_p_limit(r, d));
            continue;
        }
        for (std::size_t k = 0; k < nd; ++k) {
            const std::string label = nd > 1 ? d.name + "_" + std::to_string(k) : d.name;
            if (d.name == "separable_error") r.diagnostics.push_back(diagnose_separable(r, k, d, label));
            else if (d.name == "benilan_crandall") r.diagnostics.push_back(diagnose_benilan_crandall(r, k, d, label));
            else if (d.name == "extinction_sandwich") r.diagnostics.push_back(diagnose_sandwich(r, k, d, label));
            else if (d.name == "lp_decay") r.diagnostics.push_back(diagnose_lp_decay(r, k, d, label));
            else if (d.name == "monotonicity") r.diagnostics.push_back(diagnose_monotonicity(r, k, d, label));
            else if (d.name == "ghp_band") r.diagnostics.push_back(diagnose_ghp(r, k, d, label));
            else if (d.name == "representation") r.diagnostics.push_back(diagnose_representation(r, k, d, label));
            else if (d.name == "energy_identities") r.diagnostics.push_back(diagnose_energy(r, k, d, label));
            else if (d.name == "smoothing") r.diagnostics.push_back(diagnose_smoothing(r, k, d, label));
            else if (d.name == "harnack") r.diagnostics.push_back(diagnose_harnack(r, k, d, label));
            else if (d.name == "entropy_decay") r.diagnostics.push_back(diagnose_entropy(r, k, d, label));
            else if (d.name == "linearized_oracle") r.diagnostics.push_back(diagnose_linearized(r, k, d, label));
            else if (d.name == "subcritical_tracks") r.diagnostics.push_back(diagnose_subcritical(r, k, d, label));
        }
        if (d.name == "ghp_band" && r.trajectories.size() > 1) r.diagnostics.push_back(diagnose_ghp_overlap(r, d));
    }
    return r;
}

/// Summary record. It holds no timings or paths, so reruns of a config give identical bytes.
inline json summary_json(const ExperimentResult& r) {
    json j;
    j["name"] = r.config.name;
    j["config"] = to_json(r.config);
    j["status"] = r.solver_failure ? "SOLVER_FAILURE" : (r.all_pass() ? "PASS" : "FAIL");
    j["exit_code"] = r.exit_code();
    if (r.solver_failure) j["failure"] = r.failure_message;
    const ExponentTable ex = critical_exponents(r.config.m, r.config.domain.dimension);
    j["regime"] = {{"sobolev", to_string(ex.sobolev)}, {"diffusion", to_string(ex.diffusion)}, {"m_s", ex.m_s},
                   {"m_c", ex.m_c}, {"p_c", ex.p_c}};
    j["trajectories"] = json::array();
    for (const auto& t : r.trajectories) {
        j["trajectories"].push_back(
            {{"reached", t.reached},
             {"extinction_time", t.reached ? json(t.extinction_time) : json(nullptr)},
             {"extinction_bracket", t.reached ? json::array({t.bracket_lo, t.bracket_hi}) : json(nullptr)},
             {"resolution_limited", t.resolution_limited},
             {"accepted_steps", t.step_log.size()},
             {"rejected_steps", t.rejected_steps}});
    }
    j["rescaled"] = json::array();
    for (const auto& t : r.rescaled)
        j["rescaled"].push_back({{"T", t.T}, {"horizon", t.horizon()}, {"blow_up", t.blow_up}, {"collapsed", t.collapsed}});
    j["calibrations"] = json::array();
    for (const auto& c : r.calibrations)
        j["calibrations"].push_back({{"T", c.T}, {"lo", c.lo}, {"hi", c.hi}, {"iterations", c.iterations}});
    if (std::isfinite(r.scheme_constant)) j["scheme_constant"] = r.scheme_constant;
    json fitted = json::object();
    json table = json::array();
    for (const auto& d : r.diagnostics) {
        table.push_back({{"name", d.label}, {"status", to_string(d.status)}});
        const json& m = d.report.at("measured");
        if (m.is_object() && m.contains("slope")) fitted[d.label] = {{"slope", m["slope"]}, {"ci95", m["ci95"]}, {"expected", m["expected"]}};
        if (m.is_object() && m.contains("fitted_rate"))
            fitted[d.label] = {{"rate", m["fitted_rate"]}, {"ci95", m["rate_ci95"]}, {"expected", m["expected_rate"]}};
    }
    j["fitted_exponents"] = fitted;
    j["diagnostics"] = table;
    return j;
}

/// Output root: FDELAB_OUT if set, else the configured directory.
inline std::filesystem::path output_root(const RunConfig& c) {
    if (const char* env = std::getenv("FDELAB_OUT"); env && *env) return env;
    return c.output_dir;
}

/// Fresh run directory <root>/<name>-<UTC timestamp>[-k]; existing directories are never reused.
inline std::filesystem::path make_run_directory(const RunConfig& c) {
    const std::filesystem::path root = output_root(c);
    std::filesystem::create_directories(root);
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    const std::string base = c.name + "-" + stamp;
    std::filesystem::path dir = root / base;
    for (int k = 2; !std::filesystem::create_directory(dir); ++k) dir = root / (base + "-" + std::to_string(k));
    return dir;
}

/// Writes every artifact of a run into `dir` (which must exist).
inline void write_artifacts(const ExperimentResult& r, const std::filesystem::path& dir) {
    const Grid& grid = *r.grid;
    write_json(dir / "config.json", to_json(r.config));
    for (std::size_t k = 0; k < r.trajectories.size(); ++k) {
        const std::string stem = "trajectory_" + std::to_string(k);
        write_csv(dir / (stem + ".csv"), trajectory_table(grid, r.trajectories[k].snapshots, r.config.trajectory_csv_stride));
        json side = trajectory_sidecar(r.trajectories[k]);
        side["config"] = to_json(r.config);
        side["csv_stride"] = r.config.trajectory_csv_stride;
        write_json(dir / (stem + ".json"), side);
    }
    for (std::size_t k = 0; k < r.rescaled.size(); ++k) {
        const std::string stem = "rescaled_" + std::to_string(k);
        write_csv(dir / (stem + ".csv"), trajectory_table(grid, r.rescaled[k].snapshots, r.config.trajectory_csv_stride, "t"));
        json side = rescaled_sidecar(r.rescaled[k]);
        side["config"] = to_json(r.config);
        write_json(dir / (stem + ".json"), side);
    }
    if (r.profile) {
        write_csv(dir / "profile.csv", profile_table(grid, *r.profile));
        write_json(dir / "profile.json", profile_sidecar(*r.profile));
    }
    if (r.spectral) write_json(dir / "spectral.json", spectral_json(*r.spectral, r.spectral->eigenfields.size()));
    if (!r.diagnostics.empty()) {
        std::filesystem::create_directories(dir / "reports");
        for (const auto& d : r.diagnostics) {
            write_json(dir / "reports" / (d.label + ".json"), d.report);
            for (const auto& [suffix, table] : d.series)
                write_csv(dir / "reports" / (d.label + "_" + suffix + ".csv"), table);
        }
    }
    write_json(dir / "summary.json", summary_json(r));
}

}  // namespace fdelab
