// Acceptance run: executes the shipped presets with their diagnostics stripped and
// recomputes every criterion from library calls at the pinned tolerances.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "fdelab/fdelab.hpp"

using namespace fdelab;

namespace {

struct Run {
    ExperimentResult result;
    double seconds = 0.0;
};

std::map<std::string, Run>& cache() {
    static std::map<std::string, Run> runs;
    return runs;
}

const Run& run_preset(const std::string& name) {
    auto& runs = cache();
    if (auto it = runs.find(name); it != runs.end()) return it->second;
    RunConfig c = preset(name);
    c.diagnostics.clear();
    const auto t0 = std::chrono::steady_clock::now();
    Run r{execute(c), 0.0};
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.result.solver_failure) throw Error(name + ": " + r.result.failure_message);
    return runs.emplace(name, std::move(r)).first->second;
}

// Presets whose flow stores original-time trajectories.
const std::vector<std::string>& trajectory_presets() {
    static const std::vector<std::string> names = {"separable-gold", "benilan-crandall", "sandwich-m05",
                                                   "sandwich-m07", "ghp-band-m07", "subcritical-m01"};
    return names;
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_step(const Trajectory& t) {
    double dt = 0.0;
    for (double h : t.step_log) dt = std::max(dt, h);
    return dt;
}

double scheme_constant() {
    const Run& r = run_preset("separable-gold");
    const InitialSpec& s = r.result.config.initial.front();
    return calibrate_scheme_constant(*r.result.grid, r.result.trajectories.front(), solve_lef(*r.result.grid, s.p, s.c));
}

Verdict separable_gold() {
    const Run& r = run_preset("separable-gold");
    const Grid& g = *r.result.grid;
    const InitialSpec& s = r.result.config.initial.front();
    const StationaryProfile pr = solve_lef(g, s.p, s.c);
    const Trajectory& traj = r.result.trajectories.front();
    const double T = pr.induced_T;
    double err = 0.0;
    for (const auto& st : traj.snapshots) {
        if (st.time > 0.9 * T) break;
        const Field U = separable_solution(pr, st.time);
        for (std::size_t i = 0; i < U.size(); ++i) err = std::max(err, std::abs(st.u[i] / U[i] - 1.0));
    }
    const double t_err = std::abs(traj.extinction_time - T) / T;
    return {err < 0.01 && t_err < 0.02 && r.seconds < 60.0,
            fmt("sup rel err %.3e (< 1e-2), T %.6f vs %.6f (rel %.2e < 2e-2), runtime %.1fs (< 60s)", err,
                traj.extinction_time, T, t_err, r.seconds)};
}

Verdict benilan_crandall() {
    const double C = scheme_constant();
    bool ok = true;
    double worst_violation = 0.0, worst_nq = 0.0;
    std::size_t count = 0;
    for (const auto& name : trajectory_presets()) {
        const Run& r = run_preset(name);
        const Grid& g = *r.result.grid;
        for (const auto& traj : r.result.trajectories) {
            const double h = g.spacing();
            const double tol = C * (max_step(traj) + h * h);
            const BenilanCrandallReport bc = benilan_crandall_report(g, traj, {2.0, 4.0}, tol);
            ok = ok && bc.pass;
            worst_violation = std::max(worst_violation, bc.max_violation);
            for (const auto& c : bc.nq) {
                ok = ok && c.pass;
                worst_nq = std::max(worst_nq, c.max_ratio);
            }
            ++count;
        }
    }
    return {ok, fmt("C = %.3f, %zu trajectories, max violation %.3e, max N_q ratio %.4f (<= 1)", C, count,
                    worst_violation, worst_nq)};
}

Verdict extinction_sandwich_check() {
    bool ok = true;
    std::string detail;
    for (const char* name : {"sandwich-m05", "sandwich-m07"}) {
        const Run& r = run_preset(name);
        const double m = r.result.config.m;
        const SandwichReport s = extinction_sandwich(*r.result.grid, r.result.trajectories.front(), 1.0 + m);
        const bool pass = s.lower <= s.T && s.T <= 1.1 * s.upper;
        ok = ok && pass;
        detail += fmt("m=%.1f: %.4f <= T=%.4f <= %.4f; ", m, s.lower, s.T, 1.1 * s.upper);
    }
    return {ok, detail};
}

Verdict decay_exponent() {
    bool ok = true;
    std::string detail;
    for (const char* name : {"sandwich-m05", "sandwich-m07"}) {
        const Run& r = run_preset(name);
        const double m = r.result.config.m;
        const DecayFit f = lp_decay_fit(*r.result.grid, r.result.trajectories.front(), 1.0 + m, 0.5, 0.95);
        const double rel = std::abs(f.fit.slope - f.expected) / f.expected;
        ok = ok && rel <= 0.05;
        detail += fmt("m=%.1f: slope %.4f vs %.4f (rel %.2e <= 5e-2); ", m, f.fit.slope, f.expected, rel);
    }
    return {ok, detail};
}

Verdict monotonicity() {
    bool ok = true;
    double worst = 0.0;
    std::size_t count = 0;
    for (const auto& name : trajectory_presets()) {
        const Run& r = run_preset(name);
        for (const auto& traj : r.result.trajectories) {
            const MonotonicityReport m = monotonicity_report(*r.result.grid, traj, 1e-6);
            ok = ok && m.pass();
            worst = std::max(worst, m.worst());
            ++count;
        }
    }
    return {ok, fmt("%zu trajectories, worst relative increase %.3e (<= 1e-6)", count, worst)};
}

Verdict ghp_overlap() {
    const Run& r = run_preset("ghp-band-m07");
    const Grid& g = *r.result.grid;
    const GhpBand a = ghp_band(g, r.result.trajectories.at(0), 0.5, 0.95);
    const GhpBand b = ghp_band(g, r.result.trajectories.at(1), 0.5, 0.95);
    const BandOverlap o = band_overlap(a, b, 3.0);
    return {o.pass, fmt("bands [%.4f, %.4f] and [%.4f, %.4f], edge ratios %.3f / %.3f (<= 3)", a.inf_lo, a.sup_hi,
                        b.inf_lo, b.sup_hi, o.lo_ratio, o.hi_ratio)};
}

Verdict sharp_rate() {
    const Run& r = run_preset("sharp-rate-m05");
    const ExperimentResult& e = r.result;
    const EntropySeries s = relative_error_and_entropy(*e.grid, e.rescaled.front(), *e.profile, *e.spectral, 0.4);
    const double rel = std::abs(s.fitted_rate - s.expected_rate) / s.expected_rate;
    return {rel <= 0.1 && s.delta_monotone_tail && r.seconds < 300.0,
            fmt("rate %.4f vs 2 lambda_p/p = %.4f (rel %.2e <= 0.1), delta monotone on tail: %s, runtime %.1fs (< 300s)",
                s.fitted_rate, s.expected_rate, rel, s.delta_monotone_tail ? "yes" : "no", r.seconds)};
}

Verdict linearized_oracle() {
    const Run& r = run_preset("linearized-oracle-m05");
    const Grid& g = *r.result.grid;
    const InitialSpec& spec = r.result.config.initial.front();
    const StationaryProfile pr = solve_lef(g, spec.p, spec.c);
    const SpectralData s = weighted_spectrum(g, pr, g.size());
    const std::vector<double> times = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0};

    Field f0(g.size());
    for (std::size_t i = 0; i < f0.size(); ++i) f0[i] = std::pow(r.result.data.front()[i], r.result.config.m) - pr.V[i];
    const LinearizedRecord rec = linearized_flow(g, s, f0, times);
    double identity = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        identity = std::max(identity, std::abs(rec.entropy[i] - rec.entropy_series[i]) / rec.entropy_series[i]);

    for (int k = 0; k < s.k_p; ++k) {
        const Field& phi = s.eigenfields[static_cast<std::size_t>(k)];
        const double a = weighted_inner(g, s, f0, phi);
        for (std::size_t i = 0; i < f0.size(); ++i) f0[i] -= a * phi[i];
    }
    const LinearizedRecord low = linearized_flow(g, s, f0, times);
    const std::size_t n = times.size();
    const double rate = -std::log(low.entropy[n - 1] / low.entropy[n - 2]) / (times[n - 1] - times[n - 2]);
    const double expected = 2.0 * s.lambda_p / s.p;
    const double rel = std::abs(rate - expected) / expected;
    return {identity <= 1e-10 && rel <= 1e-6,
            fmt("series identity %.2e (<= 1e-10), low-mode-free rate %.8f vs %.8f (rel %.2e <= 1e-6)", identity, rate,
                expected, rel)};
}

Verdict p_limit() {
    const Run& r = run_preset("p-limit-interval");
    const auto& ev = r.result.grid->eigenvalues();
    const double gap = ev[1] - ev[0];
    const double lp = r.result.spectral->lambda_p;
    const double rel = std::abs(lp - gap) / gap;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return {rel <= 0.1, fmt("lambda_p %.4f vs discrete gap %.4f (rel %.2e <= 0.1); 3 pi^2 = %.4f", lp, gap, rel, 3.0 * pi2)};
}

Verdict subcritical() {
    const Run& r = run_preset("subcritical-m01");
    const Grid& g = *r.result.grid;
    const RescaledTrajectory resc = rescale(r.result.trajectories.front());
    const double horizon = 9.0 * resc.T;
    const SubcriticalReport s = subcritical_tracks(g, resc, r.result.data.front(), {2.0}, {1.0}, horizon, 1.0 / 3.0);
    const TrackReport& l2 = s.tracks.at(0);
    const TrackReport& wm = s.tracks.at(1);
    const bool ok = s.energy_bound_holds && l2.monotone_increasing_tail && wm.monotone_decreasing_tail &&
                    wm.trend == Trend::ToZero && r.seconds < 300.0;
    return {ok, fmt("sup ||w||_{1+m} %.4f <= bound %.4f: %s; ||w||_2 increasing on tail: %s; ||w^m||_1 decreasing "
                    "to zero: %s (final %.3e); runtime %.1fs (< 300s)",
                    s.sup_energy_norm, s.energy_bound, s.energy_bound_holds ? "yes" : "no",
                    l2.monotone_increasing_tail ? "yes" : "no",
                    wm.monotone_decreasing_tail && wm.trend == Trend::ToZero ? "yes" : "no", wm.values.back(),
                    r.seconds)};
}

Verdict representation() {
    bool ok = true;
    std::string detail;
    for (const char* name : {"separable-gold", "sandwich-m05", "sandwich-m07"}) {
        const Run& r = run_preset(name);
        const RepresentationReport rep =
            representation_sandwich(*r.result.grid, r.result.trajectories.front(), {1, 10, 100, 1000}, 1e-3);
        ok = ok && rep.pass;
        detail += fmt("%s: %zu pairs, violations %.2e / %.2e; ", name, rep.pairs, rep.lower_violation, rep.upper_violation);
    }
    return {ok, detail + "tolerance 1e-3"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"separable gold standard", separable_gold},
        {"benilan-crandall", benilan_crandall},
        {"extinction sandwich", extinction_sandwich_check},
        {"L^{1+m} extinction exponent", decay_exponent},
        {"monotonicity suite", monotonicity},
        {"GHP band overlap", ghp_overlap},
        {"sharp rate", sharp_rate},
        {"linearized oracle", linearized_oracle},
        {"p -> 1 spectral limit", p_limit},
        {"subcritical dichotomy", subcritical},
        {"representation sandwich", representation},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::printf("criterion %2zu %-28s %s  %s\n", i + 1, criteria[i].first.c_str(), v.pass ? "PASS" : "FAIL",
                    v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
