#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fdelab/errors.hpp"
#include "fdelab/grid.hpp"
#include "fdelab/stationary.hpp"

namespace fdelab {

struct FlowState {
    double time = 0.0;
    Field u;
};

/// Diagnostics of a single implicit step.
struct StepInfo {
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline double signed_pow(double z, double a) { return z == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(z), a), z); }

}  // namespace detail

/// One implicit Euler step of u_t = Δu^m: returns u⁺ with u⁺ - dt Δ(u⁺)^m = u.
///
/// Damped Newton in z = (u⁺)^m, with u⁺ = sign(z)|z|^{1/m} extended to negative z.
/// The Jacobian diag(|z|^{1/m-1}/m) - dt L is an M-matrix, so each Newton system
/// is solved by the Thomas algorithm without pivoting.
inline FlowState step_implicit(const Grid& grid, const FlowState& state, double dt, double m,
                               StepInfo* info = nullptr) {
    if (!(dt > 0.0)) throw DomainError("step_implicit: dt must be positive");
    if (!(m > 0.0 && m < 1.0)) throw DomainError("step_implicit: m must lie in (0,1)");
    const std::size_t n = grid.size();
    const Field& u = state.u;
    if (u.size() != n) throw DomainError("step_implicit: field size does not match the grid");

    const double umax = sup_norm(u);
    FlowState next{state.time + dt, Field(n, 0.0)};
    if (umax == 0.0) return next;

    const double inv_m = 1.0 / m;
    const Tridiagonal& L = grid.laplacian();
    const double tol = 1e-11 * umax;

    Field z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = std::pow(std::max(u[i], 0.0), m);

    auto residual = [&](const Field& zz, Field& F) {
        const Field lz = L.apply(zz);
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            F[i] = detail::signed_pow(zz[i], inv_m) - dt * lz[i] - u[i];
            r = std::max(r, std::abs(F[i]));
        }
        return r;
    };

    Field F(n), trial(n), Ftrial(n);
    double r = residual(z, F);
    int it = 0;
    for (; it < 60 && r > tol; ++it) {
        Tridiagonal J;
        J.diag.resize(n);
        J.lower.resize(n - 1);
        J.upper.resize(n - 1);
        for (std::size_t i = 0; i < n; ++i)
            J.diag[i] = inv_m * std::pow(std::abs(z[i]), inv_m - 1.0) - dt * L.diag[i];
        for (std::size_t i = 0; i + 1 < n; ++i) {
            J.lower[i] = -dt * L.lower[i];
            J.upper[i] = -dt * L.upper[i];
        }
        const Field delta = solve_thomas(J, F);
        double lambda = 1.0;
        double r_trial = 0.0;
        for (int ls = 0; ls < 30; ++ls) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = z[i] - lambda * delta[i];
            r_trial = residual(trial, Ftrial);
            if (std::isfinite(r_trial) && r_trial < (1.0 - 1e-4 * lambda) * r) break;
            lambda *= 0.5;
        }
        if (!std::isfinite(r_trial) || r_trial >= r) {
            // No descent left: accept only if already at round-off level.
            if (r <= 1e3 * tol) break;
            throw StepRejected("step_implicit: Newton stalled");
        }
        z.swap(trial);
        F.swap(Ftrial);
        r = r_trial;
    }
    if (r > 1e3 * tol || !std::isfinite(r)) throw StepRejected("step_implicit: Newton did not converge");

    const double floor = 1e-14 * umax;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = detail::signed_pow(z[i], inv_m);
        if (v < 0.0) {
            if (-v > floor) throw StepRejected("step_implicit: negative iterate above round-off floor");
            next.u[i] = 0.0;
        } else {
            next.u[i] = v;
        }
    }
    if (info) {
        info->iterations = it;
        info->residual = r;
    }
    return next;
}

// ---------------------------------------------------------------------------
// Flow to extinction

struct SolverControls {
    double dt0 = 1e-5;
    double dt_max = std::numeric_limits<double>::infinity();
    double dt_min = 1e-16;
    long max_steps = 200000;
    int snapshot_stride = 1;
    double extinction_threshold = 1e-10;  ///< relative to ||u0||_inf
    double extinction_fraction = 0.05;    ///< dt <= fraction * (T_est - t)
    double growth = 1.3;
    int easy_iterations = 5;              ///< Newton iterations counted as an easy accept
};

struct Trajectory {
    double m = 0.5;
    std::vector<FlowState> snapshots;
    bool reached = false;
    double extinction_time = std::numeric_limits<double>::quiet_NaN();
    double bracket_lo = std::numeric_limits<double>::quiet_NaN();
    double bracket_hi = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> step_log;  ///< accepted dt sequence
    long rejected_steps = 0;
    bool resolution_limited = false;  ///< stopped because T - t fell below clock resolution
    SolverControls controls;

    [[nodiscard]] const Field& initial() const { return snapshots.front().u; }
};

namespace detail {
inline double extinction_observable(const Grid& grid, std::span<const double> u, double m) {
    return std::pow(norm(grid, u, NormKind::lp(1.0 + m)), 1.0 - m);
}
}  // namespace detail

/// Advances u_t = Δu^m from u0 until ||u||_inf falls below the extinction threshold.
///
/// Step sizes grow on easy accepts and halve on rejects. The extinction time is
/// extrapolated from ||u||_{1+m}^{1-m}, which decays linearly in T - t near
/// extinction; steps are capped by a fraction of the remaining time.
inline Trajectory run_cdp(const Grid& grid, const Field& u0, double m, const SolverControls& controls = {}) {
    if (u0.size() != grid.size()) throw DomainError("run_cdp: field size does not match the grid");
    for (double v : u0)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("run_cdp: initial datum must be finite and nonnegative");
    if (controls.snapshot_stride < 1) throw DomainError("run_cdp: snapshot stride must be positive");

    Trajectory traj;
    traj.m = m;
    traj.controls = controls;
    traj.snapshots.push_back({0.0, u0});
    const double u0max = sup_norm(u0);
    if (u0max == 0.0) {
        traj.reached = true;
        traj.extinction_time = traj.bracket_lo = traj.bracket_hi = 0.0;
        return traj;
    }
    const double threshold = controls.extinction_threshold * u0max;

    FlowState state{0.0, u0};
    double y = detail::extinction_observable(grid, u0, m);
    double y_prev = y, t_prev = 0.0;
    double T_est = std::numeric_limits<double>::infinity();
    double dt = controls.dt0;
    long accepted = 0;

    auto declare_extinction = [&](double T) {
        traj.reached = true;
        traj.extinction_time = T;
        traj.bracket_lo = state.time;
        traj.bracket_hi = state.time + 2.0 * (T - state.time);
    };

    for (long step = 0; step < controls.max_steps; ++step) {
        if (std::isfinite(T_est) && T_est - state.time <= 1e-12 * T_est) {
            // Remaining time is below the resolution of the clock itself.
            traj.resolution_limited = true;
            if (traj.snapshots.back().time < state.time) traj.snapshots.push_back(state);
            declare_extinction(T_est);
            return traj;
        }
        double h = std::min(dt, controls.dt_max);
        if (std::isfinite(T_est)) h = std::min(h, controls.extinction_fraction * (T_est - state.time));
        if (h < controls.dt_min) throw NotReached("run_cdp: step size underflow");

        StepInfo info;
        FlowState next;
        try {
            next = step_implicit(grid, state, h, m, &info);
        } catch (const StepRejected&) {
            ++traj.rejected_steps;
            dt = 0.5 * h;
            continue;
        }
        ++accepted;
        traj.step_log.push_back(h);
        t_prev = state.time;
        y_prev = y;
        state = std::move(next);
        y = detail::extinction_observable(grid, state.u, m);
        if (y < y_prev) T_est = state.time + y * (state.time - t_prev) / (y_prev - y);

        const bool extinct = sup_norm(state.u) < threshold;
        if (extinct || accepted % controls.snapshot_stride == 0) traj.snapshots.push_back(state);
        if (extinct) {
            declare_extinction(std::isfinite(T_est) ? T_est : state.time);
            return traj;
        }
        dt = info.iterations <= controls.easy_iterations ? h * controls.growth : h;
    }
    traj.reached = false;
    return traj;
}

/// Same as run_cdp but throws NotReached when the budget is exhausted.
inline Trajectory run_cdp_to_extinction(const Grid& grid, const Field& u0, double m, const SolverControls& controls = {}) {
    Trajectory traj = run_cdp(grid, u0, m, controls);
    if (!traj.reached) throw NotReached("run_cdp: max_steps exhausted before extinction");
    return traj;
}

// ---------------------------------------------------------------------------
// Rescaled flow

/// Snapshots of w(t,x) = (T/(T-τ))^{1/(1-m)} u(τ,x) on the rescaled clock t = T log(T/(T-τ)).
struct RescaledTrajectory {
    double m = 0.5;
    double T = 0.0;
    std::vector<FlowState> snapshots;  ///< time = rescaled t, u = w
    bool blow_up = false;
    bool collapsed = false;

    /// v = w^m of snapshot k.
    [[nodiscard]] Field v(std::size_t k) const {
        Field out(snapshots[k].u);
        for (double& x : out) x = std::pow(std::max(x, 0.0), m);
        return out;
    }
    [[nodiscard]] double horizon() const { return snapshots.empty() ? 0.0 : snapshots.back().time; }
};

inline double rescaled_time(double T, double tau) { return T * std::log(T / (T - tau)); }
inline double original_time(double T, double t) { return T * (1.0 - std::exp(-t / T)); }

inline RescaledTrajectory rescale(const Trajectory& traj) {
    if (!traj.reached) throw NotReached("rescale: trajectory did not reach extinction");
    const double T = traj.extinction_time;
    if (!(T > 0.0)) throw DomainError("rescale: extinction time must be positive");
    RescaledTrajectory out;
    out.m = traj.m;
    out.T = T;
    for (const auto& s : traj.snapshots) {
        if (s.time >= T) break;
        const double factor = std::pow(T / (T - s.time), 1.0 / (1.0 - traj.m));
        FlowState w{rescaled_time(T, s.time), s.u};
        for (double& x : w.u) x *= factor;
        out.snapshots.push_back(std::move(w));
    }
    return out;
}

/// w at rescaled time t, interpolating the original snapshots linearly in τ.
inline Field sample_rescaled(const Trajectory& traj, double t) {
    if (!traj.reached) throw NotReached("sample_rescaled: trajectory did not reach extinction");
    const double T = traj.extinction_time;
    const double tau = original_time(T, t);
    const auto& s = traj.snapshots;
    if (tau < 0.0 || tau > s.back().time) throw DomainError("sample_rescaled: time outside the recorded range");
    std::size_t k = 1;
    while (k + 1 < s.size() && s[k].time < tau) ++k;
    const double a = (tau - s[k - 1].time) / (s[k].time - s[k - 1].time);
    const double factor = std::pow(T / (T - tau), 1.0 / (1.0 - traj.m));
    Field w(s[k].u.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = factor * ((1.0 - a) * s[k - 1].u[i] + a * s[k].u[i]);
    return w;
}

struct RescaledControls {
    double dt = 1e-3;
    double t_max = 10.0;
    int snapshot_stride = 1;
    double blowup_factor = 1e8;
    double collapse_factor = 1e-8;
    /// Optional early stop: halt once ||w||_{1+m} leaves [ref/(1+band), ref(1+band)].
    double reference_norm = 0.0;
    double reference_band = 0.5;
};

namespace detail {
/// Reaction factor ρ with ρ - 1/ρ = dt c ρ^{-m}; the split step then keeps
/// every discrete stationary profile fixed exactly.
inline double balanced_reaction_factor(double dt, double c, double m) {
    double lo = 1.0, hi = std::exp(dt * c) + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = mid - 1.0 / mid - dt * c * std::pow(mid, -m);
        (g > 0.0 ? hi : lo) = mid;
        if (hi - lo <= 1e-16 * hi) break;
    }
    return 0.5 * (lo + hi);
}
}  // namespace detail

/// Integrates w_t = Δw^m + w/((1-m)T) with a Strang splitting: half reaction,
/// implicit diffusion step, half reaction. Halts with blow_up or collapsed set
/// when ||w||_inf leaves [collapse_factor, blowup_factor] · ||u0||_inf.
inline RescaledTrajectory run_rcdp(const Grid& grid, const Field& u0, double m, double T,
                                   const RescaledControls& controls = {}) {
    if (!(T > 0.0)) throw DomainError("run_rcdp: T must be positive");
    if (!(controls.dt > 0.0)) throw DomainError("run_rcdp: dt must be positive");
    if (u0.size() != grid.size()) throw DomainError("run_rcdp: field size does not match the grid");
    for (double v : u0)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("run_rcdp: initial datum must be finite and nonnegative");

    RescaledTrajectory out;
    out.m = m;
    out.T = T;
    out.snapshots.push_back({0.0, u0});
    const double u0max = sup_norm(u0);
    if (u0max == 0.0) return out;

    const double c = 1.0 / ((1.0 - m) * T);
    const double rho = detail::balanced_reaction_factor(controls.dt, c, m);
    const long steps = static_cast<long>(std::ceil(controls.t_max / controls.dt - 1e-9));
    FlowState state{0.0, u0};
    for (long k = 1; k <= steps; ++k) {
        for (double& x : state.u) x *= rho;
        state = step_implicit(grid, state, controls.dt, m);
        for (double& x : state.u) x *= rho;
        state.time = static_cast<double>(k) * controls.dt;

        const double wmax = sup_norm(state.u);
        out.blow_up = wmax > controls.blowup_factor * u0max;
        out.collapsed = wmax < controls.collapse_factor * u0max;
        bool off_track = false;
        if (controls.reference_norm > 0.0) {
            const double r = norm(grid, state.u, NormKind::lp(1.0 + m)) / controls.reference_norm;
            off_track = r > 1.0 + controls.reference_band || r < 1.0 / (1.0 + controls.reference_band);
            if (off_track) {
                out.blow_up = r > 1.0;
                out.collapsed = r < 1.0;
            }
        }
        const bool halt = out.blow_up || out.collapsed;
        if (halt || k % controls.snapshot_stride == 0 || k == steps) out.snapshots.push_back(state);
        if (halt) break;
    }
    return out;
}

/// Outcome of tuning the extinction time fed to the rescaled flow.
struct Calibration {
    double T = 0.0;
    double lo = 0.0;  ///< largest trial that blew up
    double hi = 0.0;  ///< smallest trial that collapsed
    int iterations = 0;
};

/// Refines the extinction time for the rescaled flow by bisection.
///
/// The rescaled flow has an unstable direction along the profile itself: a T
/// that is too small makes w grow away from S_T, a T that is too large makes it
/// decay. Each trial runs until ||w||_{1+m} leaves a band around ||S_T||_{1+m}
/// (which scales like T^{1/(1-m)}) or reaches the horizon. Requires m > m_s.
inline Calibration calibrate_extinction_time(const Grid& grid, const Field& u0, double m, double T_guess,
                                             RescaledControls controls, double bracket = 0.01,
                                             double rel_tol = 1e-12, int max_iterations = 60) {
    const StationaryProfile unit = solve_lef_for_time(grid, m, 1.0);
    const double unit_norm = norm(grid, unit.S, NormKind::lp(1.0 + m));
    auto outcome = [&](double T) {
        RescaledControls c = controls;
        c.reference_norm = unit_norm * std::pow(T, 1.0 / (1.0 - m));
        c.snapshot_stride = std::numeric_limits<int>::max();
        const RescaledTrajectory r = run_rcdp(grid, u0, m, T, c);
        if (r.blow_up) return 1;
        if (r.collapsed) return -1;
        // Still inside the band at the horizon: the side of the final drift decides.
        return norm(grid, r.snapshots.back().u, NormKind::lp(1.0 + m)) > c.reference_norm ? 1 : -1;
    };

    Calibration cal;
    double lo = T_guess * (1.0 - bracket), hi = T_guess * (1.0 + bracket);
    for (int widen = 0; widen < 20 && outcome(lo) != 1; ++widen) lo *= 1.0 - bracket;
    for (int widen = 0; widen < 20 && outcome(hi) != -1; ++widen) hi *= 1.0 + bracket;
    int it = 0;
    for (; it < max_iterations && hi - lo > rel_tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (outcome(mid) > 0 ? lo : hi) = mid;
    }
    cal.lo = lo;
    cal.hi = hi;
    cal.T = 0.5 * (lo + hi);
    cal.iterations = it;
    return cal;
}

}  // namespace fdelab
