#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fdelab/errors.hpp"
#include "fdelab/exponents.hpp"
#include "fdelab/grid.hpp"
#include "fdelab/solver.hpp"
#include "fdelab/spectral.hpp"
#include "fdelab/stationary.hpp"

namespace fdelab {

namespace detail {

inline Field power(std::span<const double> u, double a) {
    Field out(u.begin(), u.end());
    for (double& x : out) x = x > 0.0 ? std::pow(x, a) : 0.0;
    return out;
}

inline double relative_increase(double before, double after) {
    const double scale = std::abs(before);
    if (scale == 0.0) return after > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return (after - before) / scale;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Least squares

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t samples = 0;

    /// Half width of the 95% confidence interval of the slope (normal approximation).
    [[nodiscard]] double ci95() const { return 1.96 * slope_stderr; }
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2) throw PreconditionError("fit_line: at least two samples are required");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw PreconditionError("fit_line: degenerate abscissae");
    LinearFit f;
    f.samples = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            ss += r * r;
        }
        f.slope_stderr = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

// ---------------------------------------------------------------------------
// Rayleigh quotients and Lyapunov functional

struct Quotients {
    double Q = 0.0;      ///< ||∇u^m||² / ||u||_{1+m}^{2m}
    double Qstar = 0.0;  ///< ||u||_{1+m}^{1+m} / ||u||_{H^{-1}}^{1+m}
};

inline Quotients rayleigh_quotients(const Grid& grid, std::span<const double> u, double m) {
    if (sup_norm(u) == 0.0) throw PreconditionError("rayleigh_quotients: undefined for the zero field");
    const double l = norm(grid, u, NormKind::lp(1.0 + m));
    const double grad = norm(grid, u, NormKind::grad_l2_of_power(m));
    const double hm1 = norm(grid, u, NormKind::hminus1());
    return {grad * grad / std::pow(l, 2.0 * m), std::pow(l, 1.0 + m) / std::pow(hm1, 1.0 + m)};
}

/// F[w] = ½∫|∇w^m|² - (c m/(1+m)) ∫ w^{1+m}.
inline double lyapunov_functional(const Grid& grid, std::span<const double> w, double m, double c) {
    const double grad = norm(grid, w, NormKind::grad_l2_of_power(m));
    return 0.5 * grad * grad - c * m / (1.0 + m) * std::pow(norm(grid, w, NormKind::lp(1.0 + m)), 1.0 + m);
}

// ---------------------------------------------------------------------------
// Monotone quantities

struct MonotonicityReport {
    /// Largest relative increase between consecutive snapshots, per quantity.
    double Q = 0, Qstar = 0, lyapunov = 0, l1_phi1 = 0, l2_phi1 = 0, hminus1 = 0;
    double tolerance = 1e-6;

    [[nodiscard]] double worst() const { return std::max({Q, Qstar, lyapunov, l1_phi1, l2_phi1, hminus1}); }
    [[nodiscard]] bool pass() const { return worst() <= tolerance; }
};

/// Checks the quantities that the flow dissipates. F is evaluated on the
/// rescaled field w = (T/(T-τ))^{1/(1-m)} u with the trajectory's own T.
inline MonotonicityReport monotonicity_report(const Grid& grid, const Trajectory& traj, double tolerance = 1e-6) {
    MonotonicityReport r;
    r.tolerance = tolerance;
    const double m = traj.m;
    const auto& s = traj.snapshots;
    const double T = traj.reached ? traj.extinction_time : std::numeric_limits<double>::quiet_NaN();
    const double c = 1.0 / ((1.0 - m) * T);

    auto lyap = [&](const FlowState& st) {
        const double factor = std::pow(T / (T - st.time), 1.0 / (1.0 - m));
        Field w(st.u);
        for (double& x : w) x *= factor;
        return lyapunov_functional(grid, w, m, c);
    };

    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        const Field& a = s[k].u;
        const Field& b = s[k + 1].u;
        if (sup_norm(b) == 0.0) break;
        const Quotients qa = rayleigh_quotients(grid, a, m);
        const Quotients qb = rayleigh_quotients(grid, b, m);
        r.Q = std::max(r.Q, detail::relative_increase(qa.Q, qb.Q));
        r.Qstar = std::max(r.Qstar, detail::relative_increase(qa.Qstar, qb.Qstar));
        r.l1_phi1 = std::max(r.l1_phi1, detail::relative_increase(norm(grid, a, NormKind::lp_phi1(1.0)),
                                                                  norm(grid, b, NormKind::lp_phi1(1.0))));
        r.l2_phi1 = std::max(r.l2_phi1, detail::relative_increase(norm(grid, a, NormKind::lp_phi1(2.0)),
                                                                  norm(grid, b, NormKind::lp_phi1(2.0))));
        r.hminus1 = std::max(r.hminus1, detail::relative_increase(norm(grid, a, NormKind::hminus1()),
                                                                  norm(grid, b, NormKind::hminus1())));
        if (traj.reached && s[k + 1].time < T)
            r.lyapunov = std::max(r.lyapunov, detail::relative_increase(lyap(s[k]), lyap(s[k + 1])));
    }
    return r;
}

/// Lyapunov functional along a rescaled trajectory; returns the largest relative increase.
inline double lyapunov_increase(const Grid& grid, const RescaledTrajectory& r) {
    const double c = 1.0 / ((1.0 - r.m) * r.T);
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < r.snapshots.size(); ++k)
        worst = std::max(worst, detail::relative_increase(lyapunov_functional(grid, r.snapshots[k].u, r.m, c),
                                                          lyapunov_functional(grid, r.snapshots[k + 1].u, r.m, c)));
    return worst;
}

// ---------------------------------------------------------------------------
// Benilan-Crandall

/// Scheme constant C with sup_x |u/U - 1| <= C (dt + h²) on a separable run,
/// measured over t <= horizon_fraction · T.
inline double calibrate_scheme_constant(const Grid& grid, const Trajectory& traj, const StationaryProfile& profile,
                                        double horizon_fraction = 0.9) {
    const double T = profile.induced_T;
    double err = 0.0, dt = 0.0;
    const auto& s = traj.snapshots;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k].time > horizon_fraction * T) break;
        const Field U = separable_solution(profile, s[k].time);
        for (std::size_t i = 0; i < U.size(); ++i)
            if (U[i] > 0.0) err = std::max(err, std::abs(s[k].u[i] / U[i] - 1.0));
    }
    double t = 0.0;
    for (double h : traj.step_log) {
        if (t > horizon_fraction * T) break;
        dt = std::max(dt, h);
        t += h;
    }
    const double h = grid.spacing();
    return err / (dt + h * h);
}

struct NqCheck {
    double q = 2.0;
    double max_ratio = 0.0;  ///< max_t N_q^{1/q}[w] t (q-1)(1-m) / (q ||u0||_1^{1/q})
    bool pass = false;
};

struct BenilanCrandallReport {
    double max_violation = 0.0;  ///< max [(1-m) log(u_{k+1}/u_k)/log(t_{k+1}/t_k) - 1]_+
    double tolerance = 0.0;
    bool pass = false;
    std::vector<NqCheck> nq;
};

/// Benilan-Crandall check in its integrated form: t^{-1/(1-m)} u(t,x) is
/// non-increasing iff (1-m) log(u_{k+1}/u_k) <= log(t_{k+1}/t_k). The generalized
/// form uses w = (u_t)_+/u with the backward difference u_t ≈ (u_{k+1}-u_k)/Δt.
inline BenilanCrandallReport benilan_crandall_report(const Grid& grid, const Trajectory& traj,
                                                     const std::vector<double>& qs, double tolerance) {
    const auto& s = traj.snapshots;
    if (s.size() < 3) throw PreconditionError("benilan_crandall_report: at least three snapshots are required");
    const double m = traj.m;
    BenilanCrandallReport r;
    r.tolerance = tolerance;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
        if (s[k].time <= 0.0) continue;
        const double lt = std::log(s[k + 1].time / s[k].time);
        for (std::size_t i = 0; i < s[k].u.size(); ++i) {
            const double a = s[k].u[i], b = s[k + 1].u[i];
            if (!(a > 0.0) || !(b > 0.0)) continue;
            r.max_violation = std::max(r.max_violation, (1.0 - m) * std::log(b / a) / lt - 1.0);
        }
    }
    r.pass = r.max_violation <= tolerance;

    const double mass0 = norm(grid, s.front().u, NormKind::lp(1.0));
    for (double q : qs) {
        if (!(q > 1.0)) throw DomainError("benilan_crandall_report: q must exceed 1");
        NqCheck c;
        c.q = q;
        for (std::size_t k = 0; k + 1 < s.size(); ++k) {
            const double dt = s[k + 1].time - s[k].time;
            const double t = s[k + 1].time;
            const Field& u = s[k + 1].u;
            const auto& w = grid.weights();
            double N = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                if (!(u[i] > 0.0)) continue;
                const double rate = std::max(0.0, (u[i] - s[k].u[i]) / dt) / u[i];
                if (rate > 0.0) N += w[i] * std::pow(rate, q) * u[i];
            }
            const double ratio = std::pow(N, 1.0 / q) * t * (q - 1.0) * (1.0 - m) / (q * std::pow(mass0, 1.0 / q));
            c.max_ratio = std::max(c.max_ratio, ratio);
        }
        c.pass = c.max_ratio <= 1.0 + tolerance;
        r.nq.push_back(c);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Smoothing effects

struct SmoothingReport {
    std::vector<double> times;
    std::vector<double> kappa;           ///< ||u(t)||_inf t^{Nϑ} / ||u0||^{a}
    std::vector<double> kappa_boundary;  ///< ||u^m(t)/Φ1||_inf t^{Nϑ+1} / ||u0||^{a}
    double sup_kappa = 0.0;
    double sup_kappa_boundary = 0.0;
    double theta = 0.0;
};

/// Measured smoothing constants over (0, T/2]. Unweighted: ϑ_p and ||u0||_{L^p}^{2pϑ_p};
/// weighted: ϑ_{p,1} and ||u0||_{L^p_Φ1}^{pϑ_{p,1}}.
inline SmoothingReport smoothing_report(const Grid& grid, const Trajectory& traj, double p, bool weighted) {
    const double m = traj.m;
    const int N = grid.dimension();
    SmoothingReport r;
    r.theta = theta(m, N, p, weighted);
    const Field& u0 = traj.initial();
    const double data = weighted ? std::pow(norm(grid, u0, NormKind::lp_phi1(p)), p * r.theta)
                                 : std::pow(norm(grid, u0, NormKind::lp(p)), 2.0 * p * r.theta);
    const double limit = traj.reached ? 0.5 * traj.extinction_time : std::numeric_limits<double>::infinity();
    const Field& phi = grid.phi1();
    for (const auto& st : traj.snapshots) {
        if (st.time <= 0.0) continue;
        if (st.time > limit) break;
        double bdry = 0.0;
        for (std::size_t i = 0; i < st.u.size(); ++i) bdry = std::max(bdry, std::pow(st.u[i], m) / phi[i]);
        const double k = sup_norm(st.u) * std::pow(st.time, N * r.theta) / data;
        const double kb = bdry * std::pow(st.time, N * r.theta + 1.0) / data;
        r.times.push_back(st.time);
        r.kappa.push_back(k);
        r.kappa_boundary.push_back(kb);
        r.sup_kappa = std::max(r.sup_kappa, k);
        r.sup_kappa_boundary = std::max(r.sup_kappa_boundary, kb);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Extinction time

struct SandwichReport {
    double T = 0.0;
    double lower = 0.0;         ///< ||u0||_{L1_Φ1}^{1-m} / c0
    double upper = 0.0;         ///< cp ||u0||_{Lp}^{1-m}
    double upper_widened = 0.0; ///< 1.1 × upper (discrete S2 caveat)
    double upper_printed = 0.0; ///< same bound with cp_printed
    bool pass = false;
};

inline SandwichReport extinction_sandwich(const Grid& grid, const Trajectory& traj, double p) {
    if (!traj.reached) throw NotReached("extinction_sandwich: trajectory did not reach extinction");
    const double m = traj.m;
    SandwichReport r;
    r.T = traj.extinction_time;
    const Field& u0 = traj.initial();
    if (sup_norm(u0) == 0.0) {
        r.pass = r.T == 0.0;
        return r;
    }
    const ExtinctionConstants ec = extinction_constants(m, p, grid);
    r.lower = std::pow(norm(grid, u0, NormKind::lp_phi1(1.0)), 1.0 - m) / ec.c0;
    const double lp = std::pow(norm(grid, u0, NormKind::lp(p)), 1.0 - m);
    r.upper = ec.cp * lp;
    r.upper_widened = 1.1 * r.upper;
    r.upper_printed = ec.cp_printed * lp;
    r.pass = r.lower <= r.T && r.T <= r.upper_widened;
    return r;
}

struct DecayFit {
    LinearFit fit;
    double expected = 0.0;      ///< 1/(1-m)
    double min_lower_ratio = 0.0;  ///< min_t ||u(t)||_p^{1-m} / ((T-t)/cp), >= 1 expected
};

/// Slope of log ||u(t)||_{L^p} against log(T - t) over [lo T, hi T].
inline DecayFit lp_decay_fit(const Grid& grid, const Trajectory& traj, double p, double lo = 0.5, double hi = 0.95,
                             double cp = 0.0) {
    if (!traj.reached) throw NotReached("lp_decay_fit: trajectory did not reach extinction");
    const double T = traj.extinction_time;
    const double m = traj.m;
    std::vector<double> x, y;
    DecayFit d;
    d.expected = 1.0 / (1.0 - m);
    d.min_lower_ratio = std::numeric_limits<double>::infinity();
    for (const auto& st : traj.snapshots) {
        if (st.time >= T) break;
        const double n = norm(grid, st.u, NormKind::lp(p));
        if (cp > 0.0) d.min_lower_ratio = std::min(d.min_lower_ratio, std::pow(n, 1.0 - m) * cp / (T - st.time));
        if (st.time < lo * T || st.time > hi * T) continue;
        x.push_back(std::log(T - st.time));
        y.push_back(std::log(n));
    }
    if (x.size() < 8) throw PreconditionError("lp_decay_fit: fewer than 8 snapshots in the window");
    d.fit = fit_line(x, y);
    return d;
}

// ---------------------------------------------------------------------------
// Global Harnack bands

struct GhpBand {
    std::vector<double> times;
    std::vector<double> lo;
    std::vector<double> hi;
    double inf_lo = 0.0;
    double sup_hi = 0.0;
    bool pass = false;  ///< 0 < inf lo <= sup hi < inf
};

/// Bands of u^m/Φ1 normalized by (T-t)^{m/(1-m)} over [lo_fraction T, hi_fraction T].
inline GhpBand ghp_band(const Grid& grid, const Trajectory& traj, double lo_fraction = 0.5, double hi_fraction = 0.95) {
    if (!traj.reached) throw NotReached("ghp_band: trajectory did not reach extinction");
    const double T = traj.extinction_time;
    const double m = traj.m;
    const Field& phi = grid.phi1();
    GhpBand b;
    b.inf_lo = std::numeric_limits<double>::infinity();
    for (const auto& st : traj.snapshots) {
        if (st.time < lo_fraction * T) continue;
        if (st.time > hi_fraction * T) break;
        const double norm_t = std::pow(T - st.time, m / (1.0 - m));
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = 0; i < st.u.size(); ++i) {
            const double r = std::pow(st.u[i], m) / phi[i] / norm_t;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        b.times.push_back(st.time);
        b.lo.push_back(lo);
        b.hi.push_back(hi);
        b.inf_lo = std::min(b.inf_lo, lo);
        b.sup_hi = std::max(b.sup_hi, hi);
    }
    if (b.times.empty()) throw PreconditionError("ghp_band: no snapshots in the window");
    b.pass = b.inf_lo > 0.0 && std::isfinite(b.sup_hi) && b.inf_lo <= b.sup_hi;
    return b;
}

struct BandOverlap {
    double lo_ratio = 0.0;  ///< max/min of the two lower edges
    double hi_ratio = 0.0;  ///< max/min of the two upper edges
    bool intersect = false;
    bool pass = false;
};

/// Datum-independence: corresponding band edges agree within `factor` and the bands intersect.
inline BandOverlap band_overlap(const GhpBand& a, const GhpBand& b, double factor = 3.0) {
    BandOverlap o;
    o.lo_ratio = std::max(a.inf_lo, b.inf_lo) / std::min(a.inf_lo, b.inf_lo);
    o.hi_ratio = std::max(a.sup_hi, b.sup_hi) / std::min(a.sup_hi, b.sup_hi);
    o.intersect = std::max(a.inf_lo, b.inf_lo) <= std::min(a.sup_hi, b.sup_hi);
    o.pass = a.pass && b.pass && o.intersect && o.lo_ratio <= factor && o.hi_ratio <= factor;
    return o;
}

// ---------------------------------------------------------------------------
// Almost representation formula

struct RepresentationReport {
    /// Violations are divided by the pair scale max_x u^m(t0)/t0^{m/(1-m)}.
    double lower_violation = 0.0;  ///< max (left - middle)_+
    double upper_violation = 0.0;  ///< max (middle - right)_+
    double tolerance = 1e-3;
    std::size_t pairs = 0;
    bool pass = false;
};

/// u^m(t1)/t1^{m/(1-m)} <= (1/(1-m)) G[u(t0)-u(t1)] / (t1^{1/(1-m)} - t0^{1/(1-m)}) <= u^m(t0)/t0^{m/(1-m)}.
inline RepresentationReport representation_sandwich(const Grid& grid, const FlowState& s0, const FlowState& s1,
                                                    double m, double tolerance = 1e-3) {
    const double t0 = s0.time, t1 = s1.time;
    if (!(t0 > 0.0 && t1 > t0)) throw PreconditionError("representation_sandwich: need 0 < t0 < t1");
    const std::size_t n = s0.u.size();
    Field diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = s0.u[i] - s1.u[i];
    const Field g = solve_poisson(grid, diff);
    const double a = m / (1.0 - m), b = 1.0 / (1.0 - m);
    const double denom = (1.0 - m) * (std::pow(t1, b) - std::pow(t0, b));
    double scale = 0.0, lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double left = std::pow(s1.u[i], m) / std::pow(t1, a);
        const double right = std::pow(s0.u[i], m) / std::pow(t0, a);
        const double mid = g[i] / denom;
        scale = std::max(scale, right);
        lo = std::max(lo, left - mid);
        hi = std::max(hi, mid - right);
    }
    RepresentationReport r;
    r.tolerance = tolerance;
    r.pairs = 1;
    if (scale > 0.0) {
        r.lower_violation = lo / scale;
        r.upper_violation = hi / scale;
    }
    r.pass = r.lower_violation <= tolerance && r.upper_violation <= tolerance;
    return r;
}

/// Runs the sandwich over every pair (k, k+s) of snapshots with 0 < t_k < t_{k+s} < T, for each stride s.
inline RepresentationReport representation_sandwich(const Grid& grid, const Trajectory& traj,
                                                    const std::vector<std::size_t>& strides, double tolerance = 1e-3) {
    RepresentationReport out;
    out.tolerance = tolerance;
    const auto& s = traj.snapshots;
    for (std::size_t stride : strides) {
        if (stride == 0) throw DomainError("representation_sandwich: stride must be positive");
        for (std::size_t k = 0; k + stride < s.size(); ++k) {
            if (s[k].time <= 0.0) continue;
            if (sup_norm(s[k + stride].u) == 0.0) break;
            const RepresentationReport r = representation_sandwich(grid, s[k], s[k + stride], traj.m, tolerance);
            out.lower_violation = std::max(out.lower_violation, r.lower_violation);
            out.upper_violation = std::max(out.upper_violation, r.upper_violation);
            ++out.pairs;
        }
    }
    out.pass = out.pairs > 0 && out.lower_violation <= tolerance && out.upper_violation <= tolerance;
    return out;
}

// ---------------------------------------------------------------------------
// Rescaled flow near the profile

struct EntropySeries {
    std::vector<double> times;
    std::vector<double> delta;            ///< sup |v/V - 1|
    std::vector<double> entropy;          ///< nonlinear entropy 𝓔[v]
    std::vector<double> linear;           ///< E[v - V]
    std::vector<std::vector<double>> nonlinear_quotients;  ///< Q_k[v], k = 1..k_p
    LinearFit tail_fit;                   ///< log 𝓔 against t over the tail window
    double fitted_rate = 0.0;             ///< -slope
    double expected_rate = 0.0;           ///< 2 λ_p / p
    bool delta_monotone_tail = false;
    bool asymptotic = false;              ///< δ < 1 somewhere on the horizon
    double comparison_constant = 0.0;     ///< smallest c̄ making the entropy comparison hold once δ < 1/(2p)
};

namespace detail {
/// V^{p+1} [x^{p+1} - 1 - ((p+1)/p)(x^p - 1)] with x = v/V, computed without cancellation at x ≈ 1.
inline double entropy_density(double v, double V, double p) {
    if (!(V > 0.0)) return 0.0;
    if (!(v > 0.0)) return std::pow(V, p + 1.0) * (-1.0 + (p + 1.0) / p);
    const double y = std::log(v / V);
    const double g = std::expm1((p + 1.0) * y) - (p + 1.0) / p * std::expm1(p * y);
    return std::pow(V, p + 1.0) * g;
}
}  // namespace detail

inline double nonlinear_entropy(const Grid& grid, std::span<const double> v, const StationaryProfile& profile) {
    const auto& w = grid.weights();
    double e = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) e += w[i] * detail::entropy_density(v[i], profile.V[i], profile.p);
    return e;
}

/// Relative error, nonlinear and linear entropies, and the decay fit over the
/// tail window (the last `tail_fraction` of the horizon, excluding entropies
/// below `entropy_floor`).
inline EntropySeries relative_error_and_entropy(const Grid& grid, const RescaledTrajectory& r,
                                                const StationaryProfile& profile, const SpectralData& spectral,
                                                double tail_fraction = 0.4, double entropy_floor = 1e-13) {
    const double p = profile.p;
    if (std::abs(1.0 / p - r.m) > 1e-12) throw PreconditionError("relative_error_and_entropy: profile exponent does not match m");
    EntropySeries s;
    s.expected_rate = 2.0 * spectral.lambda_p / p;
    const auto& w = grid.weights();
    const std::size_t n = grid.size();
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        const Field v = r.v(k);
        double delta = 0.0;
        Field f(n), diff_p(n);
        for (std::size_t i = 0; i < n; ++i) {
            delta = std::max(delta, std::abs(v[i] / profile.V[i] - 1.0));
            f[i] = v[i] - profile.V[i];
            diff_p[i] = r.snapshots[k].u[i] - profile.S[i];
        }
        const double ent = nonlinear_entropy(grid, v, profile);
        const double lin = linear_entropy(grid, spectral, f);
        std::vector<double> quot;
        for (int j = 0; j < spectral.k_p; ++j) {
            double a = 0.0;
            for (std::size_t i = 0; i < n; ++i) a += w[i] * diff_p[i] * spectral.eigenfields[static_cast<std::size_t>(j)][i];
            quot.push_back(ent > 0.0 ? std::abs(a) / std::sqrt(ent) : 0.0);
        }
        s.times.push_back(r.snapshots[k].time);
        s.delta.push_back(delta);
        s.entropy.push_back(ent);
        s.linear.push_back(lin);
        s.nonlinear_quotients.push_back(std::move(quot));
        if (delta < 1.0) s.asymptotic = true;
        if (delta > 0.0 && delta < 1.0 / (2.0 * p) && lin > 0.0 && ent > 0.0) {
            const double ratio = ent / (0.5 * (p + 1.0) * lin);
            const double needed = (std::sqrt(std::max(ratio, 1.0 / ratio)) - 1.0) / delta;
            s.comparison_constant = std::max(s.comparison_constant, needed);
        }
    }
    const double horizon = r.horizon();
    std::vector<double> x, y;
    bool monotone = true;
    double prev_delta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.times.size(); ++k) {
        if (s.times[k] < (1.0 - tail_fraction) * horizon) continue;
        if (s.delta[k] > prev_delta) monotone = false;
        prev_delta = s.delta[k];
        if (s.entropy[k] > entropy_floor) {
            x.push_back(s.times[k]);
            y.push_back(std::log(s.entropy[k]));
        }
    }
    s.delta_monotone_tail = monotone;
    if (x.size() >= 3) {
        s.tail_fit = fit_line(x, y);
        s.fitted_rate = -s.tail_fit.slope;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Subcritical tracks

enum class Trend { ToZero, Bounded, ToInfinity };

inline const char* to_string(Trend t) {
    switch (t) {
        case Trend::ToZero: return "to-zero";
        case Trend::Bounded: return "bounded";
        case Trend::ToInfinity: return "to-infinity";
    }
    return "?";
}

struct TrackReport {
    double q = 0.0;
    bool on_power = false;  ///< track of ||w^m||_q instead of ||w||_q
    std::vector<double> values;
    Trend trend = Trend::Bounded;
    bool monotone_increasing_tail = false;
    bool monotone_decreasing_tail = false;
};

struct SubcriticalReport {
    std::vector<double> times;
    std::vector<TrackReport> tracks;
    double sup_energy_norm = 0.0;  ///< sup_t ||w||_{1+m} over τ >= T/3
    double energy_bound = 0.0;     ///< c_* Q*[u0]^{2/(1-m²)} T^{1/(1-m)}
    bool energy_bound_holds = false;
};

/// Trend of ||w||_q (and ||w^m||_q) over the last `tail_fraction` of the
/// rescaled window [0, horizon]. `u0` and T enter the explicit energy bound
/// ||w||_{1+m} <= c_* Q*[u0]^{2/(1-m²)} T^{1/(1-m)}, valid once τ >= T/3,
/// with c_* = ((2/(1+m)) 3^{2/(1-m)})^{1/(1+m)}.
inline SubcriticalReport subcritical_tracks(const Grid& grid, const RescaledTrajectory& r, const Field& u0,
                                            const std::vector<double>& q_list, const std::vector<double>& power_q_list,
                                            double horizon, double tail_fraction = 1.0 / 3.0) {
    const double m = r.m;
    const ExponentTable ex = critical_exponents(m, grid.dimension());
    if (ex.sobolev == SobolevRegime::Supercritical) throw RegimeError("subcritical_tracks: m must not exceed m_s");
    const double T = r.T;
    SubcriticalReport rep;
    const Quotients q0 = rayleigh_quotients(grid, u0, m);
    const double cstar = std::pow(2.0 / (1.0 + m) * std::pow(3.0, 2.0 / (1.0 - m)), 1.0 / (1.0 + m));
    rep.energy_bound = cstar * std::pow(q0.Qstar, 2.0 / (1.0 - m * m)) * std::pow(T, 1.0 / (1.0 - m));
    const double t_third = rescaled_time(T, T / 3.0);

    for (double q : q_list) rep.tracks.push_back({q, false, {}, Trend::Bounded, false, false});
    for (double q : power_q_list) rep.tracks.push_back({q, true, {}, Trend::Bounded, false, false});
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        const double t = r.snapshots[k].time;
        if (t > horizon) break;
        const Field& w = r.snapshots[k].u;
        rep.times.push_back(t);
        if (t >= t_third) rep.sup_energy_norm = std::max(rep.sup_energy_norm, norm(grid, w, NormKind::lp(1.0 + m)));
        const Field wm = detail::power(w, m);
        for (auto& tr : rep.tracks) tr.values.push_back(norm(grid, tr.on_power ? wm : w, NormKind::lp(tr.q)));
    }
    rep.energy_bound_holds = rep.sup_energy_norm <= rep.energy_bound;

    const double start = (1.0 - tail_fraction) * horizon;
    for (auto& tr : rep.tracks) {
        bool inc = true, dec = true;
        double first = std::numeric_limits<double>::quiet_NaN(), last = first, prev = first;
        for (std::size_t k = 0; k < rep.times.size(); ++k) {
            if (rep.times[k] < start) continue;
            const double v = tr.values[k];
            if (std::isnan(first)) first = v;
            if (!std::isnan(prev)) {
                if (v < prev) inc = false;
                if (v > prev) dec = false;
            }
            prev = last = v;
        }
        tr.monotone_increasing_tail = inc;
        tr.monotone_decreasing_tail = dec;
        // Tail windows cover a fixed rescaled span, so a factor of 1.5 either way separates the trends.
        if (inc && last > 1.5 * first)
            tr.trend = Trend::ToInfinity;
        else if (dec && last < first / 1.5)
            tr.trend = Trend::ToZero;
        else
            tr.trend = Trend::Bounded;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Intrinsic Harnack ratio

struct HarnackReport {
    double t_star = 0.0;  ///< κ_* R^{2-N(1-m)} ||u(t0)||_{L1(B_R)}^{1-m}
    double H_p = 0.0;
    double max_ratio = 0.0;  ///< sup_B u / inf_B u over [t0 + t_*/2, t0 + t_*]
    std::size_t samples = 0;
};

namespace detail {
inline std::vector<std::size_t> concentric_ball(const Grid& grid, double R) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.radial_coordinate(i) <= R) idx.push_back(i);
    return idx;
}
}  // namespace detail

/// Quotient H_p(f, centre, R) = [|B| (∫_B f^p)^{1/p} / (|B|^{1/p} ∫_B f)]^{2pϑ_p}.
inline double harnack_quotient(const Grid& grid, std::span<const double> f, double R, double p, double m) {
    const auto idx = detail::concentric_ball(grid, R);
    const auto& w = grid.weights();
    double vol = 0.0, lp = 0.0, l1 = 0.0;
    for (std::size_t i : idx) {
        vol += w[i];
        lp += w[i] * std::pow(std::abs(f[i]), p);
        l1 += w[i] * std::abs(f[i]);
    }
    if (l1 == 0.0) throw PreconditionError("harnack_quotient: zero mass in the ball");
    const double th = p * 2.0 - grid.dimension() * (1.0 - m) > 0.0 ? theta(m, grid.dimension(), p, false) : 0.0;
    return std::pow(vol * std::pow(lp, 1.0 / p) / (std::pow(vol, 1.0 / p) * l1), 2.0 * p * th);
}

/// Samples the sup/inf ratio over [t0 + t_*/2, t0 + t_*]; `samples` is zero when that window lies past extinction.
inline HarnackReport harnack_diagnostic(const Grid& grid, const Trajectory& traj, double radius, std::size_t k0,
                                        double p, double kappa_star = 1.0) {
    if (!(radius > 0.0) || radius >= grid.radius() - grid.spacing())
        throw DomainError("harnack_diagnostic: the ball must stay inside the domain");
    if (k0 >= traj.snapshots.size()) throw DomainError("harnack_diagnostic: snapshot index out of range");
    const auto idx = detail::concentric_ball(grid, radius);
    if (idx.empty()) throw DomainError("harnack_diagnostic: ball contains no nodes");
    const double m = traj.m;
    const auto& w = grid.weights();
    const FlowState& s0 = traj.snapshots[k0];
    double mass = 0.0;
    for (std::size_t i : idx) mass += w[i] * s0.u[i];
    HarnackReport h;
    h.t_star = kappa_star * std::pow(radius, 2.0 - grid.dimension() * (1.0 - m)) * std::pow(mass, 1.0 - m);
    h.H_p = harnack_quotient(grid, s0.u, radius, p, m);
    for (const auto& st : traj.snapshots) {
        if (st.time < s0.time + 0.5 * h.t_star) continue;
        if (st.time > s0.time + h.t_star || sup_norm(st.u) == 0.0) break;
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i : idx) {
            lo = std::min(lo, st.u[i]);
            hi = std::max(hi, st.u[i]);
        }
        if (lo > 0.0) h.max_ratio = std::max(h.max_ratio, hi / lo);
        ++h.samples;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Energy identities

struct EnergyReport {
    double max_energy_identity_error = 0.0;  ///< (1/(1+m)) d/dt ||u||^{1+m} = -||∇u^m||², relative
    double max_hminus1_identity_error = 0.0; ///< d/dt ||u||²_{H^-1} = -2 ||u||^{1+m}, relative
    double max_chain_ratio = 0.0;            ///< max over triples of lhs/rhs of each chain inequality
    double max_qstar_ratio = 0.0;            ///< max ||u(t)||_{H^-1} / ((2Q*[u0])^{1/(1-m)} (T-t)^{1/(1-m)})
    std::size_t pairs = 0;
    bool pass = false;
};

/// Discrete checks of the energy and H^{-1} identities between consecutive
/// snapshots (endpoint-averaged right-hand sides), the energy chain on
/// consecutive triples, and the H^{-1} extinction bound.
inline EnergyReport energy_identities(const Grid& grid, const Trajectory& traj, double identity_tol = 0.02,
                                      double hminus1_tol = 0.01) {
    const auto& s = traj.snapshots;
    if (s.size() < 3) throw PreconditionError("energy_identities: at least three snapshots are required");
    const double m = traj.m;
    EnergyReport r;
    const std::size_t n = s.size();
    std::vector<double> energy(n), grad2(n), hm1(n);
    for (std::size_t k = 0; k < n; ++k) {
        energy[k] = std::pow(norm(grid, s[k].u, NormKind::lp(1.0 + m)), 1.0 + m);
        const double g = norm(grid, s[k].u, NormKind::grad_l2_of_power(m));
        grad2[k] = g * g;
        const double h = norm(grid, s[k].u, NormKind::hminus1());
        hm1[k] = h * h;
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (energy[k + 1] == 0.0) break;
        const double dt = s[k + 1].time - s[k].time;
        const double lhs = (energy[k + 1] - energy[k]) / ((1.0 + m) * dt);
        const double rhs = -0.5 * (grad2[k] + grad2[k + 1]);
        r.max_energy_identity_error = std::max(r.max_energy_identity_error, std::abs(lhs - rhs) / std::abs(rhs));
        const double lh = (hm1[k + 1] - hm1[k]) / dt;
        const double rh = -(energy[k] + energy[k + 1]);
        r.max_hminus1_identity_error = std::max(r.max_hminus1_identity_error, std::abs(lh - rh) / std::abs(rh));
        ++r.pairs;
    }
    for (std::size_t k = 0; k + 2 < n; ++k) {
        if (energy[k + 2] == 0.0) break;
        const double t0 = s[k].time, t1 = s[k + 1].time, t2 = s[k + 2].time;
        const double a = grad2[k + 2];
        const double b = energy[k + 1] / (2.0 * m * (t2 - t1));
        const double c = hm1[k] / (2.0 * m * (1.0 + m) * (t2 - t1) * (t1 - t0));
        r.max_chain_ratio = std::max({r.max_chain_ratio, a / b, b / c});
    }
    if (traj.reached) {
        const double T = traj.extinction_time;
        const Quotients q0 = rayleigh_quotients(grid, s.front().u, m);
        for (std::size_t k = 0; k < n; ++k) {
            if (s[k].time >= T) break;
            const double bound = std::pow(2.0 * q0.Qstar, 1.0 / (1.0 - m)) * std::pow(T - s[k].time, 1.0 / (1.0 - m));
            r.max_qstar_ratio = std::max(r.max_qstar_ratio, std::sqrt(hm1[k]) / bound);
        }
    }
    r.pass = r.max_energy_identity_error <= identity_tol && r.max_hminus1_identity_error <= hminus1_tol &&
             r.max_chain_ratio <= 1.0 && r.max_qstar_ratio <= 1.0;
    return r;
}

}  // namespace fdelab
