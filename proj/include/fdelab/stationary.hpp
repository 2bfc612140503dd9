#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include <boost/numeric/odeint.hpp>

#include "fdelab/errors.hpp"
#include "fdelab/grid.hpp"

namespace fdelab {

/// Positive solution V of -ΔV = c V^p with zero Dirichlet data, together with
/// the separable-variables profile S = V^p of u_t = Δu^m (m = 1/p).
struct StationaryProfile {
    Field V;
    Field S;
    double p = 1.0;
    double c = 0.0;
    double m = 1.0;
    double induced_T = std::numeric_limits<double>::infinity();  ///< 1/((1-m)c)
    double residual = 0.0;  ///< sup-norm of -L V - c V^p
};

/// Extinction time of the separable solution built from a profile with constant c.
inline double induced_extinction_time(double m, double c) { return 1.0 / ((1.0 - m) * c); }

/// Constant c whose separable solution extinguishes at time T.
inline double lef_constant_for_time(double m, double T) { return 1.0 / ((1.0 - m) * T); }

namespace detail {

/// First zero of W'' + (N-1)/r W' + W^p = 0, W(0) = 1, W'(0) = 0.
inline std::optional<double> lane_emden_first_zero(int N, double p) {
    using State = std::array<double, 2>;
    namespace odeint = boost::numeric::odeint;
    const double n = N;
    auto rhs = [n, p](const State& y, State& dy, double r) {
        const double w = y[0];
        dy[0] = y[1];
        dy[1] = -(n - 1.0) / r * y[1] - (w > 0.0 ? std::pow(w, p) : 0.0);
    };

    // Taylor start away from the coordinate singularity: W = 1 - r²/(2N) + p r⁴/(8N(N+2)).
    double r = 1e-4;
    State y{1.0 - r * r / (2.0 * n) + p * std::pow(r, 4) / (8.0 * n * (n + 2.0)),
            -r / n + p * std::pow(r, 3) / (2.0 * n * (n + 2.0))};
    auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
    stepper.initialize(y, r, 1e-3);
    const double r_max = 1e4;
    while (stepper.current_time() < r_max) {
        const auto span = stepper.do_step(rhs);
        const State& cur = stepper.current_state();
        if (cur[0] <= 0.0) {
            double lo = span.first, hi = span.second;
            State mid{};
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double rm = 0.5 * (lo + hi);
                stepper.calc_state(rm, mid);
                (mid[0] > 0.0 ? lo : hi) = rm;
            }
            return 0.5 * (lo + hi);
        }
        // Profiles of supercritical exponents decay without ever crossing zero.
        if (cur[1] >= 0.0 && cur[0] > 0.0 && stepper.current_time() > 10.0) return std::nullopt;
    }
    return std::nullopt;
}

/// Dense evaluation of W on requested radii (sorted ascending, all < first zero).
inline Field lane_emden_values(int N, double p, const Field& radii) {
    using State = std::array<double, 2>;
    namespace odeint = boost::numeric::odeint;
    const double n = N;
    auto rhs = [n, p](const State& y, State& dy, double r) {
        dy[0] = y[1];
        dy[1] = -(n - 1.0) / r * y[1] - (y[0] > 0.0 ? std::pow(y[0], p) : 0.0);
    };
    const double r0 = 1e-4;
    Field out(radii.size());
    State y{1.0 - r0 * r0 / (2.0 * n) + p * std::pow(r0, 4) / (8.0 * n * (n + 2.0)),
            -r0 / n + p * std::pow(r0, 3) / (2.0 * n * (n + 2.0))};
    auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
    stepper.initialize(y, r0, 1e-3);
    std::size_t k = 0;
    while (k < radii.size() && radii[k] <= r0) {
        out[k] = 1.0 - radii[k] * radii[k] / (2.0 * n);
        ++k;
    }
    State s{};
    while (k < radii.size()) {
        stepper.do_step(rhs);
        while (k < radii.size() && radii[k] <= stepper.current_time()) {
            stepper.calc_state(radii[k], s);
            out[k] = s[0];
            ++k;
        }
    }
    return out;
}

}  // namespace detail

/// Solves -ΔV = c V^p on the grid's domain (interval: symmetric about the midpoint).
///
/// A radial shooting with W(0) = 1 locates the first zero ρ of the normalized
/// Lane-Emden profile W; the homogeneity V = a W(ρ r / R), a = (ρ²/(cR²))^{1/(p-1)},
/// fits it to the domain and the requested c. The result is then polished by
/// Newton's method on the discrete equation. p = 1 returns the first eigenpair.
inline StationaryProfile solve_lef(const Grid& grid, double p, double c) {
    if (!(p >= 1.0)) throw DomainError("solve_lef: p must be at least 1");
    const int N = grid.dimension();
    const std::size_t n = grid.size();
    StationaryProfile out;
    out.p = p;
    out.m = 1.0 / p;

    if (p == 1.0) {
        out.V = grid.phi1();
        out.S = out.V;
        out.c = grid.lambda1();
        out.induced_T = std::numeric_limits<double>::infinity();
        const Field lv = grid.apply_laplacian(out.V);
        for (std::size_t i = 0; i < n; ++i)
            out.residual = std::max(out.residual, std::abs(-lv[i] - out.c * out.V[i]));
        return out;
    }
    if (!(c > 0.0)) throw DomainError("solve_lef: c must be positive");
    if (N >= 3 && p >= (N + 2.0) / (N - 2.0))
        throw NoSolution("solve_lef: no positive solution for p >= (N+2)/(N-2) on a ball");

    const auto rho = detail::lane_emden_first_zero(N, p);
    if (!rho) throw NoSolution("solve_lef: shooting profile has no zero");
    const double R = grid.radius();
    const double a = std::pow(*rho * *rho / (c * R * R), 1.0 / (p - 1.0));

    // Radii in ascending order for the dense ODE evaluation.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return grid.radial_coordinate(x) < grid.radial_coordinate(y); });
    Field radii(n);
    for (std::size_t k = 0; k < n; ++k) radii[k] = grid.radial_coordinate(order[k]) * *rho / R;
    const Field w = detail::lane_emden_values(N, p, radii);
    Field V(n);
    for (std::size_t k = 0; k < n; ++k) V[order[k]] = a * std::max(w[k], 0.0);

    // Newton polish on F(V) = -L V - c V^p.
    const Tridiagonal& L = grid.laplacian();
    auto residual = [&](const Field& v) {
        Field F = L.apply(v);
        for (std::size_t i = 0; i < n; ++i) F[i] = -F[i] - c * std::pow(std::max(v[i], 0.0), p);
        return F;
    };
    for (int it = 0; it < 50; ++it) {
        const Field F = residual(V);
        Tridiagonal J;
        J.diag.resize(n);
        J.lower.resize(n - 1);
        J.upper.resize(n - 1);
        for (std::size_t i = 0; i < n; ++i)
            J.diag[i] = -L.diag[i] - c * p * std::pow(std::max(V[i], 0.0), p - 1.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            J.lower[i] = -L.lower[i];
            J.upper[i] = -L.upper[i];
        }
        const Field delta = solve_thomas(J, F);
        for (std::size_t i = 0; i < n; ++i) V[i] -= delta[i];
        if (sup_norm(delta) <= 1e-14 * sup_norm(V)) break;
    }
    for (double v : V)
        if (!(v > 0.0)) throw NoSolution("solve_lef: discrete profile lost positivity");

    out.V = std::move(V);
    out.c = c;
    out.S.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.S[i] = std::pow(out.V[i], p);
    out.induced_T = induced_extinction_time(out.m, c);
    out.residual = sup_norm(residual(out.V));
    return out;
}

/// Profile whose separable solution extinguishes exactly at time T.
inline StationaryProfile solve_lef_for_time(const Grid& grid, double m, double T) {
    return solve_lef(grid, 1.0 / m, lef_constant_for_time(m, T));
}

/// ((T-t)/T)^{1/(1-m)} S with T = induced_T.
inline Field separable_solution(const StationaryProfile& profile, double t) {
    const double T = profile.induced_T;
    if (!std::isfinite(T)) throw DomainError("separable_solution: degenerate profile (p = 1)");
    if (t < 0.0 || t > T) throw DomainError("separable_solution: t must lie in [0, T]");
    const double factor = std::pow((T - t) / T, 1.0 / (1.0 - profile.m));
    Field u(profile.S);
    for (double& v : u) v *= factor;
    return u;
}

}  // namespace fdelab
