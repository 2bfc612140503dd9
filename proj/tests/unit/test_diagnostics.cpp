#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fdelab/diagnostics.hpp"

using namespace fdelab;

namespace {

SolverControls fine_controls() {
    SolverControls c;
    c.dt0 = 1e-10;
    c.dt_max = 1e-4;
    c.growth = 1.1;
    c.extinction_fraction = 0.005;
    return c;
}

Field bump(const Grid& g, double width, double amplitude = 1.0) {
    Field u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.radial_coordinate(i);
        u[i] = amplitude * std::exp(-r * r / (2.0 * width * width));
    }
    return u;
}

// Separable run shared by several tests: m = 1/2, T = 1 on the unit ball.
struct SeparableRun {
    Grid grid{DomainSpec::ball(1.0, 3, 100)};
    StationaryProfile profile = solve_lef_for_time(grid, 0.5, 1.0);
    Trajectory traj = run_cdp_to_extinction(grid, profile.S, 0.5, fine_controls());
};

const SeparableRun& separable() {
    static const SeparableRun run;
    return run;
}

}  // namespace

TEST(Fit, RecoversAnExactLine) {
    const std::vector<double> x = {0, 1, 2, 3, 4}, y = {1, 3, 5, 7, 9};
    const LinearFit f = fit_line(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.slope_stderr, 0.0, 1e-14);
    EXPECT_EQ(f.samples, 5u);
}

TEST(Quotients, AreScaleInvariant) {
    const Grid g(DomainSpec::ball(1.0, 3, 80));
    const Field u = bump(g, 0.2);
    const Field v = bump(g, 0.2, 7.5);
    const Quotients a = rayleigh_quotients(g, u, 0.6), b = rayleigh_quotients(g, v, 0.6);
    EXPECT_NEAR(a.Q, b.Q, 1e-10 * a.Q);
    EXPECT_NEAR(a.Qstar, b.Qstar, 1e-10 * a.Qstar);
    EXPECT_THROW(rayleigh_quotients(g, Field(g.size(), 0.0), 0.6), PreconditionError);
}

TEST(Quotients, QIsBoundedBelowBySobolevPoincare) {
    // Q[u] = ||∇u^m||² / ||u^m||²_{(1+m)/m} >= S^{-2}.
    const Grid g(DomainSpec::ball(1.0, 3, 80));
    const double m = 0.5;
    const double S = sobolev_poincare_constant(g, (1.0 + m) / m);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Field u(g.size());
        for (auto& v : u) v = d(rng);
        EXPECT_GE(rayleigh_quotients(g, u, m).Q * S * S, 1.0 - 1e-10);
    }
}

TEST(Quotients, FirstEigenfunctionPower) {
    // u = φ1^{1/m}: ||∇u^m||² = λ1 and ||u||_{1+m}^{2m} = ||φ1||_{(1+m)/m}^2.
    const Grid g(DomainSpec::interval(1.0, 200));
    const double m = 0.5;
    Field u(g.phi1());
    for (double& v : u) v = v * v;
    const double l = norm(g, g.phi1(), NormKind::lp(3.0));
    EXPECT_NEAR(rayleigh_quotients(g, u, m).Q, g.lambda1() / (l * l), 1e-9 * g.lambda1());
}

TEST(SeparableRun, MonotoneQuantitiesDoNotIncrease) {
    const auto& run = separable();
    const MonotonicityReport r = monotonicity_report(run.grid, run.traj);
    EXPECT_TRUE(r.pass()) << r.worst();
}

TEST(SeparableRun, BenilanCrandallHoldsWithoutViolation) {
    const auto& run = separable();
    const BenilanCrandallReport r = benilan_crandall_report(run.grid, run.traj, {2.0, 4.0}, 1e-6);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(r.max_violation, 1e-6);
    ASSERT_EQ(r.nq.size(), 2u);
    for (const auto& c : r.nq) EXPECT_TRUE(c.pass) << c.q << " " << c.max_ratio;
}

TEST(SeparableRun, EnergyIdentities) {
    const auto& run = separable();
    const EnergyReport r = energy_identities(run.grid, run.traj);
    EXPECT_TRUE(r.pass);
    EXPECT_LT(r.max_energy_identity_error, 0.02);
    EXPECT_LT(r.max_hminus1_identity_error, 0.01);
    EXPECT_LE(r.max_qstar_ratio, 1.0);
    EXPECT_GT(r.pairs, 100u);
}

TEST(SeparableRun, RepresentationSandwich) {
    const auto& run = separable();
    const RepresentationReport r = representation_sandwich(run.grid, run.traj, {1, 10, 100});
    EXPECT_TRUE(r.pass) << r.lower_violation << " " << r.upper_violation;
    EXPECT_GT(r.pairs, 0u);
    EXPECT_THROW(representation_sandwich(run.grid, run.traj.snapshots[0], run.traj.snapshots[1], 0.5), PreconditionError);
    EXPECT_THROW(representation_sandwich(run.grid, run.traj, {0}), DomainError);
}

TEST(SeparableRun, DecaySlopeMatchesTheExtinctionRate) {
    const auto& run = separable();
    const DecayFit d = lp_decay_fit(run.grid, run.traj, 1.5);
    EXPECT_DOUBLE_EQ(d.expected, 2.0);
    EXPECT_NEAR(d.fit.slope, 2.0, 0.04);
}

TEST(SeparableRun, GhpBandIsConstantInTime) {
    // u^m/Φ1 = ((T-t)/T)^{m/(1-m)} V/Φ1, so the normalized band is the range of V/Φ1.
    const auto& run = separable();
    const GhpBand b = ghp_band(run.grid, run.traj);
    EXPECT_TRUE(b.pass);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < run.grid.size(); ++i) {
        const double r = run.profile.V[i] / run.grid.phi1()[i];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    EXPECT_NEAR(b.inf_lo, lo, 0.05 * lo);
    EXPECT_NEAR(b.sup_hi, hi, 0.05 * hi);
    const BandOverlap o = band_overlap(b, b);
    EXPECT_TRUE(o.pass);
    EXPECT_DOUBLE_EQ(o.lo_ratio, 1.0);
}

TEST(SeparableRun, SandwichContainsTheExtinctionTime) {
    const auto& run = separable();
    const SandwichReport s = extinction_sandwich(run.grid, run.traj, 1.5);
    EXPECT_TRUE(s.pass);
    EXPECT_LE(s.lower, s.T);
    EXPECT_LE(s.T, s.upper_widened);
    EXPECT_NEAR(s.upper_printed * 1.5, s.upper, 1e-12 * s.upper);
}

TEST(SeparableRun, SchemeConstantIsFinite) {
    const auto& run = separable();
    const double C = calibrate_scheme_constant(run.grid, run.traj, run.profile);
    EXPECT_GT(C, 0.0);
    EXPECT_LT(C, 1e3);
}

TEST(SeparableRun, RescaledLyapunovFunctionalIsNearlyConstant) {
    const auto& run = separable();
    EXPECT_LT(lyapunov_increase(run.grid, rescale(run.traj)), 1e-6);
}

TEST(SeparableRun, HarnackWindowIsSampled) {
    const auto& run = separable();
    const HarnackReport h = harnack_diagnostic(run.grid, run.traj, 0.5, 1, 2.0, 0.1);
    EXPECT_GT(h.samples, 0u);
    EXPECT_GE(h.max_ratio, 1.0);
    EXPECT_TRUE(std::isfinite(h.max_ratio));
    EXPECT_THROW(harnack_diagnostic(run.grid, run.traj, 1.0, 1, 2.0), DomainError);
    EXPECT_THROW(harnack_diagnostic(run.grid, run.traj, 0.5, run.traj.snapshots.size(), 2.0), DomainError);
}

TEST(Sandwich, ZeroDatumHasZeroExtinctionTime) {
    const Grid g(DomainSpec::ball(1.0, 3, 32));
    const Trajectory t = run_cdp(g, Field(g.size(), 0.0), 0.5);
    const SandwichReport s = extinction_sandwich(g, t, 1.5);
    EXPECT_TRUE(s.pass);
    EXPECT_EQ(s.T, 0.0);
}

TEST(Scaling, DoublingTheDatumScalesExtinctionAndSmoothing) {
    // v(t) = λ u(λ^{m-1} t) solves the same equation, so T[λ u0] = λ^{1-m} T[u0].
    const Grid g(DomainSpec::ball(1.0, 3, 100));
    const double m = 0.6;
    const Trajectory a = run_cdp_to_extinction(g, bump(g, 0.2), m, fine_controls());
    const Trajectory b = run_cdp_to_extinction(g, bump(g, 0.2, 2.0), m, fine_controls());
    EXPECT_NEAR(b.extinction_time / a.extinction_time, std::pow(2.0, 1.0 - m), 0.03 * std::pow(2.0, 1.0 - m));
    const double p = 2.0;
    const SmoothingReport sa = smoothing_report(g, a, p, false), sb = smoothing_report(g, b, p, false);
    EXPECT_NEAR(sa.sup_kappa, sb.sup_kappa, 0.03 * sa.sup_kappa);
    EXPECT_GT(sa.sup_kappa, 0.0);
}

TEST(Entropy, DensityVanishesAtTheProfileAndIsNonnegative) {
    const double p = 2.0, V = 0.7;
    EXPECT_EQ(detail::entropy_density(V, V, p), 0.0);
    for (double x : {0.0, 0.1, 0.5, 0.99, 1.01, 2.0, 10.0}) EXPECT_GE(detail::entropy_density(x * V, V, p), 0.0) << x;
}

TEST(Entropy, DensityIsStableNearTheProfile) {
    // Leading term V^{p+1} (p+1)/2 ε² for v = V(1+ε).
    const double p = 2.0, V = 0.7, eps = 1e-7;
    const double expected = std::pow(V, p + 1.0) * 0.5 * (p + 1.0) * eps * eps;
    EXPECT_NEAR(detail::entropy_density(V * (1.0 + eps), V, p), expected, 1e-6 * expected);
}

TEST(Entropy, RejectsMismatchedExponent) {
    const auto& run = separable();
    const StationaryProfile other = solve_lef(run.grid, 3.0, 1.0);
    const SpectralData s = weighted_spectrum(run.grid, other, 5);
    EXPECT_THROW(relative_error_and_entropy(run.grid, rescale(run.traj), other, s), PreconditionError);
}

TEST(Subcritical, RejectsSupercriticalExponents) {
    const auto& run = separable();
    EXPECT_THROW(subcritical_tracks(run.grid, rescale(run.traj), run.profile.S, {2.0}, {}, 3.0), RegimeError);
}

TEST(Harnack, ConstantFieldHasUnitQuotient) {
    const Grid g(DomainSpec::ball(1.0, 3, 64));
    EXPECT_NEAR(harnack_quotient(g, Field(g.size(), 3.0), 0.5, 2.0, 0.5), 1.0, 1e-12);
    EXPECT_THROW(harnack_quotient(g, Field(g.size(), 0.0), 0.5, 2.0, 0.5), PreconditionError);
}
