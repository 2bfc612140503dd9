#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fdelab/grid.hpp"

using namespace fdelab;

namespace {

constexpr double kPi = std::numbers::pi;

// First zero of J0, bracketed by sign change and bisected with the standard Bessel function.
double bessel_j0_first_zero() {
    double lo = 2.0, hi = 3.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::cyl_bessel_j(0.0, mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Field random_field(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Field f(n);
    for (auto& v : f) v = d(rng);
    return f;
}

}  // namespace

TEST(Grid, RejectsInvalidSpecs) {
    EXPECT_THROW(Grid(DomainSpec::interval(1.0, 15)), DomainError);
    EXPECT_THROW(Grid(DomainSpec::interval(0.0, 32)), DomainError);
    EXPECT_THROW(Grid(DomainSpec::ball(1.0, 0, 32)), DomainError);
    EXPECT_THROW(Grid(DomainSpec::ball(-1.0, 3, 32)), DomainError);
    EXPECT_NO_THROW(Grid(DomainSpec::interval(1.0, 16)));
}

TEST(Grid, IntervalFirstEigenvalueNearPiSquared) {
    const Grid g(DomainSpec::interval(1.0, 400));
    EXPECT_NEAR(g.lambda1(), kPi * kPi, 1e-3 * kPi * kPi);
}

TEST(Grid, BallFirstEigenvalueMatchesClosedForms) {
    // N=3: λ1 = π²/R². N=2: λ1 = j_{0,1}²/R².
    const Grid g3(DomainSpec::ball(1.0, 3, 400));
    EXPECT_NEAR(g3.lambda1(), kPi * kPi, 1e-3 * kPi * kPi);
    const double j = bessel_j0_first_zero();
    const Grid g2(DomainSpec::ball(2.0, 2, 400));
    EXPECT_NEAR(g2.lambda1(), j * j / 4.0, 1e-3 * j * j / 4.0);
}

TEST(Grid, EigenvalueConvergesAtSecondOrder) {
    // Interval: h = 1/(n+1); ball: h = 1/(n+1/2). Both node lists halve h.
    const std::vector<std::pair<DomainSpec, std::vector<int>>> cases = {
        {DomainSpec::interval(1.0, 0), {49, 99, 199}}, {DomainSpec::ball(1.0, 3, 0), {50, 100, 200}}};
    for (auto [spec, nodes] : cases) {
        std::vector<double> err;
        for (int n : nodes) {
            spec.nodes = n;
            err.push_back(std::abs(Grid(spec).lambda1() - kPi * kPi));
        }
        EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.15);
        EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.15);
    }
}

TEST(Grid, WeightsSumToDomainMeasure) {
    // The cells tile r <= n h; the half cell next to the Dirichlet node at R = (n + 1/2) h is excluded.
    const Grid g(DomainSpec::ball(1.5, 3, 64));
    const double covered = 64.0 * 1.5 / 64.5;
    EXPECT_NEAR(g.measure(), 4.0 / 3.0 * kPi * std::pow(covered, 3), 1e-12);
    const Grid i(DomainSpec::interval(2.0, 64));
    EXPECT_NEAR(i.measure(), 2.0 * 64.0 / 65.0, 1e-12);
    EXPECT_NEAR(unit_sphere_area(2), 2.0 * kPi, 1e-14);
    EXPECT_NEAR(unit_sphere_area(3), 4.0 * kPi, 1e-14);
}

TEST(Grid, LaplacianIsSymmetricAndNegativeDefinite) {
    std::mt19937 rng(7);
    for (const auto& spec : {DomainSpec::interval(1.0, 40), DomainSpec::ball(1.0, 3, 40), DomainSpec::ball(1.0, 2, 40)}) {
        const Grid g(spec);
        for (int trial = 0; trial < 20; ++trial) {
            const Field f = random_field(g.size(), rng), h = random_field(g.size(), rng);
            const double a = inner(g, g.apply_laplacian(f), h);
            const double b = inner(g, f, g.apply_laplacian(h));
            EXPECT_NEAR(a, b, 1e-10 * (std::abs(a) + 1.0));
            EXPECT_LT(inner(g, g.apply_laplacian(f), f), 0.0);
            EXPECT_NEAR(dirichlet_energy(g, f), -inner(g, g.apply_laplacian(f), f), 1e-9 * dirichlet_energy(g, f));
        }
    }
}

TEST(Grid, FirstEigenpairInvariants) {
    for (const auto& spec : {DomainSpec::interval(1.0, 200), DomainSpec::ball(1.0, 3, 200)}) {
        const Grid g(spec);
        const Field& phi = g.phi1();
        for (double v : phi) EXPECT_GT(v, 0.0);
        EXPECT_NEAR(inner(g, phi, phi), 1.0, 1e-12);
        const Field Lphi = g.apply_laplacian(phi);
        for (std::size_t i = 0; i < phi.size(); ++i) EXPECT_NEAR(Lphi[i], -g.lambda1() * phi[i], 1e-8 * g.lambda1() * sup_norm(phi));
        const auto& ef = g.eigenfields();
        for (std::size_t a = 0; a < ef.size(); ++a)
            for (std::size_t b = 0; b < ef.size(); ++b) EXPECT_NEAR(inner(g, ef[a], ef[b]), a == b ? 1.0 : 0.0, 1e-10);
    }
}

TEST(Grid, PoissonMatchesGreenFunctionOnTheInterval) {
    // On (0,1) the three-point Green function agrees with G(x,y) = min(x,y)(1 - max(x,y)) at the nodes.
    const Grid g(DomainSpec::interval(1.0, 31));
    const auto& x = g.coords();
    for (std::size_t j : {0ul, 7ul, 15ul, 30ul}) {
        Field delta(g.size(), 0.0);
        delta[j] = 1.0 / g.weights()[j];
        const Field G = solve_poisson(g, delta);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double exact = std::min(x[i], x[j]) * (1.0 - std::max(x[i], x[j]));
            EXPECT_NEAR(G[i], exact, 1e-13);
        }
    }
}

TEST(Grid, PoissonOfPositiveSourceIsPositive) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (const auto& spec : {DomainSpec::interval(1.0, 64), DomainSpec::ball(1.0, 3, 64)}) {
        const Grid g(spec);
        Field f(g.size(), 0.0);
        f[g.size() / 2] = d(rng) + 0.1;
        const Field u = solve_poisson(g, f);
        for (double v : u) EXPECT_GT(v, 0.0);
    }
}

TEST(Grid, PoissonRejectsNonFiniteSource) {
    const Grid g(DomainSpec::interval(1.0, 32));
    Field f(g.size(), 1.0);
    f[3] = std::nan("");
    EXPECT_THROW(solve_poisson(g, f), DomainError);
}

TEST(Grid, PoissonOfQuadraticBallSolution) {
    // -Δu = 2N on the unit ball has u = 1 - r²; the scheme is exact up to O(h²).
    const Grid g(DomainSpec::ball(1.0, 3, 200));
    const Field f(g.size(), 6.0);
    const Field u = solve_poisson(g, f);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.coords()[i];
        EXPECT_NEAR(u[i], 1.0 - r * r, 2e-4);
    }
}

TEST(Grid, NormsOfSimpleFields) {
    const Grid g(DomainSpec::ball(1.0, 3, 100));
    const Field one(g.size(), 1.0);
    EXPECT_NEAR(norm(g, one, NormKind::lp(1.0)), g.measure(), 1e-12);
    EXPECT_NEAR(norm(g, one, NormKind::lp(2.0)), std::sqrt(g.measure()), 1e-12);
    // ||φ1||_{H^-1}² = ||φ1||²/λ1.
    EXPECT_NEAR(norm(g, g.phi1(), NormKind::hminus1()), 1.0 / std::sqrt(g.lambda1()), 1e-12);
    // ||∇ (φ1^{1/m})^m||² = λ1.
    Field f(g.phi1());
    for (double& v : f) v = std::pow(v, 2.0);
    EXPECT_NEAR(norm(g, f, NormKind::grad_l2_of_power(0.5)), std::sqrt(g.lambda1()), 1e-10);
    Field neg(g.size(), -1.0);
    EXPECT_THROW(norm(g, neg, NormKind::lp(1.5)), DomainError);
    EXPECT_NO_THROW(norm(g, neg, NormKind::lp(2.0)));
    EXPECT_THROW(norm(g, one, NormKind::lp_phi1(0.5)), DomainError);
    EXPECT_DOUBLE_EQ(sup_norm(neg), 1.0);
}

TEST(Grid, WeightedNormUsesPhi1) {
    const Grid g(DomainSpec::interval(1.0, 100));
    const Field one(g.size(), 1.0);
    double expected = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) expected += g.weights()[i] * g.phi1()[i];
    EXPECT_NEAR(norm(g, one, NormKind::lp_phi1(1.0)), expected, 1e-14);
}

TEST(Grid, SobolevPoincareConstantForTwoIsInverseSqrtLambda1) {
    for (const auto& spec : {DomainSpec::interval(1.0, 200), DomainSpec::ball(1.0, 3, 200)}) {
        const Grid g(spec);
        EXPECT_NEAR(sobolev_poincare_constant(g, 2.0), 1.0 / std::sqrt(g.lambda1()), 1e-8);
    }
}

TEST(Grid, SobolevPoincareConstantIsALowerBoundForEveryProbe) {
    const Grid g(DomainSpec::ball(1.0, 3, 100));
    const double S = sobolev_poincare_constant(g, 3.0);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Field f(g.size());
        for (auto& v : f) v = d(rng);
        const double q = norm(g, f, NormKind::lp(3.0)) / std::sqrt(dirichlet_energy(g, f));
        EXPECT_LE(q, S * (1.0 + 1e-12));
    }
}

TEST(Grid, SobolevPoincareRejectsExponentsOutOfRange) {
    const Grid g(DomainSpec::ball(1.0, 3, 64));
    EXPECT_THROW(sobolev_poincare_constant(g, 0.5), DomainError);
    EXPECT_THROW(sobolev_poincare_constant(g, 6.5), DomainError);
    EXPECT_NO_THROW(sobolev_poincare_constant(g, 6.0));
}
