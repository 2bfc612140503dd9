#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "fdelab/errors.hpp"
#include "fdelab/grid.hpp"

namespace fdelab {

enum class SobolevRegime { Subcritical, CriticalYamabe, Supercritical };
enum class DiffusionRegime { GoodFDE, VeryFast };

inline const char* to_string(SobolevRegime r) {
    switch (r) {
        case SobolevRegime::Subcritical: return "subcritical";
        case SobolevRegime::CriticalYamabe: return "critical-yamabe";
        case SobolevRegime::Supercritical: return "supercritical";
    }
    return "?";
}

inline const char* to_string(DiffusionRegime r) {
    return r == DiffusionRegime::GoodFDE ? "good-fde" : "very-fast";
}

/// Critical exponents attached to (m, N).
struct ExponentTable {
    double m = 0.5;
    int N = 1;
    double m_c = 0;   ///< (N-2)/N
    double m_s = 0;   ///< (N-2)/(N+2)
    double m_c1 = 0;  ///< (N-1)/N
    double p_c = 0;   ///< N(1-m)/2
    double p_c1 = 0;  ///< N(1-m)
    std::optional<double> p_s;       ///< (N+2)/(N-2), N >= 3
    std::optional<double> two_star;  ///< 2N/(N-2), N >= 3
    SobolevRegime sobolev = SobolevRegime::Supercritical;
    DiffusionRegime diffusion = DiffusionRegime::GoodFDE;
};

inline ExponentTable critical_exponents(double m, int N) {
    if (!(m > 0.0 && m < 1.0)) throw DomainError("critical_exponents: m must lie in (0,1)");
    if (N < 1) throw DomainError("critical_exponents: N must be at least 1");
    ExponentTable t;
    t.m = m;
    t.N = N;
    const double n = N;
    t.m_c = (n - 2.0) / n;
    t.m_s = (n - 2.0) / (n + 2.0);
    t.m_c1 = (n - 1.0) / n;
    t.p_c = n * (1.0 - m) / 2.0;
    t.p_c1 = n * (1.0 - m);
    if (N >= 3) {
        t.p_s = (n + 2.0) / (n - 2.0);
        t.two_star = 2.0 * n / (n - 2.0);
    }
    if (std::abs(m - t.m_s) <= 1e-12)
        t.sobolev = SobolevRegime::CriticalYamabe;
    else
        t.sobolev = m > t.m_s ? SobolevRegime::Supercritical : SobolevRegime::Subcritical;
    t.diffusion = m > t.m_c ? DiffusionRegime::GoodFDE : DiffusionRegime::VeryFast;
    return t;
}

/// Smoothing exponent: 1/(2p - N(1-m)), or 1/(p - N(1-m)) for the Φ1-weighted form.
inline double theta(double m, int N, double p, bool weighted) {
    const double denom = (weighted ? p : 2.0 * p) - N * (1.0 - m);
    if (!(denom > 0.0))
        throw RegimeError("theta: p must exceed " + std::string(weighted ? "p_c1" : "p_c"));
    return 1.0 / denom;
}

/// Lebesgue exponent 2p/(p+m-1) paired with L^p decay in the upper extinction bound.
inline double sobolev_target_exponent(double m, double p) { return 2.0 * p / (p + m - 1.0); }

struct ExtinctionConstants {
    double c0 = 0;  ///< lower-bound constant: T >= ||u0||_{L1_phi1}^{1-m} / c0
    double cp = 0;  ///< upper-bound constant: T <= cp ||u0||_{Lp}^{1-m}
    double cp_printed = 0;  ///< cp / p: the variant with an extra factor p in the denominator
    double S2 = 0;  ///< discrete Sobolev-Poincaré estimate used for cp
};

inline ExtinctionConstants extinction_constants(double m, double p, const Grid& grid) {
    if (!(m > 0.0 && m < 1.0)) throw DomainError("extinction_constants: m must lie in (0,1)");
    const int N = grid.dimension();
    const double pc = N * (1.0 - m) / 2.0;
    if (!(p > 1.0) || p < pc) throw RegimeError("extinction_constants: need p > 1 and p >= p_c");
    const double s = sobolev_target_exponent(m, p);
    if (N >= 3 && s > 2.0 * N / (N - 2.0) + 1e-12)
        throw RegimeError("extinction_constants: Sobolev exponent above 2*");

    ExtinctionConstants out;
    const double phi1_l1 = norm(grid, grid.phi1(), NormKind::lp(1.0));
    out.c0 = grid.lambda1() * (1.0 - m) * std::pow(phi1_l1, 1.0 - m);
    out.S2 = sobolev_poincare_constant(grid, s);
    // d/dt ||u||_p^{1-m} <= -4m(1-m)(p-1)/(p+m-1)² S2^{-2}, integrated up to T.
    const double a = p + m - 1.0;
    out.cp = a * a / (4.0 * m * (1.0 - m) * (p - 1.0)) * out.S2 * out.S2;
    out.cp_printed = out.cp / p;
    return out;
}

}  // namespace fdelab
