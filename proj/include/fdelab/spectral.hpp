#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fdelab/errors.hpp"
#include "fdelab/grid.hpp"
#include "fdelab/stationary.hpp"

namespace fdelab {

/// Weighted spectrum of -Δ in L²_V (weight V^{p-1}) over the radial sector.
struct SpectralData {
    double p = 1.0;
    double c = 0.0;
    std::vector<double> eigenvalues;  ///< every λ_{V,k}, ascending
    std::vector<Field> eigenfields;   ///< first k_max, orthonormal for Σ w V^{p-1} φ ψ
    Field weight;                     ///< V^{p-1} after flooring
    int k_p = 1;
    double lambda_p = 0.0;
    double h_omega_margin = 0.0;
    bool degenerate = false;          ///< p c numerically coincides with an eigenvalue

    [[nodiscard]] bool complete_basis() const noexcept { return eigenfields.size() == weight.size(); }
};

/// Solves (-L) φ = λ V^{p-1} φ after symmetrizing with (w V^{p-1})^{1/2}.
/// The weight is floored at 1e-14 · max to keep the transform finite.
inline SpectralData weighted_spectrum(const Grid& grid, const StationaryProfile& profile, std::size_t k_max) {
    if (k_max < 3) throw DomainError("weighted_spectrum: k_max must be at least 3");
    const std::size_t n = grid.size();
    if (profile.V.size() != n) throw DomainError("weighted_spectrum: profile does not match the grid");
    SpectralData out;
    out.p = profile.p;
    out.c = profile.c;

    out.weight.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.weight[i] = std::pow(std::max(profile.V[i], 0.0), profile.p - 1.0);
    const double wmax = sup_norm(out.weight);
    for (double& x : out.weight) x = std::max(x, 1e-14 * wmax);

    const auto& w = grid.weights();
    const auto& L = grid.laplacian();
    std::vector<double> d(n), e(n - 1), mass(n);
    for (std::size_t i = 0; i < n; ++i) {
        mass[i] = w[i] * out.weight[i];
        d[i] = -L.diag[i] / out.weight[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = -w[i] * L.upper[i] / std::sqrt(mass[i] * mass[i + 1]);

    auto eig = symmetric_tridiagonal_eigen(d, e, std::min(k_max, n));
    out.eigenvalues = std::move(eig.values);
    out.eigenfields.reserve(eig.vectors.size());
    for (auto& y : eig.vectors) {
        for (std::size_t i = 0; i < n; ++i) y[i] /= std::sqrt(mass[i]);
        out.eigenfields.push_back(std::move(y));
    }

    const double pc = profile.p * profile.c;
    int below = 0;
    double margin = std::numeric_limits<double>::infinity();
    for (double lam : out.eigenvalues) {
        if (lam < pc) ++below;
        margin = std::min(margin, std::abs(pc - lam));
    }
    out.k_p = std::max(1, below);
    out.lambda_p = out.eigenvalues[static_cast<std::size_t>(out.k_p)] - pc;
    out.h_omega_margin = margin;
    out.degenerate = margin < 1e-6 * profile.c;
    return out;
}

/// L²_V inner product Σ w V^{p-1} f g.
inline double weighted_inner(const Grid& grid, const SpectralData& s, std::span<const double> f,
                             std::span<const double> g) {
    const auto& w = grid.weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * s.weight[i] * f[i] * g[i];
    return acc;
}

/// Linear entropy E[f] = ∫ f² V^{p-1}.
inline double linear_entropy(const Grid& grid, const SpectralData& s, std::span<const double> f) {
    return weighted_inner(grid, s, f, f);
}

/// Linear Fisher information I[f] = ∫|∇f|² - p c ∫ f² V^{p-1}.
inline double linear_fisher(const Grid& grid, const SpectralData& s, std::span<const double> f) {
    return dirichlet_energy(grid, f) - s.p * s.c * linear_entropy(grid, s, f);
}

/// Evolution of p V^{p-1} f_t = Δf + c p V^{p-1} f by eigen-expansion.
struct LinearizedRecord {
    std::vector<double> times;
    std::vector<double> entropy;                  ///< E[f(t)] evaluated on the reconstructed field
    std::vector<double> entropy_series;           ///< Σ e^{2(pc-λ_k)t/p} proj_k²
    std::vector<double> fisher;                   ///< I[f(t)]
    std::vector<std::vector<double>> projections; ///< proj_k(t) per time
    std::vector<Field> fields;                    ///< f(t) per time
};

inline LinearizedRecord linearized_flow(const Grid& grid, const SpectralData& s, std::span<const double> f0,
                                        const std::vector<double>& times) {
    if (!s.complete_basis()) throw PreconditionError("linearized_flow: needs the complete eigenbasis (k_max = nodes)");
    for (double v : f0)
        if (!std::isfinite(v)) throw DomainError("linearized_flow: f0 must be finite");
    const std::size_t n = grid.size();
    const std::size_t K = s.eigenfields.size();
    std::vector<double> proj0(K);
    for (std::size_t k = 0; k < K; ++k) proj0[k] = weighted_inner(grid, s, f0, s.eigenfields[k]);

    LinearizedRecord rec;
    for (double t : times) {
        std::vector<double> proj(K);
        Field f(n, 0.0);
        double series = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double g = std::exp((s.p * s.c - s.eigenvalues[k]) / s.p * t);
            proj[k] = g * proj0[k];
            series += proj[k] * proj[k];
            if (proj[k] != 0.0)
                for (std::size_t i = 0; i < n; ++i) f[i] += proj[k] * s.eigenfields[k][i];
        }
        rec.times.push_back(t);
        rec.entropy.push_back(linear_entropy(grid, s, f));
        rec.entropy_series.push_back(series);
        rec.fisher.push_back(linear_fisher(grid, s, f));
        rec.projections.push_back(std::move(proj));
        rec.fields.push_back(std::move(f));
    }
    return rec;
}

struct PoincareReport {
    double ratio = 0.0;   ///< ∫|∇φ|² / ∫ φ² V^{p-1}
    double bound = 0.0;   ///< λ_{V,k_p+1}
    bool pass = false;
};

/// Improved Poincaré inequality on the orthogonal complement of the first k_p modes.
inline PoincareReport improved_poincare_check(const Grid& grid, const SpectralData& s, std::span<const double> field) {
    const double E = linear_entropy(grid, s, field);
    if (!(E > 0.0)) throw PreconditionError("improved_poincare_check: field must be nonzero");
    const double scale = std::sqrt(E);
    for (int k = 0; k < s.k_p; ++k) {
        const double a = weighted_inner(grid, s, field, s.eigenfields[static_cast<std::size_t>(k)]);
        if (std::abs(a) > 1e-9 * scale)
            throw PreconditionError("improved_poincare_check: field has a component on the first k_p modes");
    }
    PoincareReport r;
    r.ratio = dirichlet_energy(grid, field) / E;
    r.bound = s.eigenvalues[static_cast<std::size_t>(s.k_p)];
    r.pass = r.ratio >= r.bound * (1.0 - 1e-6);
    return r;
}

}  // namespace fdelab
