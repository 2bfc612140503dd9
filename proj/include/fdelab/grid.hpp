#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fdelab/errors.hpp"
#include "fdelab/tridiagonal.hpp"

namespace fdelab {

enum class DomainKind { Interval, RadialBall };

/// Geometry and resolution of the computational domain. Fields live on the
/// `nodes` interior nodes; the Dirichlet trace is implicitly zero.
struct DomainSpec {
    DomainKind kind = DomainKind::Interval;
    double extent = 1.0;   ///< length L (interval) or radius R (ball)
    int dimension = 1;     ///< N; always 1 for an interval
    int nodes = 0;

    static DomainSpec interval(double length, int nodes) {
        return {DomainKind::Interval, length, 1, nodes};
    }
    static DomainSpec ball(double radius, int dimension, int nodes) {
        return {DomainKind::RadialBall, radius, dimension, nodes};
    }

    bool operator==(const DomainSpec&) const = default;
};

/// Surface area of the unit sphere S^{N-1} (2 for N = 1).
inline double unit_sphere_area(int dimension) {
    const double n = dimension;
    return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

/// Immutable finite-volume discretization of the Dirichlet Laplacian on an
/// interval or on the radial sector of a ball.
///
/// The operator is symmetric and negative definite with respect to the
/// quadrature weights, so `<L f, g>_w = <f, L g>_w` and `-<L f, f>_w` is the
/// discrete Dirichlet energy. On the ball, nodes sit at cell centres
/// r_i = (i + 1/2) h so that the origin is handled by reflection (zero flux),
/// and the weights are exact shell volumes.
class Grid {
public:
    explicit Grid(const DomainSpec& spec) : spec_(spec) {
        if (spec.nodes < 16) throw DomainError("grid: at least 16 interior nodes are required");
        if (!(spec.extent > 0.0)) throw DomainError("grid: domain extent must be positive");
        if (spec.kind == DomainKind::RadialBall && spec.dimension < 1)
            throw DomainError("grid: ball dimension must be at least 1");
        if (spec.kind == DomainKind::Interval) spec_.dimension = 1;
        build();
    }

    [[nodiscard]] const DomainSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t size() const noexcept { return coords_.size(); }
    [[nodiscard]] int dimension() const noexcept { return spec_.dimension; }
    [[nodiscard]] double spacing() const noexcept { return h_; }
    [[nodiscard]] const Field& coords() const noexcept { return coords_; }
    [[nodiscard]] const Field& weights() const noexcept { return weights_; }
    [[nodiscard]] const Tridiagonal& laplacian() const noexcept { return laplacian_; }
    [[nodiscard]] double lambda1() const noexcept { return eigenvalues_.front(); }
    [[nodiscard]] const Field& phi1() const noexcept { return eigenfields_.front(); }

    /// Distance from the centre of symmetry (|x - L/2| on an interval).
    [[nodiscard]] double radial_coordinate(std::size_t i) const noexcept {
        return spec_.kind == DomainKind::Interval ? std::abs(coords_[i] - 0.5 * spec_.extent)
                                                  : coords_[i];
    }
    /// Radius of the symmetric domain (L/2 on an interval).
    [[nodiscard]] double radius() const noexcept {
        return spec_.kind == DomainKind::Interval ? 0.5 * spec_.extent : spec_.extent;
    }
    /// Total measure of the domain as seen by the quadrature.
    [[nodiscard]] double measure() const noexcept {
        double s = 0;
        for (double w : weights_) s += w;
        return s;
    }

    /// Every eigenvalue of the discrete Dirichlet Laplacian (ascending).
    [[nodiscard]] const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    /// Leading weighted-orthonormal eigenfunctions (at least 10 when available).
    [[nodiscard]] const std::vector<Field>& eigenfields() const noexcept { return eigenfields_; }

    [[nodiscard]] Field apply_laplacian(std::span<const double> f) const { return laplacian_.apply(f); }

    /// Face data used for gradients: conductance A_f / d_f between node
    /// `left[f]` and node `left[f] + 1` (or the boundary when that is past the end).
    [[nodiscard]] const std::vector<double>& face_conductance() const noexcept { return conductance_; }

    /// Conductance of the face between node i and node i+1 (i = n-1: boundary face).
    [[nodiscard]] double conductance_right(std::size_t i) const noexcept { return conductance_[i + 1]; }
    /// Conductance of the face between node i-1 and node i (i = 0: origin or left boundary face).
    [[nodiscard]] double conductance_left(std::size_t i) const noexcept { return conductance_[i]; }

    /// Whether face 0 is a Dirichlet boundary (interval) or the symmetry axis (ball).
    [[nodiscard]] bool left_face_is_boundary() const noexcept { return spec_.kind == DomainKind::Interval; }

private:
    void build() {
        const auto n = static_cast<std::size_t>(spec_.nodes);
        coords_.resize(n);
        weights_.resize(n);
        conductance_.assign(n + 1, 0.0);
        if (spec_.kind == DomainKind::Interval) {
            h_ = spec_.extent / static_cast<double>(n + 1);
            for (std::size_t i = 0; i < n; ++i) {
                coords_[i] = static_cast<double>(i + 1) * h_;
                weights_[i] = h_;
            }
            for (std::size_t f = 0; f <= n; ++f) conductance_[f] = 1.0 / h_;
        } else {
            const int N = spec_.dimension;
            const double area = unit_sphere_area(N);
            h_ = spec_.extent / (static_cast<double>(n) + 0.5);
            for (std::size_t i = 0; i < n; ++i) {
                coords_[i] = (static_cast<double>(i) + 0.5) * h_;
                const double a = static_cast<double>(i) * h_;
                const double b = static_cast<double>(i + 1) * h_;
                weights_[i] = area * (std::pow(b, N) - std::pow(a, N)) / N;
            }
            // Face f sits at r = f h; the face at the origin carries no flux.
            for (std::size_t f = 1; f <= n; ++f)
                conductance_[f] = area * std::pow(static_cast<double>(f) * h_, N - 1) / h_;
        }

        laplacian_.diag.assign(n, 0.0);
        laplacian_.lower.assign(n - 1, 0.0);
        laplacian_.upper.assign(n - 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double left = conductance_[i];
            const double right = conductance_[i + 1];
            laplacian_.diag[i] = -(left + right) / weights_[i];
            if (i + 1 < n) laplacian_.upper[i] = right / weights_[i];
            if (i > 0) laplacian_.lower[i - 1] = left / weights_[i];
        }

        // Symmetrize with the square root of the weights: B = W^{1/2} (-L) W^{-1/2}.
        std::vector<double> d(n), e(n - 1);
        for (std::size_t i = 0; i < n; ++i) d[i] = -laplacian_.diag[i];
        for (std::size_t i = 0; i + 1 < n; ++i)
            e[i] = -conductance_[i + 1] / std::sqrt(weights_[i] * weights_[i + 1]);
        auto eig = symmetric_tridiagonal_eigen(d, e, std::min<std::size_t>(n, 12));
        eigenvalues_ = std::move(eig.values);
        eigenfields_.reserve(eig.vectors.size());
        for (auto& y : eig.vectors) {
            for (std::size_t i = 0; i < n; ++i) y[i] /= std::sqrt(weights_[i]);
            eigenfields_.push_back(std::move(y));
        }
    }

    DomainSpec spec_;
    double h_ = 0.0;
    Field coords_;
    Field weights_;
    std::vector<double> conductance_;
    Tridiagonal laplacian_;
    std::vector<double> eigenvalues_;
    std::vector<Field> eigenfields_;
};

inline Grid build_grid(const DomainSpec& spec) { return Grid(spec); }

// ---------------------------------------------------------------------------
// Quadrature helpers

inline double integrate(const Grid& grid, std::span<const double> f) {
    const auto& w = grid.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
    return s;
}

inline double inner(const Grid& grid, std::span<const double> f, std::span<const double> g) {
    const auto& w = grid.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * g[i];
    return s;
}

/// Discrete Dirichlet energy  ∫|∇f|²  (sum over faces, zero trace at the boundary).
/// Equals -<L f, f>_w exactly.
inline double dirichlet_energy(const Grid& grid, std::span<const double> f) {
    const std::size_t n = f.size();
    const auto& g = grid.face_conductance();
    double s = 0.0;
    if (grid.left_face_is_boundary()) s += g[0] * f[0] * f[0];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = f[i + 1] - f[i];
        s += g[i + 1] * d * d;
    }
    s += g[n] * f[n - 1] * f[n - 1];
    return s;
}

/// Returns g with -L g = source (discrete Green operator applied to `source`).
inline Field solve_poisson(const Grid& grid, std::span<const double> source) {
    for (double v : source)
        if (!std::isfinite(v)) throw DomainError("solve_poisson: source must be finite");
    Tridiagonal a = grid.laplacian();
    for (auto& v : a.diag) v = -v;
    for (auto& v : a.lower) v = -v;
    for (auto& v : a.upper) v = -v;
    return solve_thomas(a, source);
}

// ---------------------------------------------------------------------------
// Norms

struct NormKind {
    enum class Type { Lp, LpPhi1, Hminus1, GradL2OfPower };
    Type type = Type::Lp;
    double exponent = 2.0;  ///< p for Lp / LpPhi1, m for GradL2OfPower

    static NormKind lp(double p) { return {Type::Lp, p}; }
    static NormKind lp_phi1(double p) { return {Type::LpPhi1, p}; }
    static NormKind hminus1() { return {Type::Hminus1, 0.0}; }
    static NormKind grad_l2_of_power(double m) { return {Type::GradL2OfPower, m}; }
};

namespace detail {
inline bool is_integer(double p) { return std::floor(p) == p; }

inline void require_nonnegative(std::span<const double> f, const char* what) {
    for (double v : f)
        if (v < 0.0) throw DomainError(std::string(what) + ": negative entry under a fractional power");
}
}  // namespace detail

inline double norm(const Grid& grid, std::span<const double> f, NormKind kind) {
    const auto& w = grid.weights();
    switch (kind.type) {
        case NormKind::Type::Lp:
        case NormKind::Type::LpPhi1: {
            const double p = kind.exponent;
            const bool weighted = kind.type == NormKind::Type::LpPhi1;
            if (!(p > 0.0) || (weighted && p < 1.0)) throw DomainError("norm: exponent out of range");
            if (!detail::is_integer(p)) detail::require_nonnegative(f, "norm");
            const auto& phi = grid.phi1();
            double s = 0.0;
            for (std::size_t i = 0; i < f.size(); ++i) {
                const double a = std::abs(f[i]);
                if (a == 0.0) continue;
                s += w[i] * (weighted ? phi[i] : 1.0) * std::pow(a, p);
            }
            return std::pow(s, 1.0 / p);
        }
        case NormKind::Type::Hminus1: {
            const Field g = solve_poisson(grid, f);
            return std::sqrt(std::max(0.0, inner(grid, f, g)));
        }
        case NormKind::Type::GradL2OfPower: {
            const double m = kind.exponent;
            if (!detail::is_integer(m)) detail::require_nonnegative(f, "norm");
            Field fm(f.size());
            for (std::size_t i = 0; i < f.size(); ++i)
                fm[i] = f[i] == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(f[i]), m), f[i]);
            return std::sqrt(dirichlet_energy(grid, fm));
        }
    }
    return 0.0;
}

inline double lp_norm(const Grid& grid, std::span<const double> f, double p) {
    return norm(grid, f, NormKind::lp(p));
}

inline double sup_norm(std::span<const double> f) {
    double s = 0.0;
    for (double v : f) s = std::max(s, std::abs(v));
    return s;
}

// ---------------------------------------------------------------------------
// Sobolev-Poincaré constant

/// Lower estimate of the smallest S with ||f||_s <= S ||∇f||_2 on the discrete
/// Dirichlet space, where s is the target Lebesgue exponent.
///
/// Probes: the leading Laplacian eigenfunctions and powers of phi1. The best
/// probe is then refined with the normalized nonlinear power iteration
/// f <- G(|f|^{s-2} f), whose fixed points are the Lane-Emden ground states
/// that realise the supremum. Every iterate is a valid competitor, so the
/// returned value never exceeds the true discrete constant.
inline double sobolev_poincare_constant(const Grid& grid, double target_exponent) {
    const double s = target_exponent;
    const int N = grid.dimension();
    if (!(s >= 1.0)) throw DomainError("sobolev_poincare_constant: exponent must be >= 1");
    if (N >= 3 && s > 2.0 * N / (N - 2.0) + 1e-12)
        throw DomainError("sobolev_poincare_constant: exponent above the critical Sobolev exponent");

    auto ratio = [&](std::span<const double> f) {
        const double grad = std::sqrt(dirichlet_energy(grid, f));
        if (grad == 0.0) return 0.0;
        double acc = 0.0;
        const auto& w = grid.weights();
        for (std::size_t i = 0; i < f.size(); ++i) acc += w[i] * std::pow(std::abs(f[i]), s);
        return std::pow(acc, 1.0 / s) / grad;
    };

    std::vector<Field> probes = grid.eigenfields();
    if (probes.size() > 10) probes.resize(10);
    for (double a : {0.5, 0.75, 1.5, 2.0, 3.0, 4.0}) {
        Field f(grid.phi1());
        for (double& v : f) v = std::pow(std::max(v, 0.0), a);
        probes.push_back(std::move(f));
    }

    double best = 0.0;
    Field best_f;
    for (const auto& f : probes) {
        const double r = ratio(f);
        if (r > best) {
            best = r;
            best_f = f;
        }
    }

    Field f = best_f;
    for (int it = 0; it < 500; ++it) {
        Field src(f.size());
        for (std::size_t i = 0; i < f.size(); ++i)
            src[i] = f[i] == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(f[i]), s - 1.0), f[i]);
        Field g = solve_poisson(grid, src);
        const double scale = sup_norm(g);
        if (!(scale > 0.0) || !std::isfinite(scale)) break;
        for (double& v : g) v /= scale;
        const double r = ratio(g);
        const bool stalled = std::abs(r - best) <= 1e-14 * best;
        best = std::max(best, r);
        f = std::move(g);
        if (stalled) break;
    }
    return best;
}

}  // namespace fdelab
