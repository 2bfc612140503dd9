#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <lapacke.h>

#include "fdelab/errors.hpp"

namespace fdelab {

using Field = std::vector<double>;

/// Tridiagonal matrix stored by diagonals. `lower[i]` couples row i+1 to
/// column i, `upper[i]` couples row i to column i+1 (both of size n-1).
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }

    [[nodiscard]] Field apply(std::span<const double> x) const {
        const std::size_t n = size();
        Field y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += lower[i - 1] * x[i - 1];
            if (i + 1 < n) s += upper[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }
};

/// Thomas algorithm. Only stable for diagonally dominant or M-matrix systems,
/// which is all this library feeds it.
inline Field solve_thomas(const Tridiagonal& a, std::span<const double> rhs) {
    const std::size_t n = a.size();
    Field c(n), d(n);
    double beta = a.diag[0];
    if (beta == 0.0) throw Error("tridiagonal solve: zero pivot");
    c[0] = n > 1 ? a.upper[0] / beta : 0.0;
    d[0] = rhs[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
        beta = a.diag[i] - a.lower[i - 1] * c[i - 1];
        if (beta == 0.0) throw Error("tridiagonal solve: zero pivot");
        c[i] = i + 1 < n ? a.upper[i] / beta : 0.0;
        d[i] = (rhs[i] - a.lower[i - 1] * d[i - 1]) / beta;
    }
    Field x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

/// Leading eigenpairs of a symmetric tridiagonal matrix (ascending order).
struct SymmetricEigen {
    std::vector<double> values;         // all eigenvalues
    std::vector<Field> vectors;         // first `count` unit eigenvectors
};

/// Computes every eigenvalue and the first `count` eigenvectors via LAPACK's
/// MRRR driver (dstevr).
inline SymmetricEigen symmetric_tridiagonal_eigen(std::span<const double> diag,
                                                  std::span<const double> offdiag,
                                                  std::size_t count) {
    const auto n = static_cast<lapack_int>(diag.size());
    count = std::min<std::size_t>(count, diag.size());
    SymmetricEigen out;

    {
        std::vector<double> d(diag.begin(), diag.end());
        std::vector<double> e(offdiag.begin(), offdiag.end());
        e.resize(static_cast<std::size_t>(n));
        std::vector<double> w(static_cast<std::size_t>(n));
        lapack_int found = 0;
        std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
        double dummy = 0.0;
        const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'N', 'A', n, d.data(), e.data(),
                                               0.0, 0.0, 0, 0, 0.0, &found, w.data(), &dummy, 1,
                                               isuppz.data());
        if (info != 0) throw Error("dstevr failed (eigenvalues)");
        w.resize(static_cast<std::size_t>(found));
        out.values = std::move(w);
    }
    if (count == 0) return out;

    std::vector<double> d(diag.begin(), diag.end());
    std::vector<double> e(offdiag.begin(), offdiag.end());
    e.resize(static_cast<std::size_t>(n));
    std::vector<double> w(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) * count);
    std::vector<lapack_int> isuppz(2 * count);
    lapack_int found = 0;
    const lapack_int info =
        LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, 1,
                       static_cast<lapack_int>(count), 0.0, &found, w.data(), z.data(), n,
                       isuppz.data());
    if (info != 0 || static_cast<std::size_t>(found) != count)
        throw Error("dstevr failed (eigenvectors)");
    out.vectors.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.vectors[k].assign(z.begin() + static_cast<std::ptrdiff_t>(k * static_cast<std::size_t>(n)),
                              z.begin() + static_cast<std::ptrdiff_t>((k + 1) * static_cast<std::size_t>(n)));
        // Sturm-Liouville convention: make the first nonzero entry positive.
        double pivot = 0.0;
        for (double v : out.vectors[k]) {
            if (std::abs(v) > 1e-300) { pivot = v; break; }
        }
        if (pivot < 0) for (double& v : out.vectors[k]) v = -v;
        out.values[k] = w[k];
    }
    return out;
}

}  // namespace fdelab
