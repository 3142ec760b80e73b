#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "qhd/grid.hpp"

namespace qhd::detail {

/// In-place Thomas algorithm.  sub/diag/sup are consumed; sub[0] and
/// sup[n-1] are ignored.
template <class T>
void solve_tridiag(std::vector<T> sub, std::vector<T> diag, std::vector<T> sup,
                   std::span<T> x) {
    const size_t n = diag.size();
    if (sub.size() != n || sup.size() != n || x.size() != n)
        throw std::invalid_argument("solve_tridiag: size mismatch");
    for (size_t i = 1; i < n; ++i) {
        const T w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        x[i] -= w * x[i - 1];
    }
    x[n - 1] /= diag[n - 1];
    for (size_t i = n - 1; i-- > 0;) x[i] = (x[i] - sup[i] * x[i + 1]) / diag[i];
}

/// Cyclic tridiagonal solve (corner entries `corner_tr` = A[0][n-1],
/// `corner_bl` = A[n-1][0]) via the Sherman-Morrison rank-one update.
template <class T>
void solve_cyclic_tridiag(const std::vector<T>& sub, const std::vector<T>& diag,
                          const std::vector<T>& sup, T corner_tr, T corner_bl,
                          std::span<T> x) {
    const size_t n = diag.size();
    if (n < 3) throw std::invalid_argument("solve_cyclic_tridiag: need n >= 3");

    const T gamma = -diag[0];
    std::vector<T> d(diag);
    d[0] = diag[0] - gamma;
    d[n - 1] = diag[n - 1] - corner_tr * corner_bl / gamma;

    std::vector<T> u(n, T{});
    u[0] = gamma;
    u[n - 1] = corner_bl;

    solve_tridiag(sub, d, sup, x);
    solve_tridiag(sub, d, sup, std::span<T>(u));

    // v = (1, 0, ..., 0, corner_tr / gamma)
    const T vy = x[0] + corner_tr / gamma * x[n - 1];
    const T vz = u[0] + corner_tr / gamma * u[n - 1];
    const T f = vy / (T{1} + vz);
    for (size_t i = 0; i < n; ++i) x[i] -= f * u[i];
}

/// Applies the conservative discrete Laplacian.  Interior rows are the
/// standard 3-point stencil; no-flux boundary rows use the half-cell form
/// 2(f1 - f0)/dx^2, which telescopes exactly against trapezoid weights.
void apply_laplacian(const Grid1D& g, std::span<const double> f, std::span<double> out);

/// Solves (I + p*L + q*L*L) x = rhs with L the Laplacian above, factoring the
/// quadratic into two (generally complex) shifted-Laplacian tridiagonal
/// solves.  rhs is overwritten with the solution.
void solve_helmholtz_pair(const Grid1D& g, double p, double q, std::span<double> rhs);

/// Solves (I + s*L) x = rhs with complex s; used by the unitary kinetic step.
void solve_shifted_laplacian(const Grid1D& g, std::complex<double> s,
                             std::span<std::complex<double>> rhs);

/// Banded LU with partial pivoting for a pentadiagonal system.  `bands` holds
/// n rows of five coefficients A(i, i-2..i+2); out-of-range slots must be
/// zero.  rhs is overwritten with the solution.
void solve_banded_penta(std::span<const double> bands, std::span<double> rhs);

}  // namespace qhd::detail
