#include "qhd/detail/tridiag.hpp"

#include <algorithm>
#include <cmath>

namespace qhd::detail {

void apply_laplacian(const Grid1D& g, std::span<const double> f, std::span<double> out) {
    const int n = g.n;
    const double w = 1.0 / (g.dx * g.dx);
    if (g.bc == Bc::periodic) {
        out[0] = w * (f[n - 1] - 2.0 * f[0] + f[1]);
        out[n - 1] = w * (f[n - 2] - 2.0 * f[n - 1] + f[0]);
    } else {
        out[0] = 2.0 * w * (f[1] - f[0]);
        out[n - 1] = 2.0 * w * (f[n - 2] - f[n - 1]);
    }
    for (int i = 1; i + 1 < n; ++i) out[i] = w * (f[i - 1] - 2.0 * f[i] + f[i + 1]);
}

namespace {

using cplx = std::complex<double>;

// One solve of (L - r I) y = rhs for the Laplacian described above.
void solve_lap_minus_shift(const Grid1D& g, cplx r, std::span<cplx> rhs) {
    const int n = g.n;
    const double w = 1.0 / (g.dx * g.dx);
    std::vector<cplx> sub(n, cplx(w)), diag(n, cplx(-2.0 * w) - r), sup(n, cplx(w));
    if (g.bc == Bc::periodic) {
        solve_cyclic_tridiag(sub, diag, sup, cplx(w), cplx(w), rhs);
    } else {
        sup[0] = cplx(2.0 * w);
        sub[n - 1] = cplx(2.0 * w);
        solve_tridiag(sub, diag, sup, rhs);
    }
}

}  // namespace

void solve_helmholtz_pair(const Grid1D& g, double p, double q, std::span<double> rhs) {
    const int n = g.n;
    if (q == 0.0) {
        if (p == 0.0) return;
        // (I + p L) x = rhs  ==  p (L + 1/p) x = rhs
        std::vector<cplx> z(rhs.begin(), rhs.end());
        solve_lap_minus_shift(g, cplx(-1.0 / p), std::span<cplx>(z));
        for (int i = 0; i < n; ++i) rhs[i] = z[i].real() / p;
        return;
    }
    // I + pL + qL^2 = q (L - r1)(L - r2), with q r^2 + p r + 1 = 0.
    const cplx disc = std::sqrt(cplx(p * p - 4.0 * q));
    const cplx r1 = (-p + disc) / (2.0 * q);
    const cplx r2 = (-p - disc) / (2.0 * q);

    std::vector<cplx> z(rhs.begin(), rhs.end());
    for (auto& v : z) v /= q;
    solve_lap_minus_shift(g, r1, std::span<cplx>(z));
    solve_lap_minus_shift(g, r2, std::span<cplx>(z));
    for (int i = 0; i < n; ++i) rhs[i] = z[i].real();
}

void solve_shifted_laplacian(const Grid1D& g, std::complex<double> s,
                             std::span<std::complex<double>> rhs) {
    if (s == 0.0) return;
    // (I + s L) = s (L + 1/s)
    solve_lap_minus_shift(g, -1.0 / s, rhs);
    for (auto& v : rhs) v /= s;
}

void solve_banded_penta(std::span<const double> bands, std::span<double> rhs) {
    const int n = static_cast<int>(rhs.size());
    if (bands.size() != static_cast<size_t>(n) * 5)
        throw std::invalid_argument("solve_banded_penta: size mismatch");
    if (n < 3) throw std::invalid_argument("solve_banded_penta: need n >= 3");

    // Row-swap pivoting widens the upper band from 2 to up to 6; work in a
    // 9-wide buffer holding A(i, i-2 .. i+6).
    constexpr int kLo = 2, kW = 9;
    std::vector<double> a(static_cast<size_t>(n) * kW, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < 5; ++k) a[static_cast<size_t>(i) * kW + k] = bands[i * 5 + k];
    auto at = [&](int i, int j) -> double& {
        return a[static_cast<size_t>(i) * kW + (j - i + kLo)];
    };

    for (int col = 0; col < n; ++col) {
        const int last = std::min(col + kLo, n - 1);
        int piv = col;
        for (int r = col + 1; r <= last; ++r)
            if (std::abs(at(r, col)) > std::abs(at(piv, col))) piv = r;
        if (at(piv, col) == 0.0)
            throw std::runtime_error("solve_banded_penta: singular matrix");
        // Fill-in never reaches past column col + 6, so both rows fit the
        // 9-wide buffer over the swapped range.
        const int jhi = std::min(col + kW - kLo - 1, n - 1);
        if (piv != col) {
            for (int j = col; j <= jhi; ++j) std::swap(at(col, j), at(piv, j));
            std::swap(rhs[col], rhs[piv]);
        }
        for (int r = col + 1; r <= last; ++r) {
            const double m = at(r, col) / at(col, col);
            if (m == 0.0) continue;
            at(r, col) = 0.0;
            for (int j = col + 1; j <= jhi; ++j) at(r, j) -= m * at(col, j);
            rhs[r] -= m * rhs[col];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = rhs[i];
        const int jhi = std::min(i + kW - kLo - 1, n - 1);
        for (int j = i + 1; j <= jhi; ++j) s -= at(i, j) * rhs[j];
        rhs[i] = s / at(i, i);
    }
}

}  // namespace qhd::detail
