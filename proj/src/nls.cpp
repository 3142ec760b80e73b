#include "qhd/nls.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qhd/calculus.hpp"
#include "qhd/detail/tridiag.hpp"

namespace qhd {

namespace {

void require_periodic(const Grid1D& g, const char* who) {
    if (g.bc != Bc::periodic)
        throw std::invalid_argument(std::string(who) + ": periodic grid required");
}

double wrap_angle(double d) {
    return d - 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
}

}  // namespace

WaveField::WaveField(const Grid1D& g) : grid(g), v(g.n, {0.0, 0.0}) {
    require_periodic(g, "WaveField");
}

WaveField::WaveField(const Grid1D& g, std::vector<std::complex<double>> data)
    : grid(g), v(std::move(data)) {
    require_periodic(g, "WaveField");
    if (static_cast<int>(v.size()) != grid.n)
        throw std::invalid_argument("WaveField: data size does not match grid");
}

WaveField WaveField::from_fn(const Grid1D& g,
                             const std::function<std::complex<double>(double)>& f) {
    WaveField w(g);
    for (int i = 0; i < g.n; ++i) w.v[i] = f(g.x(i));
    return w;
}

double WaveField::norm_sq() const {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return s * grid.dx;
}

void WaveField::normalize() {
    const double n2 = norm_sq();
    if (!(n2 > 0.0)) throw std::invalid_argument("WaveField: cannot normalize zero field");
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& z : v) z *= inv;
}

DensityField WaveField::density() const {
    DensityField rho(grid);
    for (int i = 0; i < grid.n; ++i) rho.v[i] = std::norm(v[i]);
    return rho;
}

void EntropyFunctional::validate() const {
    if (lambda < 0.0)
        throw std::invalid_argument("EntropyFunctional: lambda must be >= 0");
}

EntropyFunctional EntropyFunctional::thermal_shannon(double theta) {
    if (theta < 0.0)
        throw std::invalid_argument("EntropyFunctional: thermal preset needs theta >= 0");
    return {Kind::shannon, theta};
}

ScalarField EntropyFunctional::evaluate(const DensityField& rho) const {
    validate();
    ScalarField I(rho.grid);
    switch (kind) {
        case Kind::none:
            break;
        case Kind::shannon: {
            ScalarField L = log_density(rho);
            for (int i = 0; i < rho.size(); ++i) I.v[i] = -lambda * L.v[i];
            break;
        }
        case Kind::linear:
            for (int i = 0; i < rho.size(); ++i) I.v[i] = lambda * (1.0 - rho.v[i]);
            break;
    }
    return I;
}

WaveField split_step(const WaveField& psi, double dt, const ScalarField& U,
                     const EntropyFunctional& ent, const PhysParams& params) {
    if (!(dt > 0.0)) throw std::invalid_argument("split_step: dt must be > 0");
    if (!psi.grid.same_layout(U.grid))
        throw std::invalid_argument("split_step: potential grid does not match");
    if (!(params.hbar > 0.0)) throw std::invalid_argument("split_step: hbar must be > 0");
    const Grid1D& g = psi.grid;
    const int n = g.n;

    WaveField out = psi;
    auto half_phase = [&](WaveField& w) {
        const ScalarField I = ent.evaluate(w.density());
        for (int i = 0; i < n; ++i) {
            const double ph = -(U.v[i] - I.v[i]) * dt / (2.0 * params.hbar);
            w.v[i] *= std::complex<double>(std::cos(ph), std::sin(ph));
        }
    };

    half_phase(out);

    // Crank-Nicolson kinetic step (I - i a L) psi' = (I + i a L) psi: a Cayley
    // transform of the Hermitian Laplacian, hence exactly norm-preserving.
    const double a = dt * params.hbar / (4.0 * params.m);
    std::vector<double> re(n), im(n), lre(n), lim(n);
    for (int i = 0; i < n; ++i) {
        re[i] = out.v[i].real();
        im[i] = out.v[i].imag();
    }
    detail::apply_laplacian(g, re, lre);
    detail::apply_laplacian(g, im, lim);
    std::vector<std::complex<double>> rhs(n);
    const std::complex<double> ia{0.0, a};
    for (int i = 0; i < n; ++i)
        rhs[i] = out.v[i] + ia * std::complex<double>(lre[i], lim[i]);
    detail::solve_shifted_laplacian(g, -ia, rhs);
    out.v = std::move(rhs);

    half_phase(out);

    for (const auto& z : out.v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::runtime_error("split_step: non-finite wavefunction");
    return out;
}

MadelungFields madelung_decompose(const WaveField& psi, const PhysParams& params) {
    const Grid1D& g = psi.grid;
    const int n = g.n;

    MadelungFields out;
    out.rho = psi.density();
    out.V = ScalarField(g);
    out.valid.assign(n, 1);

    const double floor = 1e-12 * out.rho.max_value();
    std::vector<std::uint8_t> above(n);
    for (int i = 0; i < n; ++i) above[i] = out.rho.v[i] > floor;

    // The support is phase-coherent only if the masked nodes form at most one
    // circular run; fragments separated by masked gaps carry no relative phase.
    int runs = 0;
    bool any_masked = false;
    for (int i = 0; i < n; ++i) {
        if (!above[i]) any_masked = true;
        if (!above[i] && above[(i + n - 1) % n]) ++runs;
    }
    out.phase_ok = !any_masked || runs <= 1;

    for (int i = 0; i < n; ++i) {
        const int l = (i + n - 1) % n;
        const int r = (i + 1) % n;
        if (!above[i] || !above[l] || !above[r]) {
            out.valid[i] = 0;
            continue;
        }
        const double dplus = wrap_angle(std::arg(psi.v[r]) - std::arg(psi.v[i]));
        const double dminus = wrap_angle(std::arg(psi.v[i]) - std::arg(psi.v[l]));
        out.V.v[i] = params.hbar / params.m * (dplus + dminus) / (2.0 * g.dx);
    }
    return out;
}

double concentration_metric(const DensityField& rho) {
    const int n = rho.size();
    const std::vector<double>& v = rho.v;
    if (n == 0) return 1.0;

    // local maxima; domain ends count as peaks when they dominate inward
    std::vector<int> peaks;
    for (int i = 0; i < n; ++i) {
        const double l = (i > 0) ? v[i - 1] : v[i] - 1.0;
        const double r = (i + 1 < n) ? v[i + 1] : v[i] - 1.0;
        if (v[i] >= l && v[i] >= r && (v[i] > l || v[i] > r)) peaks.push_back(i);
    }
    if (peaks.size() <= 1) return 1.0;

    std::vector<double> peak_val;
    for (int p : peaks) peak_val.push_back(v[p]);

    // candidate separators: the minimum between consecutive peaks
    std::vector<int> sep_idx;
    std::vector<double> sep_val;
    for (size_t k = 0; k + 1 < peaks.size(); ++k) {
        int arg = peaks[k];
        double mn = v[peaks[k]];
        for (int i = peaks[k] + 1; i <= peaks[k + 1]; ++i)
            if (v[i] < mn) {
                mn = v[i];
                arg = i;
            }
        sep_idx.push_back(arg);
        sep_val.push_back(mn);
    }

    // merge across separators that are not prominent (valley above half the
    // smaller adjacent peak), most spurious first
    while (!sep_val.empty()) {
        size_t worst = 0;
        double worst_ratio = -1.0;
        for (size_t k = 0; k < sep_val.size(); ++k) {
            const double base = std::min(peak_val[k], peak_val[k + 1]);
            const double ratio = (base > 0.0) ? sep_val[k] / base : 1.0;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                worst = k;
            }
        }
        if (worst_ratio <= 0.5) break;
        peak_val[worst] = std::max(peak_val[worst], peak_val[worst + 1]);
        peak_val.erase(peak_val.begin() + worst + 1);
        sep_val.erase(sep_val.begin() + worst);
        sep_idx.erase(sep_idx.begin() + worst);
    }
    if (sep_idx.empty()) return 1.0;

    // nodal quadrature weights; separator nodes contribute half to each side
    std::vector<double> w(n, rho.grid.dx);
    if (rho.grid.bc == Bc::no_flux) {
        w[0] = 0.5 * rho.grid.dx;
        w[n - 1] = 0.5 * rho.grid.dx;
    }
    std::vector<double> masses;
    double acc = 0.0, total = 0.0;
    size_t k = 0;
    for (int i = 0; i < n; ++i) {
        const double cell = w[i] * v[i];
        total += cell;
        if (k < sep_idx.size() && i == sep_idx[k]) {
            acc += 0.5 * cell;
            masses.push_back(acc);
            acc = 0.5 * cell;
            ++k;
        } else {
            acc += cell;
        }
    }
    masses.push_back(acc);

    double best = 0.0;
    for (double m : masses) best = std::max(best, m);
    return (total > 0.0) ? best / total : 1.0;
}

double free_gaussian_variance(double s0sq, double t, const PhysParams& params) {
    if (!(s0sq > 0.0))
        throw std::invalid_argument("free_gaussian_variance: s0sq must be > 0");
    const double r = params.hbar * t / (2.0 * params.m * s0sq);
    return s0sq * (1.0 + r * r);
}

}  // namespace qhd
