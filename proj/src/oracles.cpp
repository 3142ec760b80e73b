#include "qhd/oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qhd::oracles {

void DispersionLaw::validate() const {
    if (!(m > 0.0)) throw std::invalid_argument("DispersionLaw: m must be positive");
    switch (kind) {
        case LawKind::linear_quantum:
            if (!(hbar > 0.0) || !(b1 > 0.0))
                throw std::invalid_argument("DispersionLaw: linear_quantum needs hbar, b1 > 0");
            break;
        case LawKind::classical_cubic_free:
            if (!(theta > 0.0) || !(b3 > 0.0))
                throw std::invalid_argument(
                    "DispersionLaw: classical_cubic_free needs theta, b3 > 0");
            break;
        case LawKind::quantum_cubic_free:
            if (!(hbar > 0.0) || !(b3 > 0.0))
                throw std::invalid_argument("DispersionLaw: quantum_cubic_free needs hbar, b3 > 0");
            break;
        case LawKind::quartic_well:
            if (!(theta > 0.0) || !(K > 0.0) || !(b3 > 0.0))
                throw std::invalid_argument("DispersionLaw: quartic_well needs theta, K, b3 > 0");
            break;
    }
}

double DispersionLaw::sigma2(double t) const {
    if (!(t >= 0.0)) throw std::domain_error("DispersionLaw: t must be non-negative");
    switch (kind) {
        case LawKind::linear_quantum:
            return hbar * std::sqrt(t / (m * b1));
        case LawKind::classical_cubic_free:
            return std::sqrt(64.0 * theta * t * t * t / (27.0 * b3));
        case LawKind::quantum_cubic_free:
            return 2.0 * std::cbrt(hbar * hbar / (2.0 * m * b3)) * t;
        case LawKind::quartic_well: {
            specfun::QuarticWellDispersion rel(K, theta, b3);
            const double s = rel.scale_from_time(t);
            return s * s;
        }
    }
    throw std::invalid_argument("DispersionLaw: unknown kind");
}

DensityField sample_profile(ProfileFamily family, double sigma, const Grid1D& grid,
                            double center) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sample_profile: sigma must be positive");

    double norm = 0.0;
    switch (family) {
        case ProfileFamily::gaussian:
            norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
            break;
        case ProfileFamily::quartic:
            norm = specfun::gamma_fn(0.75) / (std::numbers::pi * sigma);
            break;
        case ProfileFamily::abs_cubic:
            norm = 3.0 * std::pow(3.0, 1.0 / 6.0) * specfun::gamma_fn(2.0 / 3.0) /
                   (4.0 * std::numbers::pi * sigma);
            break;
    }

    DensityField rho(grid);
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.x(i) - center;
        double e = 0.0;
        switch (family) {
            case ProfileFamily::gaussian:
                e = x * x / (2.0 * sigma * sigma);
                break;
            case ProfileFamily::quartic:
                e = x * x * x * x / (4.0 * sigma * sigma * sigma * sigma);
                break;
            case ProfileFamily::abs_cubic:
                e = std::abs(x * x * x) / (3.0 * sigma * sigma * sigma);
                break;
        }
        rho.v[i] = norm * std::exp(-e);
    }
    return rho;
}

double equilibrium_sigma(double K, double theta) {
    if (!(K > 0.0) || !(theta > 0.0))
        throw std::invalid_argument("equilibrium_sigma: K and theta must be positive");
    return std::pow(theta / K, 0.25);
}

namespace {

// dy/dt for y = sigma^{4/3}:  (4/3) * ((theta - K y^3) / b3)^{1/3}.
double y_rate(const specfun::QuarticWellDispersion& rel, double y) {
    const double gap = rel.theta - rel.K * y * y * y;
    if (gap <= 0.0) return 0.0;
    return (4.0 / 3.0) * std::cbrt(gap / rel.b3);
}

}  // namespace

std::vector<double> scale_ode_oracle(const specfun::QuarticWellDispersion& rel,
                                     std::span<const double> times, double sigma0) {
    const double sig_eq = rel.equilibrium_scale();
    if (sigma0 < 0.0) sigma0 = 1e-3 * sig_eq;
    if (!(sigma0 < sig_eq))
        throw std::invalid_argument("scale_ode_oracle: sigma0 must lie below equilibrium");
    for (size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0))
            throw std::invalid_argument("scale_ode_oracle: times must be non-negative");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw std::invalid_argument("scale_ode_oracle: times must be increasing");
    }

    const double y_eq = std::pow(sig_eq, 4.0 / 3.0);
    const double h = rel.arrival_time() / 2e5;  // fixed fine step; cost is trivial

    std::vector<double> out;
    out.reserve(times.size());
    double t = 0.0;
    double y = std::pow(sigma0, 4.0 / 3.0);

    auto rk4_to = [&](double target) {
        while (t < target) {
            const double step = std::min(h, target - t);
            const double k1 = y_rate(rel, y);
            const double k2 = y_rate(rel, y + 0.5 * step * k1);
            const double k3 = y_rate(rel, y + 0.5 * step * k2);
            const double k4 = y_rate(rel, y + step * k3);
            y += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (y > y_eq) y = y_eq;
            t += step;
        }
    };

    for (double target : times) {
        rk4_to(target);
        out.push_back(std::pow(y, 0.75));
    }
    return out;
}

double scale_ode_arrival_time(const specfun::QuarticWellDispersion& rel, double sigma0) {
    const double sig_eq = rel.equilibrium_scale();
    if (sigma0 < 0.0) sigma0 = 1e-3 * sig_eq;
    const double y_eq = std::pow(sig_eq, 4.0 / 3.0);
    const double h = rel.arrival_time() / 2e5;

    double t = 0.0;
    double y = std::pow(sigma0, 4.0 / 3.0);
    const double t_stop = 2.0 * rel.arrival_time();
    while (t < t_stop) {
        const double k1 = y_rate(rel, y);
        const double k2 = y_rate(rel, y + 0.5 * h * k1);
        const double k3 = y_rate(rel, y + 0.5 * h * k2);
        const double k4 = y_rate(rel, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        if (y >= y_eq * (1.0 - 1e-6)) return t;
        if (y > y_eq) y = y_eq;
    }
    throw std::runtime_error("scale_ode_arrival_time: equilibrium not reached");
}

}  // namespace qhd::oracles
