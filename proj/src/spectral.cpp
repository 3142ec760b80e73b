#include "qhd/spectral.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace qhd {

double mode_wavenumber(const Grid1D& grid, int j) {
    if (grid.bc != Bc::periodic)
        throw std::invalid_argument("mode_wavenumber: periodic grid required");
    return 2.0 * std::numbers::pi * j / grid.length();
}

SpectralState project_spectral(const DensityField& rho, const std::vector<int>& mode_indices) {
    const Grid1D& g = rho.grid;
    if (g.bc != Bc::periodic)
        throw std::invalid_argument("project_spectral: periodic grid required");
    const int n = g.n;

    SpectralState s;
    double mean = 0.0;
    for (double v : rho.v) mean += v;
    s.mean_channel = mean / n;

    s.modes.reserve(mode_indices.size());
    for (int j : mode_indices) {
        if (j < 1 || 2 * j >= n)
            throw std::invalid_argument("project_spectral: mode index outside (0, n/2)");
        const double q = mode_wavenumber(g, j);
        std::complex<double> acc{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            const double ph = q * g.x(i);
            acc += rho.v[i] * std::complex<double>(std::cos(ph), -std::sin(ph));
        }
        s.modes.push_back({q, acc / static_cast<double>(n)});
    }
    return s;
}

DensityField synthesize_spectral(const SpectralState& state, const Grid1D& grid) {
    if (grid.bc != Bc::periodic)
        throw std::invalid_argument("synthesize_spectral: periodic grid required");
    DensityField rho(grid);
    for (int i = 0; i < grid.n; ++i) {
        double v = state.mean_channel;
        for (const SpectralMode& m : state.modes) {
            const double ph = m.q * grid.x(i);
            v += 2.0 * (m.amplitude.real() * std::cos(ph) - m.amplitude.imag() * std::sin(ph));
        }
        rho.v[i] = v;
    }
    return rho;
}

namespace {

SpectralState evolve_with(const SpectralState& state, double t, double k, double rho_eq,
                          const std::function<std::complex<double>(double)>& log_factor) {
    if (t < 0.0) throw std::invalid_argument("spectral evolve: t must be >= 0");
    SpectralState out;
    const double decay = std::exp(-k * t);
    out.mean_channel = rho_eq + (state.mean_channel - rho_eq) * decay;
    out.modes.reserve(state.modes.size());
    for (const SpectralMode& m : state.modes) {
        const std::complex<double> f = std::exp(log_factor(m.q) * t);
        out.modes.push_back({m.q, m.amplitude * f});
    }
    return out;
}

}  // namespace

SpectralState evolve_spectral_rd(const SpectralState& state, double t, const Scenario& sc) {
    const PhysParams& p = sc.params;
    const double D = p.theta / sc.law.b1;
    const double B = sc.quantum_on() ? p.hbar * p.hbar / (4.0 * p.m * sc.law.b1) : 0.0;
    return evolve_with(state, t, p.k_rate, p.rho_eq, [&](double q) {
        return std::complex<double>(-(p.k_rate + D * q * q + B * q * q * q * q), 0.0);
    });
}

SpectralState evolve_spectral_conv(const SpectralState& state, double t, const Scenario& sc) {
    const PhysParams& p = sc.params;
    if (p.V0 == 0.0) throw std::invalid_argument("evolve_spectral_conv: V0 must be nonzero");
    const double disp = sc.quantum_on() ? p.hbar * p.hbar / (4.0 * p.m * p.m * p.V0) : 0.0;
    return evolve_with(state, t, p.k_rate, p.rho_eq, [&](double q) {
        return std::complex<double>(-p.k_rate, -(q * p.V0 - q * q * q * disp));
    });
}

SpectralState evolve_spectral_electron_gas(const SpectralState& state, double t,
                                           const Scenario& sc) {
    const PhysParams& p = sc.params;
    const double De = electron_gas_diffusion(p.m, p.hbar, p.nu);
    return evolve_with(state, t, p.k_rate, p.rho_eq, [&](double q) {
        return std::complex<double>(-(p.k_rate + De * q * q), 0.0);
    });
}

double convective_phase_velocity(const PhysParams& p, double q) {
    if (p.V0 == 0.0)
        throw std::invalid_argument("convective_phase_velocity: V0 must be nonzero");
    const double r = p.hbar * q / (2.0 * p.m * p.V0);
    return p.V0 * (1.0 - r * r);
}

}  // namespace qhd
