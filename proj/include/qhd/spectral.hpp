#pragma once

#include <complex>
#include <vector>

#include "qhd/solver.hpp"

namespace qhd {

/// One Fourier component of a real periodic density perturbation.
struct SpectralMode {
    double q = 0.0;                       // wave vector 2*pi*j / L
    std::complex<double> amplitude{0.0};  // (1/n) sum_i f_i exp(-i q x_i)
};

/// Band-limited representation of a periodic density: the spatial mean plus a
/// finite set of positive-q modes (the conjugate halves are implicit because
/// the field is real).
struct SpectralState {
    double mean_channel = 0.0;
    std::vector<SpectralMode> modes;
};

/// Wave vector of integer mode j on a periodic grid.
double mode_wavenumber(const Grid1D& grid, int j);

/// Projects the density onto the listed integer modes (j >= 1) by direct
/// discrete Fourier sums; exact for band-limited data on a uniform grid.
SpectralState project_spectral(const DensityField& rho, const std::vector<int>& mode_indices);

/// Rebuilds the nodal field: mean + sum_j 2 Re(amplitude_j e^{i q x}).
DensityField synthesize_spectral(const SpectralState& state, const Grid1D& grid);

/// Closed-form evolution of the linearized relaxation-diffusion equation:
/// every mode is multiplied by exp[-(k + D q^2 + B q^4) t] with D = theta/b1
/// and B = hbar^2/(4 m b1) (zero when the scenario runs classically); the
/// mean channel relaxes toward rho_eq with rate k.
SpectralState evolve_spectral_rd(const SpectralState& state, double t, const Scenario& sc);

/// Closed-form evolution of the convective flow: every mode is multiplied by
/// exp[-(k + i q V0 - i q^3 hbar^2/(4 m^2 V0)) t]; the mean channel relaxes
/// toward rho_eq.  Amplitudes are preserved when k = 0.
SpectralState evolve_spectral_conv(const SpectralState& state, double t, const Scenario& sc);

/// Same closed forms for the plain electron-gas diffusion (D_e, no q^4 term).
SpectralState evolve_spectral_electron_gas(const SpectralState& state, double t,
                                           const Scenario& sc);

/// Effective phase velocity of mode q under the convective flow:
/// V0 * (1 - (hbar q / (2 m V0))^2).
double convective_phase_velocity(const PhysParams& p, double q);

}  // namespace qhd
