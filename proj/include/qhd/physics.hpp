#pragma once

#include "qhd/calculus.hpp"
#include "qhd/fields.hpp"
#include "qhd/friction.hpp"

namespace qhd {

/// Physical constants of a scenario, in working units (typically hbar = m = 1).
/// theta is the thermal energy k_B T; K the quartic potential stiffness;
/// k_rate / rho_eq the relaxation channel; V0 a uniform flow speed; nu a
/// kinematic viscosity.
struct PhysParams {
    double m = 1.0;
    double hbar = 1.0;
    double theta = 0.0;
    double K = 0.0;
    double k_rate = 0.0;
    double rho_eq = 0.0;
    double V0 = 0.0;
    double nu = 1.0;

    void validate() const;
};

/// Quantum potential Q = -hbar^2/(2m) * (sqrt(rho))'' / sqrt(rho),
/// discretized through sqrt(rho) with the amplitude floored at
/// sqrt(1e-30 * max rho) before the division.
ScalarField bohm_potential(const DensityField& rho, const PhysParams& p);

/// Quantum pressure p_Q = -hbar^2/(4m) * rho * (ln rho)''.
ScalarField quantum_pressure(const DensityField& rho, const PhysParams& p);

/// mu = Q + theta * ln(rho) + U.  The thermal term is omitted entirely when
/// theta == 0 and the quantum term when include_quantum is false, so cold or
/// classical runs never evaluate floored logarithms they do not need.
ScalarField chemical_potential(const DensityField& rho, const ScalarField& U,
                               const PhysParams& p, bool include_quantum = true);

/// Nodewise drift V = f^{-1}(d mu/dx), honoring position-dependent friction
/// coefficients when the law carries profiles.
ScalarField drift_velocity(const DensityField& rho, const ScalarField& U,
                           const FrictionLaw& law, const PhysParams& p,
                           bool include_quantum = true);

/// Effective diffusion coefficient of the viscous electron gas closure,
/// D_e = hbar^2 / (4 m^2 nu).
double electron_gas_diffusion(double m, double hbar, double nu);

/// Positive fixed point of D_e(nu) = nu, i.e. nu = hbar / (2m).
double self_consistent_viscosity(double m, double hbar);

}  // namespace qhd
