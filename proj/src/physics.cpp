#include "qhd/physics.hpp"

#include <cmath>
#include <stdexcept>

namespace qhd {

void PhysParams::validate() const {
    if (!(m > 0.0)) throw std::invalid_argument("PhysParams: m must be positive");
    if (!(hbar >= 0.0)) throw std::invalid_argument("PhysParams: hbar must be non-negative");
    if (!(theta >= 0.0)) throw std::invalid_argument("PhysParams: theta must be non-negative");
    if (!(k_rate >= 0.0)) throw std::invalid_argument("PhysParams: k_rate must be non-negative");
    if (!(rho_eq >= 0.0)) throw std::invalid_argument("PhysParams: rho_eq must be non-negative");
    if (!std::isfinite(K) || !std::isfinite(V0))
        throw std::invalid_argument("PhysParams: K and V0 must be finite");
    if (!(nu > 0.0)) throw std::invalid_argument("PhysParams: nu must be positive");
}

ScalarField bohm_potential(const DensityField& rho, const PhysParams& p) {
    const double amp_floor = std::sqrt(1e-30 * rho.max_value());
    if (!(amp_floor > 0.0))
        throw std::invalid_argument("bohm_potential: density has no positive values");

    ScalarField amp(rho.grid);
    for (int i = 0; i < rho.size(); ++i)
        amp.v[i] = std::sqrt(rho.v[i] > 0.0 ? rho.v[i] : 0.0);

    ScalarField d2 = derivative(amp, 2);
    const double pref = -p.hbar * p.hbar / (2.0 * p.m);
    ScalarField q(rho.grid);
    for (int i = 0; i < rho.size(); ++i)
        q.v[i] = pref * d2.v[i] / std::max(amp.v[i], amp_floor);
    return q;
}

ScalarField quantum_pressure(const DensityField& rho, const PhysParams& p) {
    ScalarField lr = log_density(rho);
    ScalarField d2 = derivative(lr, 2);
    const double pref = -p.hbar * p.hbar / (4.0 * p.m);
    ScalarField pq(rho.grid);
    for (int i = 0; i < rho.size(); ++i) pq.v[i] = pref * rho.v[i] * d2.v[i];
    return pq;
}

ScalarField chemical_potential(const DensityField& rho, const ScalarField& U,
                               const PhysParams& p, bool include_quantum) {
    if (!U.grid.same_layout(rho.grid))
        throw std::invalid_argument("chemical_potential: U grid does not match rho");

    ScalarField mu(rho.grid);
    if (include_quantum && p.hbar > 0.0) {
        mu = bohm_potential(rho, p);
    }
    if (p.theta > 0.0) {
        ScalarField lr = log_density(rho);
        for (int i = 0; i < rho.size(); ++i) mu.v[i] += p.theta * lr.v[i];
    }
    for (int i = 0; i < rho.size(); ++i) mu.v[i] += U.v[i];
    return mu;
}

ScalarField drift_velocity(const DensityField& rho, const ScalarField& U,
                           const FrictionLaw& law, const PhysParams& p,
                           bool include_quantum) {
    law.validate(rho.size());
    ScalarField mu = chemical_potential(rho, U, p, include_quantum);
    ScalarField g = derivative(mu, 1);
    ScalarField vel(rho.grid);
    for (int i = 0; i < rho.size(); ++i) {
        switch (law.kind) {
            case FrictionKind::linear:
                vel.v[i] = -g.v[i] / law.b1_at(i);
                break;
            case FrictionKind::cubic:
                vel.v[i] = -signed_cbrt(g.v[i] / law.b3_at(i));
                break;
            case FrictionKind::combined:
                vel.v[i] = invert_friction_coeffs(g.v[i], law.b1_at(i), law.b3_at(i));
                break;
            case FrictionKind::activated:
                vel.v[i] = -law.amplitude * std::sinh(g.v[i] / law.scale);
                break;
        }
    }
    return vel;
}

double electron_gas_diffusion(double m, double hbar, double nu) {
    if (!(m > 0.0) || !(nu > 0.0))
        throw std::invalid_argument("electron_gas_diffusion: m and nu must be positive");
    return hbar * hbar / (4.0 * m * m * nu);
}

double self_consistent_viscosity(double m, double hbar) {
    if (!(m > 0.0)) throw std::invalid_argument("self_consistent_viscosity: m must be positive");
    return hbar / (2.0 * m);
}

}  // namespace qhd
