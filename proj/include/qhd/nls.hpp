#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "qhd/fields.hpp"
#include "qhd/physics.hpp"

namespace qhd {

/// Complex wavefunction on a periodic grid, units 1/sqrt(length).
struct WaveField {
    Grid1D grid;
    std::vector<std::complex<double>> v;

    WaveField() = default;
    explicit WaveField(const Grid1D& g);
    WaveField(const Grid1D& g, std::vector<std::complex<double>> data);

    static WaveField from_fn(const Grid1D& g,
                             const std::function<std::complex<double>(double)>& f);

    int size() const { return grid.n; }

    /// Integral of |psi|^2 over the grid.
    double norm_sq() const;

    /// Scales so that norm_sq() == 1; throws if the norm vanishes.
    void normalize();

    /// |psi|^2 as a density field.
    DensityField density() const;
};

/// Self-interaction of the measurement-process wave equation.  The strength
/// lambda multiplies the chosen information density:
///   none:    I = 0
///   shannon: I = -lambda * ln|psi|^2   (log floored like every density log)
///   linear:  I = lambda * (1 - |psi|^2)
struct EntropyFunctional {
    enum class Kind { none, shannon, linear };
    Kind kind = Kind::none;
    double lambda = 0.0;

    void validate() const;

    /// Thermal preset: the osmotic-pressure identification lambda = theta.
    static EntropyFunctional thermal_shannon(double theta);

    /// Evaluates the information density for the given |psi|^2.
    ScalarField evaluate(const DensityField& rho) const;
};

/// One second-order split step of
///   i hbar d(psi)/dt = -hbar^2 psi_xx / (2m) + U psi - I psi :
/// half phase rotation by (U - I), full Crank-Nicolson kinetic step (exactly
/// unitary), half phase rotation with I refreshed from the updated density.
/// Norm drift per step stays at round-off (<= 1e-12).
WaveField split_step(const WaveField& psi, double dt, const ScalarField& U,
                     const EntropyFunctional& ent, const PhysParams& params);

/// Hydrodynamic fields of a wavefunction: rho = |psi|^2 and the velocity
/// V = (hbar/m) d(phase)/dx, with the phase unwrapped cell by cell (each
/// nodal jump reduced into (-pi, pi]).  Nodes where rho falls below
/// 1e-12 * max(rho) are masked: V is zero there and `valid` is false, as it
/// is next to them where no two-sided phase difference exists.  `phase_ok`
/// is false when masked nodes split the support, in which case the phase
/// relation between the fragments is not defined and V is reported per
/// fragment only.
struct MadelungFields {
    DensityField rho;
    ScalarField V;
    std::vector<std::uint8_t> valid;
    bool phase_ok = true;
};

MadelungFields madelung_decompose(const WaveField& psi, const PhysParams& params);

/// Mass fraction of the heaviest density basin.  Basins are separated at
/// interior minima that drop to at most half of the smaller neighbouring
/// maximum; shallower ripples do not split a basin.  Returns 1 for a
/// single-peak profile; a symmetric double peak gives 1/2.
double concentration_metric(const DensityField& rho);

/// Variance of a freely spreading Gaussian packet with initial variance s0sq:
/// s0sq * (1 + (hbar t / (2 m s0sq))^2).
double free_gaussian_variance(double s0sq, double t, const PhysParams& params);

}  // namespace qhd
