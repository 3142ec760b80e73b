#pragma once

#include <optional>
#include <vector>

#include "qhd/analysis.hpp"
#include "qhd/fields.hpp"
#include "qhd/physics.hpp"

namespace qhd {

/// Model families integrated by run().  All overdamped density equations are
/// conservative flux-form updates; the reaction/convective/electron-gas
/// members are linear and carry a relaxation channel toward rho_eq.
enum class Equation {
    general,                // continuity with V = f^{-1}(d mu/dx), any friction law
    smoluchowski,           // general restricted to the linear law
    cubic_friction,         // general restricted to the cubic law
    quantum_cubic_full,     // cold cubic-friction flow, log-derivative bracket
    quantum_cubic_reduced,  // same with the third log-derivative dropped
    reaction_diffusion,     // diffusion + 4th-order quantum term + relaxation
    convective,             // uniform flow + 3rd-order quantum dispersion + relaxation
    electron_gas            // plain diffusion with D_e = hbar^2/(4 m^2 nu)
};

/// Governs the treatment of the stiff quantum term.  `automatic` and `on`
/// select, where a scheme is available, an implicit or semi-implicit solve
/// that removes the fourth-order stability bound on dt; `off` forces the
/// fully explicit update everywhere.
enum class SemiImplicit { automatic, on, off };

enum class PotentialKind { none, quartic, tabulated };

struct PotentialSpec {
    PotentialKind kind = PotentialKind::none;
    std::vector<double> table;  // tabulated only; one value per node

    ScalarField build(const Grid1D& grid, const PhysParams& p) const;
};

struct TimeControl {
    double t_end = 1.0;
    double dt = 0.0;       // <= 0 selects the automatic policy
    double safety = 0.4;   // multiplies the stability/accuracy estimate
    double noise_tol = 1e-4;  // tolerated grid-noise fraction for cube-root fluxes
};

enum class SnapshotPolicy { none, final, all };

struct OutputControl {
    int every = 1;  // steps per record
    SnapshotPolicy snapshots = SnapshotPolicy::none;
};

struct Scenario {
    Equation equation = Equation::smoluchowski;
    PhysParams params;
    FrictionLaw law;
    PotentialSpec potential;
    DensityField initial;
    TimeControl time;
    OutputControl output;
    bool classical = false;  // true disables the quantum potential term
    SemiImplicit semi_implicit = SemiImplicit::automatic;
    ProfileFamily family = ProfileFamily::gaussian;  // sigma2 convention for records

    void validate() const;
    bool quantum_on() const;
};

struct TimeSeriesRecord {
    double t = 0.0;
    double mass = 0.0;
    double variance = 0.0;
    double sigma2 = 0.0;
    std::optional<DensityField> snapshot;
};

/// Thrown when a step produces non-finite values or positivity cannot be
/// restored by halving dt.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- single steps -----------------------------------------------------------
//
// Each stepper advances one dt and returns the new density.  Explicit steps
// throw std::invalid_argument when dt exceeds the stability estimate below.
//
// Quantum overdamped steps with a linear friction law on a bounded grid are
// integrated implicitly when stabilization is enabled: one backward-Euler
// step solved by damped Newton iteration on the conservative flux balance,
// with a density-regularized mobility that switches transport off below
// resolution.  The result applies the converged fluxes from the input state,
// so mass is conserved to round-off and no dt stability bound applies; a step
// that cannot converge even after internal halving throws NumericalFailure
// via the run() driver's retry path.

DensityField step_overdamped_general(const DensityField& rho, const Scenario& sc, double dt);
DensityField step_smoluchowski(const DensityField& rho, const Scenario& sc, double dt);
DensityField step_cubic(const DensityField& rho, const Scenario& sc, double dt);
DensityField step_quantum_cubic(const DensityField& rho, const Scenario& sc, double dt,
                                bool full_bracket);
DensityField step_reaction_diffusion(const DensityField& rho, const Scenario& sc, double dt);
DensityField step_convective(const DensityField& rho, const Scenario& sc, double dt);
DensityField step_electron_gas(const DensityField& rho, const Scenario& sc, double dt);

/// Explicit-scheme stability estimate: min over the active operators of
///   diffusive   dx^2 / (2 D)            with D summed over linear channels,
///   biharmonic  dx^4 (4 m b1) / (2 hbar^2),
///   advective   dx / |V0|  (and the RK4 bound for the dispersive term),
///   cube-root   min( dx / max|V|, grid-noise damping bound ),
/// where the cube-root noise bound is eps^{2/3} dx^{4/3} (b3/(2 theta))^{1/3}
/// for thermal runs and eps^{2/3} dx^2 (m b3 / (2 hbar^2))^{1/3} for cold
/// quantum runs, eps = time.noise_tol.  The result already carries the
/// scenario safety factor; explicit steps reject any dt above it.
double stable_dt(const Scenario& sc, const DensityField& state);

/// Step size the run driver will actually use at this state (safety factor
/// included).  When an implicit or semi-implicit scheme absorbs the stiff
/// quantum term the biharmonic stability bound is replaced by accuracy
/// bounds: the quantum-diffusion scale dx^2 (2m/hbar)/2 plus a front CFL
/// bound for the implicit path, mode-resolution bounds for the
/// Crank-Nicolson relaxation equations.
double effective_dt(const Scenario& sc, const DensityField& state);

/// Integrates the scenario to t_end.  Records every `output.every` accepted
/// steps plus the initial and final states.  Steps that break positivity
/// (density below -1e-12) are retried at dt/2, at most 20 times, before
/// NumericalFailure is thrown; non-finite values abort immediately.
std::vector<TimeSeriesRecord> run(const Scenario& sc);

}  // namespace qhd
