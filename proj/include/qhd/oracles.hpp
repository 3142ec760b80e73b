#pragma once

#include <span>
#include <vector>

#include "qhd/analysis.hpp"
#include "qhd/fields.hpp"
#include "qhd/specfun.hpp"

namespace qhd::oracles {

/// Closed-form sigma^2(t) laws for the free and quartic-well dispersion
/// regimes.
enum class LawKind {
    linear_quantum,       // sigma^2 = hbar * sqrt(t / (m b1))
    classical_cubic_free, // sigma^2 = sqrt(64 theta t^3 / (27 b3))
    quantum_cubic_free,   // sigma^2 = 2 (hbar^2 / (2 m b3))^{1/3} t
    quartic_well          // implicit quartic-well relation, clamped at t*
};

struct DispersionLaw {
    LawKind kind = LawKind::linear_quantum;
    double m = 1.0;
    double hbar = 1.0;
    double theta = 0.0;
    double K = 0.0;
    double b1 = 0.0;
    double b3 = 0.0;

    void validate() const;
    double sigma2(double t) const;
};

/// Unit-mass reference profiles:
///   gaussian:  exp(-x^2 / (2 sigma^2)) / sqrt(2 pi sigma^2)
///   quartic:   Gamma(3/4) exp(-x^4 / (4 sigma^4)) / (pi sigma)
///   abs_cubic: 3 * 3^{1/6} Gamma(2/3) exp(-|x|^3 / (3 sigma^3)) / (4 pi sigma)
/// The grid should span at least 8 sigma so the discrete mass is complete.
DensityField sample_profile(ProfileFamily family, double sigma, const Grid1D& grid,
                            double center = 0.0);

/// Equilibrium scale of the quartic well: sigma_inf = (theta/K)^{1/4}.
double equilibrium_sigma(double K, double theta);

/// Independent check of the quartic-well relation: integrates
///   d sigma / dt = sigma * ((theta - K sigma^4) / (b3 sigma^4))^{1/3}
/// by classical RK4 from sigma(0) = sigma0 (default 1e-3 of the equilibrium
/// scale), clamping at the equilibrium.  Internally the substitution
/// y = sigma^{4/3} removes the sigma -> 0 singularity.  Returns sigma at the
/// requested times (which must be non-negative and increasing).
std::vector<double> scale_ode_oracle(const specfun::QuarticWellDispersion& rel,
                                     std::span<const double> times,
                                     double sigma0 = -1.0);

/// First time at which the RK4 path reaches the equilibrium scale within
/// 1e-6 relative; an independent estimate of the arrival time t*.
double scale_ode_arrival_time(const specfun::QuarticWellDispersion& rel,
                              double sigma0 = -1.0);

}  // namespace qhd::oracles
