#pragma once

#include <cmath>
#include <vector>

#include "qhd/grid.hpp"

namespace qhd {

/// Friction force law f(V) relating drift velocity to the applied
/// thermodynamic force.  Steppers only ever use the inverse map
/// V = f^{-1}(g) with g the chemical-potential gradient.
///
///   linear:    f(V) = -b1*V
///   cubic:     f(V) = -b3*V^3
///   combined:  f(V) = -b1*V - b3*V^3
///   activated: f^{-1}(g) = -amplitude * sinh(g / scale)
enum class FrictionKind { linear, cubic, combined, activated };

struct FrictionLaw {
    FrictionKind kind = FrictionKind::linear;
    double b1 = 0.0;
    double b3 = 0.0;
    double amplitude = 0.0;  // activated kind only
    double scale = 0.0;      // activated kind only

    // Optional per-node coefficient profiles; empty means spatially uniform.
    std::vector<double> b1_profile;
    std::vector<double> b3_profile;

    void validate(int grid_n = -1) const;

    bool position_dependent() const {
        return !b1_profile.empty() || !b3_profile.empty();
    }
    double b1_at(int i) const { return b1_profile.empty() ? b1 : b1_profile[i]; }
    double b3_at(int i) const { return b3_profile.empty() ? b3 : b3_profile[i]; }

    // Smallest linear coefficient anywhere on the grid (used for stability
    // estimates; returns the uniform value when no profile is set).
    double b1_min() const;
};

/// Solves f(V) = g for V.  For the combined kind this is the unique real root
/// of b3*V^3 + b1*V + g = 0, found by safeguarded Newton iteration; the
/// residual satisfies |b3 V^3 + b1 V + g| <= 1e-12 * max(1, |g|).
double invert_friction(double g, const FrictionLaw& law);

/// Same solve with explicit coefficients (used at faces where position
/// dependent profiles have been averaged).
double invert_friction_coeffs(double g, double b1, double b3);

/// Odd signed cube root: sign(x) * |x|^{1/3}.
inline double signed_cbrt(double x) { return std::cbrt(x); }

}  // namespace qhd
