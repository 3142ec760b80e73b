#pragma once

#include <cstdint>
#include <vector>

#include "qhd/fields.hpp"

namespace qhd {

/// Centered finite-difference derivative of order 1..4, second-order accurate
/// in the interior.  Boundary rows use wraparound (periodic) or even-mirror
/// ghosts (no-flux).
ScalarField derivative(const ScalarField& f, int order);

/// Trapezoid rule on bounded grids, rectangle rule on periodic ones.
double integrate(const ScalarField& f);
double integrate(const DensityField& f);

/// Scales a density to unit mass.  Throws if the current mass is not positive.
DensityField normalize(DensityField rho);

/// ln(max(rho, floor)).  A non-positive `floor` selects the default
/// 1e-30 * max(rho).  When `floored` is given it receives one flag per node
/// marking where the floor replaced the actual value.
ScalarField log_density(const DensityField& rho, double floor = 0.0,
                        std::vector<std::uint8_t>* floored = nullptr);

}  // namespace qhd
