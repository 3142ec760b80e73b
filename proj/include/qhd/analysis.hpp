#pragma once

#include <optional>
#include <vector>

#include "qhd/fields.hpp"

namespace qhd {

/// Self-similar profile families produced by the dispersion scenarios.
enum class ProfileFamily { gaussian, quartic, abs_cubic };

/// variance = <x^2> - <x>^2 of sigma^2 for each family, i.e. variance(rho)
/// of the unit-scale profile.  Frozen from moment-ratio quadrature:
///   gaussian:  1
///   quartic:   2 Gamma(3/4) / Gamma(1/4)
///   abs_cubic: 3^{2/3} / Gamma(1/3)
inline constexpr double kScaleVarianceGaussian = 1.0;
inline constexpr double kScaleVarianceQuartic = 0.6759782400672847;
inline constexpr double kScaleVarianceAbsCubic = 0.7764582113784204;

double scale_variance_ratio(ProfileFamily family);

/// Second central moment of x under rho / mass(rho).
double variance(const DensityField& rho);

/// Scale parameter sigma of the family: sigma = sqrt(variance / ratio).
double scale_param(const DensityField& rho, ProfileFamily family);

struct DispersionPoint {
    double t = 0.0;
    double sigma2 = 0.0;
    std::optional<double> alpha;  // local log-log slope, absent at the ends
};
using DispersionSeries = std::vector<DispersionPoint>;

/// Fills alpha with the centered difference of ln(sigma2) against ln(t).
/// Requires strictly increasing positive times and positive sigma2.
DispersionSeries local_exponent(DispersionSeries series);

enum class Regime { subdiffusive, normal, superdiffusive };

/// alpha within tol of 1 is normal; below is sub-, above super-diffusive.
Regime classify_regime(double alpha, double tol = 0.05);

struct ErrorNorms {
    double l2 = 0.0;
    double linf = 0.0;
};

/// Grid-weighted L2 norm and max norm of (a - b); grids must match.
ErrorNorms error_norms(const ScalarField& a, const ScalarField& b);

/// Least-squares slope of ln(y) against ln(t) over [t_lo, t_hi].
double fit_loglog_slope(const DispersionSeries& series, double t_lo, double t_hi);

}  // namespace qhd
