#pragma once

namespace qhd::specfun {

/// Gamma function for x > 0 (Lanczos approximation, g = 7, nine terms).
/// Relative error stays below 1e-10 across [0.1, 30].
double gamma_fn(double x);

/// Gauss hypergeometric 2F1(a, b; c; z) on z in [0, 1].
///
/// Power series up to z = 0.7; beyond that the z -> 1-z linear connection
/// formula, which requires c - a - b to be non-integral.  At z = 1 the Gauss
/// summation value Gamma(c)Gamma(c-a-b) / (Gamma(c-a)Gamma(c-b)) is returned
/// and needs c - a - b > 0.
double hyp2f1(double a, double b, double c, double z);

/// Scale <-> time map for relaxation in a quartic well U = K x^4 / 4 under
/// purely cubic friction at temperature theta.  The forward map is
///
///   t(sigma) = (3/4) (b3/K)^{1/3} * 2F1(1/3, 1/3; 4/3; u) * u^{1/3},
///   u = K sigma^4 / theta in (0, 1],
///
/// strictly increasing on (0, t*] with the finite arrival time
/// t* = (3/4) (b3/K)^{1/3} Gamma(4/3) Gamma(2/3).  The inverse clamps to the
/// equilibrium scale (theta/K)^{1/4} for t >= t*.
struct QuarticWellDispersion {
    double K = 1.0;
    double theta = 1.0;
    double b3 = 1.0;

    QuarticWellDispersion(double stiffness, double thermal, double cubic_friction);

    double equilibrium_scale() const;  // (theta/K)^{1/4}
    double arrival_time() const;       // t*
    double time_from_scale(double sigma) const;
    double scale_from_time(double t) const;
};

}  // namespace qhd::specfun
