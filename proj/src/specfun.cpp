#include "qhd/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qhd::specfun {

namespace {

constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};

// Valid for any real x away from the poles 0, -1, -2, ...; reflection handles
// the left half line so the connection formula can use negative arguments.
double gamma_any(double x) {
    if (x < 0.5) {
        const double s = std::sin(std::numbers::pi * x);
        if (s == 0.0)
            throw std::domain_error("gamma: pole at non-positive integer argument");
        return std::numbers::pi / (s * gamma_any(1.0 - x));
    }
    const double z = x - 1.0;
    double acc = kLanczos[0];
    for (int i = 1; i < 9; ++i) acc += kLanczos[i] / (z + i);
    const double t = z + kLanczosG + 0.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * acc;
}

bool near_integer(double x, double tol = 1e-8) {
    return std::abs(x - std::round(x)) < tol;
}

// Plain power series; converges for |z| < 1, used here up to z = 0.7.
double hyp2f1_series(double a, double b, double c, double z) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 4000; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) return sum;
    }
    throw std::runtime_error("hyp2f1: series failed to converge");
}

}  // namespace

double gamma_fn(double x) {
    if (!(x > 0.0))
        throw std::domain_error("gamma_fn: argument must be positive, got " +
                                std::to_string(x));
    return gamma_any(x);
}

double hyp2f1(double a, double b, double c, double z) {
    if (c <= 0.0 && near_integer(c, 1e-12))
        throw std::domain_error("hyp2f1: c is a non-positive integer");
    if (!(z >= 0.0 && z <= 1.0))
        throw std::domain_error("hyp2f1: z must lie in [0, 1], got " + std::to_string(z));

    if (z == 0.0) return 1.0;

    const double s = c - a - b;
    if (z == 1.0) {
        if (!(s > 0.0))
            throw std::domain_error("hyp2f1: divergent at z = 1 (c - a - b <= 0)");
        return gamma_any(c) * gamma_any(s) / (gamma_any(c - a) * gamma_any(c - b));
    }

    if (z <= 0.7) return hyp2f1_series(a, b, c, z);

    if (near_integer(s))
        throw std::domain_error(
            "hyp2f1: z -> 1-z connection needs non-integral c - a - b");
    const double w = 1.0 - z;
    const double t1 = gamma_any(c) * gamma_any(s) / (gamma_any(c - a) * gamma_any(c - b)) *
                      hyp2f1_series(a, b, 1.0 - s, w);
    const double t2 = gamma_any(c) * gamma_any(-s) / (gamma_any(a) * gamma_any(b)) *
                      std::pow(w, s) * hyp2f1_series(c - a, c - b, 1.0 + s, w);
    return t1 + t2;
}

QuarticWellDispersion::QuarticWellDispersion(double stiffness, double thermal,
                                             double cubic_friction)
    : K(stiffness), theta(thermal), b3(cubic_friction) {
    if (!(K > 0.0) || !(theta > 0.0) || !(b3 > 0.0))
        throw std::invalid_argument(
            "QuarticWellDispersion: K, theta and b3 must all be positive");
}

double QuarticWellDispersion::equilibrium_scale() const {
    return std::pow(theta / K, 0.25);
}

double QuarticWellDispersion::arrival_time() const {
    return 0.75 * std::cbrt(b3 / K) * gamma_fn(4.0 / 3.0) * gamma_fn(2.0 / 3.0);
}

double QuarticWellDispersion::time_from_scale(double sigma) const {
    if (sigma == 0.0) return 0.0;
    if (!(sigma > 0.0))
        throw std::domain_error("time_from_scale: sigma must be non-negative");
    const double u = K * sigma * sigma * sigma * sigma / theta;
    if (u > 1.0 + 1e-12)
        throw std::domain_error(
            "time_from_scale: sigma exceeds the equilibrium scale");
    const double uc = std::min(u, 1.0);
    return 0.75 * std::cbrt(b3 / K) * hyp2f1(1.0 / 3.0, 1.0 / 3.0, 4.0 / 3.0, uc) *
           std::cbrt(uc);
}

double QuarticWellDispersion::scale_from_time(double t) const {
    if (t == 0.0) return 0.0;
    if (!(t > 0.0)) throw std::domain_error("scale_from_time: t must be non-negative");
    const double sig_eq = equilibrium_scale();
    if (t >= arrival_time()) return sig_eq;

    // Bisection on u in (0, 1]; t(u) is strictly increasing.
    double lo = 0.0, hi = 1.0;
    const double tol = 1e-10 * std::max(1.0, t);
    double u = 0.5;
    for (int it = 0; it < 200; ++it) {
        u = 0.5 * (lo + hi);
        const double tu = time_from_scale(sig_eq * std::pow(u, 0.25));
        const double r = tu - t;
        if (std::abs(r) <= tol) break;
        if (r > 0.0)
            hi = u;
        else
            lo = u;
        if (hi - lo <= std::numeric_limits<double>::denorm_min()) break;
    }
    return sig_eq * std::pow(u, 0.25);
}

}  // namespace qhd::specfun
