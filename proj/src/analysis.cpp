#include "qhd/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "qhd/calculus.hpp"

namespace qhd {

double scale_variance_ratio(ProfileFamily family) {
    switch (family) {
        case ProfileFamily::gaussian: return kScaleVarianceGaussian;
        case ProfileFamily::quartic: return kScaleVarianceQuartic;
        case ProfileFamily::abs_cubic: return kScaleVarianceAbsCubic;
    }
    throw std::invalid_argument("scale_variance_ratio: unknown family");
}

double variance(const DensityField& rho) {
    const double mass = integrate(rho);
    if (!(mass > 0.0)) throw std::invalid_argument("variance: total mass must be positive");

    ScalarField xr(rho.grid), x2r(rho.grid);
    for (int i = 0; i < rho.size(); ++i) {
        const double x = rho.grid.x(i);
        xr.v[i] = x * rho.v[i];
        x2r.v[i] = x * x * rho.v[i];
    }
    const double mean = integrate(xr) / mass;
    const double second = integrate(x2r) / mass;
    return second - mean * mean;
}

double scale_param(const DensityField& rho, ProfileFamily family) {
    const double var = variance(rho);
    if (!(var >= 0.0)) throw std::runtime_error("scale_param: negative variance");
    return std::sqrt(var / scale_variance_ratio(family));
}

DispersionSeries local_exponent(DispersionSeries series) {
    const int n = static_cast<int>(series.size());
    for (int i = 0; i < n; ++i) {
        series[i].alpha.reset();
        if (!(series[i].t > 0.0) || !(series[i].sigma2 > 0.0))
            throw std::invalid_argument("local_exponent: needs positive t and sigma2");
        if (i > 0 && !(series[i].t > series[i - 1].t))
            throw std::invalid_argument("local_exponent: times must be strictly increasing");
    }
    for (int i = 1; i + 1 < n; ++i) {
        const double dlnt = std::log(series[i + 1].t) - std::log(series[i - 1].t);
        const double dlns = std::log(series[i + 1].sigma2) - std::log(series[i - 1].sigma2);
        series[i].alpha = dlns / dlnt;
    }
    return series;
}

Regime classify_regime(double alpha, double tol) {
    if (alpha > 1.0 + tol) return Regime::superdiffusive;
    if (alpha < 1.0 - tol) return Regime::subdiffusive;
    return Regime::normal;
}

ErrorNorms error_norms(const ScalarField& a, const ScalarField& b) {
    if (!a.grid.same_layout(b.grid))
        throw std::invalid_argument("error_norms: grids do not match");
    ScalarField d2(a.grid);
    ErrorNorms out;
    for (int i = 0; i < a.size(); ++i) {
        const double d = a.v[i] - b.v[i];
        d2.v[i] = d * d;
        out.linf = std::max(out.linf, std::abs(d));
    }
    out.l2 = std::sqrt(integrate(d2));
    return out;
}

double fit_loglog_slope(const DispersionSeries& series, double t_lo, double t_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& p : series) {
        if (p.t < t_lo || p.t > t_hi) continue;
        if (!(p.t > 0.0) || !(p.sigma2 > 0.0)) continue;
        const double x = std::log(p.t), y = std::log(p.sigma2);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 3) throw std::invalid_argument("fit_loglog_slope: fewer than 3 samples in window");
    const double det = m * sxx - sx * sx;
    if (det == 0.0) throw std::runtime_error("fit_loglog_slope: degenerate time window");
    return (m * sxy - sx * sy) / det;
}

}  // namespace qhd
