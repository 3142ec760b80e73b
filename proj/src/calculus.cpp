#include "qhd/calculus.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qhd {

ScalarField derivative(const ScalarField& f, int order) {
    if (order < 1 || order > 4)
        throw std::invalid_argument("derivative: order must be 1..4, got " +
                                    std::to_string(order));
    const Grid1D& g = f.grid;
    const int halo = (order <= 2) ? 1 : 2;
    if (g.n < 2 * halo + 4)
        throw std::invalid_argument("derivative: grid too small for requested order");

    ScalarField out(g);
    const double dx = g.dx;
    auto at = [&](int i) { return f.v[resolve_index(i, g)]; };

    for (int i = 0; i < g.n; ++i) {
        double d = 0.0;
        switch (order) {
            case 1:
                d = (at(i + 1) - at(i - 1)) / (2.0 * dx);
                break;
            case 2:
                d = (at(i + 1) - 2.0 * f.v[i] + at(i - 1)) / (dx * dx);
                break;
            case 3:
                d = (-at(i - 2) + 2.0 * at(i - 1) - 2.0 * at(i + 1) + at(i + 2)) /
                    (2.0 * dx * dx * dx);
                break;
            case 4:
                d = (at(i - 2) - 4.0 * at(i - 1) + 6.0 * f.v[i] - 4.0 * at(i + 1) +
                     at(i + 2)) /
                    (dx * dx * dx * dx);
                break;
        }
        out.v[i] = d;
    }
    return out;
}

namespace {

double integrate_values(const std::vector<double>& v, const Grid1D& g) {
    double s = 0.0;
    if (g.bc == Bc::periodic) {
        for (double x : v) s += x;
        return s * g.dx;
    }
    // Trapezoid: boundary nodes carry half weight.
    for (int i = 1; i + 1 < g.n; ++i) s += v[i];
    s += 0.5 * (v.front() + v.back());
    return s * g.dx;
}

}  // namespace

double integrate(const ScalarField& f) { return integrate_values(f.v, f.grid); }
double integrate(const DensityField& f) { return integrate_values(f.v, f.grid); }

DensityField normalize(DensityField rho) {
    const double mass = integrate(rho);
    if (!(mass > 0.0))
        throw std::invalid_argument("normalize: total mass must be positive");
    const double inv = 1.0 / mass;
    for (double& x : rho.v) x *= inv;
    return rho;
}

ScalarField log_density(const DensityField& rho, double floor,
                        std::vector<std::uint8_t>* floored) {
    if (floor <= 0.0) floor = 1e-30 * rho.max_value();
    if (!(floor > 0.0))
        throw std::invalid_argument("log_density: density has no positive values");

    ScalarField out(rho.grid);
    if (floored) floored->assign(rho.v.size(), 0);
    for (size_t i = 0; i < rho.v.size(); ++i) {
        if (rho.v[i] > floor) {
            out.v[i] = std::log(rho.v[i]);
        } else {
            out.v[i] = std::log(floor);
            if (floored) (*floored)[i] = 1;
        }
    }
    return out;
}

}  // namespace qhd
