#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qhd/grid.hpp"

namespace qhd {

/// Plain nodal scalar data on a grid (potentials, velocities, log-densities...).
struct ScalarField {
    Grid1D grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid1D& g) : grid(g), v(g.n, 0.0) {}
    ScalarField(const Grid1D& g, std::vector<double> data)
        : grid(g), v(std::move(data)) {
        if (static_cast<int>(v.size()) != grid.n)
            throw std::invalid_argument("ScalarField: data size does not match grid");
    }

    static ScalarField from_fn(const Grid1D& g, const std::function<double(double)>& f) {
        ScalarField s(g);
        for (int i = 0; i < g.n; ++i) s.v[i] = f(g.x(i));
        return s;
    }

    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }
    int size() const { return grid.n; }
};

/// Probability density.  Same layout as ScalarField; a distinct type so that
/// interfaces say which arguments must be non-negative and normalized.
struct DensityField {
    Grid1D grid;
    std::vector<double> v;

    DensityField() = default;
    explicit DensityField(const Grid1D& g) : grid(g), v(g.n, 0.0) {}
    DensityField(const Grid1D& g, std::vector<double> data)
        : grid(g), v(std::move(data)) {
        if (static_cast<int>(v.size()) != grid.n)
            throw std::invalid_argument("DensityField: data size does not match grid");
    }

    static DensityField from_fn(const Grid1D& g, const std::function<double(double)>& f) {
        DensityField r(g);
        for (int i = 0; i < g.n; ++i) r.v[i] = f(g.x(i));
        return r;
    }

    ScalarField as_scalar() const { return ScalarField(grid, v); }

    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }
    int size() const { return grid.n; }

    double min_value() const {
        double m = v.empty() ? 0.0 : v[0];
        for (double x : v)
            if (x < m) m = x;
        return m;
    }
    double max_value() const {
        double m = v.empty() ? 0.0 : v[0];
        for (double x : v)
            if (x > m) m = x;
        return m;
    }
};

}  // namespace qhd
