#pragma once

#include <stdexcept>
#include <string>

namespace qhd {

/// Boundary handling for all discrete operators.
enum class Bc { periodic, no_flux };

/// Uniform one-dimensional grid.
///
/// Periodic grids treat x_max as the wrap point: nodes cover [x_min, x_max)
/// and dx = L/n.  Bounded (no-flux) grids place nodes on both ends, so
/// dx = L/(n-1) and the boundary nodes own half cells in all conservative
/// bookkeeping.
struct Grid1D {
    double x_min = 0.0;
    double x_max = 1.0;
    int n = 0;
    Bc bc = Bc::no_flux;
    double dx = 0.0;

    Grid1D() = default;

    Grid1D(double xmin, double xmax, int npts, Bc bcond)
        : x_min(xmin), x_max(xmax), n(npts), bc(bcond) {
        if (!(x_max > x_min))
            throw std::invalid_argument("Grid1D: x_max must exceed x_min");
        if (n < 8)
            throw std::invalid_argument("Grid1D: need at least 8 points, got " +
                                        std::to_string(n));
        dx = (bc == Bc::periodic) ? (x_max - x_min) / n
                                  : (x_max - x_min) / (n - 1);
    }

    double x(int i) const { return x_min + i * dx; }
    double length() const { return x_max - x_min; }

    bool same_layout(const Grid1D& o) const {
        return x_min == o.x_min && x_max == o.x_max && n == o.n && bc == o.bc;
    }
};

// Ghost-node index resolution used by every stencil in the project.
inline int wrap_index(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

// Even reflection about the boundary nodes: f(-i) = f(i), f(n-1+i) = f(n-1-i).
inline int mirror_index(int i, int n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return i;
}

inline int resolve_index(int i, const Grid1D& g) {
    return g.bc == Bc::periodic ? wrap_index(i, g.n) : mirror_index(i, g.n);
}

}  // namespace qhd
