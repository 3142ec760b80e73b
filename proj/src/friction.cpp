#include "qhd/friction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qhd {

void FrictionLaw::validate(int grid_n) const {
    auto check_profile = [&](const std::vector<double>& p, const char* name) {
        if (p.empty()) return;
        if (grid_n >= 0 && static_cast<int>(p.size()) != grid_n)
            throw std::invalid_argument(std::string("FrictionLaw: ") + name +
                                        " profile length does not match grid");
        for (double c : p)
            if (!(c >= 0.0) || !std::isfinite(c))
                throw std::invalid_argument(std::string("FrictionLaw: ") + name +
                                            " profile has a negative or non-finite entry");
    };
    switch (kind) {
        case FrictionKind::linear:
            if (!(b1 > 0.0) && b1_profile.empty())
                throw std::invalid_argument("FrictionLaw: linear kind needs b1 > 0");
            break;
        case FrictionKind::cubic:
            if (!(b3 > 0.0) && b3_profile.empty())
                throw std::invalid_argument("FrictionLaw: cubic kind needs b3 > 0");
            break;
        case FrictionKind::combined:
            if (!(b1 > 0.0) || !(b3 > 0.0))
                throw std::invalid_argument("FrictionLaw: combined kind needs b1 > 0 and b3 > 0");
            break;
        case FrictionKind::activated:
            if (!(amplitude > 0.0) || !(scale > 0.0))
                throw std::invalid_argument(
                    "FrictionLaw: activated kind needs amplitude > 0 and scale > 0");
            break;
    }
    check_profile(b1_profile, "b1");
    check_profile(b3_profile, "b3");
    if (kind == FrictionKind::linear && !b1_profile.empty())
        for (double c : b1_profile)
            if (!(c > 0.0))
                throw std::invalid_argument("FrictionLaw: b1 profile must stay positive");
}

double FrictionLaw::b1_min() const {
    if (b1_profile.empty()) return b1;
    return *std::min_element(b1_profile.begin(), b1_profile.end());
}

double invert_friction_coeffs(double g, double b1, double b3) {
    if (g == 0.0) return 0.0;
    if (b3 <= 0.0) return -g / b1;
    if (b1 <= 0.0) return -signed_cbrt(g / b3);

    // Unique real root of h(V) = b3 V^3 + b1 V + g, h strictly increasing.
    // Both terms of h(V*) share the sign of V*, so each is bounded by |g|.
    const double vcap = std::min(std::abs(g) / b1, std::cbrt(std::abs(g) / b3));
    double lo, hi;
    if (g > 0.0) {
        lo = -vcap;
        hi = 0.0;
    } else {
        lo = 0.0;
        hi = vcap;
    }

    auto h = [&](double v) { return (b3 * v * v + b1) * v + g; };
    const double tol = 1e-13 * std::max(1.0, std::abs(g));

    double v = (b1 * b1 >= b3 * std::abs(g)) ? -g / b1 : -signed_cbrt(g / b3);
    v = std::clamp(v, lo, hi);
    for (int it = 0; it < 60; ++it) {
        const double r = h(v);
        if (std::abs(r) <= tol) return v;
        if (r > 0.0)
            hi = v;
        else
            lo = v;
        const double dh = 3.0 * b3 * v * v + b1;
        double vn = v - r / dh;
        if (!(vn > lo) || !(vn < hi)) vn = 0.5 * (lo + hi);  // bisection safeguard
        v = vn;
    }
    return v;
}

double invert_friction(double g, const FrictionLaw& law) {
    switch (law.kind) {
        case FrictionKind::linear:
            return -g / law.b1;
        case FrictionKind::cubic:
            return -signed_cbrt(g / law.b3);
        case FrictionKind::combined:
            return invert_friction_coeffs(g, law.b1, law.b3);
        case FrictionKind::activated:
            return -law.amplitude * std::sinh(g / law.scale);
    }
    return std::numeric_limits<double>::quiet_NaN();  // unreachable
}

}  // namespace qhd
