#include "qhd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qhd/calculus.hpp"
#include "qhd/detail/tridiag.hpp"

namespace qhd {

namespace {

constexpr double kPositivityFloor = -1e-12;

bool is_overdamped(Equation e) {
    return e == Equation::general || e == Equation::smoluchowski ||
           e == Equation::cubic_friction || e == Equation::quantum_cubic_full ||
           e == Equation::quantum_cubic_reduced;
}

bool is_flux_conservative(Equation e) { return is_overdamped(e); }

}  // namespace

ScalarField PotentialSpec::build(const Grid1D& grid, const PhysParams& p) const {
    ScalarField u(grid);
    switch (kind) {
        case PotentialKind::none:
            break;
        case PotentialKind::quartic:
            for (int i = 0; i < grid.n; ++i) {
                const double x = grid.x(i);
                u.v[i] = 0.25 * p.K * x * x * x * x;
            }
            break;
        case PotentialKind::tabulated:
            if (static_cast<int>(table.size()) != grid.n)
                throw std::invalid_argument("PotentialSpec: table length does not match grid");
            u.v = table;
            break;
    }
    return u;
}

bool Scenario::quantum_on() const {
    if (equation == Equation::quantum_cubic_full ||
        equation == Equation::quantum_cubic_reduced)
        return true;
    if (equation == Equation::electron_gas) return false;
    return !classical && params.hbar > 0.0;
}

void Scenario::validate() const {
    params.validate();
    if (initial.size() == 0) throw std::invalid_argument("Scenario: initial density is empty");
    const Grid1D& g = initial.grid;
    if (initial.min_value() < 0.0)
        throw std::invalid_argument("Scenario: initial density has negative entries");
    const double mass = integrate(initial);
    if (std::abs(mass - 1.0) > 1e-8)
        throw std::invalid_argument("Scenario: initial density is not normalized (mass = " +
                                    std::to_string(mass) + ")");

    if (!(time.t_end >= 0.0)) throw std::invalid_argument("Scenario: t_end must be >= 0");
    if (!(time.safety > 0.0 && time.safety <= 1.0))
        throw std::invalid_argument("Scenario: safety must lie in (0, 1]");
    if (!(time.noise_tol > 0.0 && time.noise_tol < 1.0))
        throw std::invalid_argument("Scenario: noise_tol must lie in (0, 1)");
    if (output.every < 1) throw std::invalid_argument("Scenario: output.every must be >= 1");

    const bool linear_family = !is_overdamped(equation);
    if (linear_family && potential.kind != PotentialKind::none)
        throw std::invalid_argument("Scenario: external potential only applies to the "
                                    "overdamped equations");
    if (potential.kind == PotentialKind::quartic && !(params.K > 0.0))
        throw std::invalid_argument("Scenario: quartic potential needs K > 0");
    if (potential.kind == PotentialKind::tabulated &&
        static_cast<int>(potential.table.size()) != g.n)
        throw std::invalid_argument("Scenario: tabulated potential length does not match grid");

    switch (equation) {
        case Equation::general:
            law.validate(g.n);
            break;
        case Equation::smoluchowski:
            if (law.kind != FrictionKind::linear)
                throw std::invalid_argument("Scenario: smoluchowski requires the linear law");
            law.validate(g.n);
            if (!(law.b1_min() > 0.0))
                throw std::invalid_argument("Scenario: smoluchowski requires b1 > 0");
            break;
        case Equation::cubic_friction:
            if (law.kind != FrictionKind::cubic)
                throw std::invalid_argument("Scenario: cubic_friction requires the cubic law");
            law.validate(g.n);
            break;
        case Equation::quantum_cubic_full:
        case Equation::quantum_cubic_reduced:
            if (law.kind != FrictionKind::cubic)
                throw std::invalid_argument("Scenario: quantum_cubic requires the cubic law");
            law.validate(g.n);
            if (params.theta != 0.0)
                throw std::invalid_argument("Scenario: quantum_cubic is a cold (theta = 0) model");
            if (classical)
                throw std::invalid_argument("Scenario: quantum_cubic cannot run classically");
            if (!(params.hbar > 0.0))
                throw std::invalid_argument("Scenario: quantum_cubic needs hbar > 0");
            if (potential.kind != PotentialKind::none)
                throw std::invalid_argument("Scenario: quantum_cubic is free (no potential)");
            if (semi_implicit == SemiImplicit::on)
                throw std::invalid_argument(
                    "Scenario: quantum_cubic has no semi-implicit scheme");
            break;
        case Equation::reaction_diffusion:
            if (law.kind != FrictionKind::linear || !(law.b1 > 0.0))
                throw std::invalid_argument(
                    "Scenario: reaction_diffusion needs the linear law with b1 > 0");
            break;
        case Equation::convective:
            if (g.bc != Bc::periodic)
                throw std::invalid_argument("Scenario: convective requires a periodic grid");
            if (params.V0 == 0.0)
                throw std::invalid_argument("Scenario: convective requires V0 != 0");
            break;
        case Equation::electron_gas:
            break;  // params.validate already checks nu > 0
    }
}

namespace {

// ---------------------------------------------------------------------------
// Overdamped conservative flux machinery.
//
// Bounded grids carry n-1 interior faces and zero-flux boundary faces; the
// boundary nodes own half cells, which makes the update telescope exactly
// against the trapezoid mass.  Periodic grids carry n faces.
// ---------------------------------------------------------------------------

struct FaceFluxes {
    std::vector<double> flux;  // face f sits between nodes f and f+1 (mod n)
    double max_speed = 0.0;    // over faces with non-negligible density
};

bool stabilizer_enabled(const Scenario& sc) {
    if (!is_overdamped(sc.equation)) return false;
    if (sc.semi_implicit == SemiImplicit::off) return false;
    if (sc.semi_implicit == SemiImplicit::on) {
        if (!(sc.law.b1_min() > 0.0))
            throw std::invalid_argument(
                "Scenario: semi_implicit=on needs a positive linear friction coefficient");
        return sc.quantum_on();
    }
    // automatic: absorb the stiff linearized term of linear-law quantum runs
    return sc.quantum_on() && sc.law.kind == FrictionKind::linear && sc.law.b1_min() > 0.0;
}

double face_velocity(const FrictionLaw& law, double g, double b1f, double b3f) {
    switch (law.kind) {
        case FrictionKind::linear:
            return -g / b1f;
        case FrictionKind::cubic:
            return -signed_cbrt(g / b3f);
        case FrictionKind::combined:
            return invert_friction_coeffs(g, b1f, b3f);
        case FrictionKind::activated:
            return -law.amplitude * std::sinh(g / law.scale);
    }
    return 0.0;
}

// Turns face velocities into conservative fluxes.  In the smooth bulk the
// face density is the arithmetic mean (keeps the update second order and the
// equilibrium stencil exact).  A face switches to donor-cell (upwind) density
// in two regimes:
//   - steep faces, where adjacent densities differ by more than a factor
//     ~3: the mean is then dominated by the larger side and overstates the
//     density at the face by up to half that ratio.  On a spreading front
//     this error rectifies -- the outward phase drains the small cell by its
//     own content while the inward phase refills it from the inflated mean --
//     which stalls the front and, for the cube-root laws, grinds dt to
//     nothing trying to keep the drained cell positive;
//   - tail faces, where either density is many orders below the peak and the
//     velocity itself is discretization noise.
// Donor faces get a CFL-limited velocity (Courant <= 0.45 per face, so a
// cell bounded by two donor faces cannot go negative in one step).  Steep
// faces still carry real mass, so they feed max_speed -- the advective dt
// control -- while tail faces, whose clamped transport is unconditionally
// stable and whose mass is negligible, do not.  A dt of zero disables the
// clamp (estimation-only pass).
FaceFluxes assemble_fluxes(const DensityField& rho, const std::vector<double>& vel,
                           double dt, bool donor_all) {
    const Grid1D& g = rho.grid;
    const int n = g.n;
    const int nfaces = (g.bc == Bc::periodic) ? n : n - 1;
    const double max_rho = rho.max_value();
    const double tail = 1e-10 * max_rho;
    const double vcap = (dt > 0.0) ? 0.45 * g.dx / dt
                                   : std::numeric_limits<double>::infinity();

    FaceFluxes out;
    out.flux.assign(nfaces, 0.0);
    for (int f = 0; f < nfaces; ++f) {
        const int i = f;
        const int j = (f + 1) % n;
        double v = vel[f];
        const double lo = std::min(rho.v[i], rho.v[j]);
        const double hi = std::max(rho.v[i], rho.v[j]);
        if (donor_all || lo <= tail || lo < 0.35 * hi) {
            if (lo > tail) out.max_speed = std::max(out.max_speed, std::abs(v));
            if (std::abs(v) > vcap) v = (v > 0.0) ? vcap : -vcap;
            out.flux[f] = std::max((v > 0.0) ? rho.v[i] : rho.v[j], 0.0) * v;
        } else {
            out.flux[f] = 0.5 * (rho.v[i] + rho.v[j]) * v;
            out.max_speed = std::max(out.max_speed, std::abs(vel[f]));
        }
    }
    return out;
}

std::vector<double> mu_face_velocities(const DensityField& rho, const ScalarField& mu,
                                       const Scenario& sc) {
    const Grid1D& g = rho.grid;
    const int n = g.n;
    const int nfaces = (g.bc == Bc::periodic) ? n : n - 1;
    const double dx = g.dx;

    double mu_scale = 1.0;
    for (double m : mu.v) mu_scale = std::max(mu_scale, std::abs(m));
    // Gradients at the round-off level of mu are treated as exact zeros so
    // that discrete equilibria stay frozen even under cube-root response.
    const double g_dead = 1e-13 * mu_scale / dx;

    std::vector<double> vel(nfaces, 0.0);
    for (int f = 0; f < nfaces; ++f) {
        const int i = f;
        const int j = (f + 1) % n;
        const double grad = (mu.v[j] - mu.v[i]) / dx;
        if (std::abs(grad) > g_dead) {
            const double b1f = 0.5 * (sc.law.b1_at(i) + sc.law.b1_at(j));
            const double b3f = 0.5 * (sc.law.b3_at(i) + sc.law.b3_at(j));
            vel[f] = face_velocity(sc.law, grad, b1f, b3f);
        }
    }
    return vel;
}

FaceFluxes mu_face_fluxes(const DensityField& rho, const ScalarField& mu,
                          const Scenario& sc, double dt) {
    return assemble_fluxes(rho, mu_face_velocities(rho, mu, sc), dt);
}

// Flux divergence -> time derivative, with half cells at no-flux boundaries.
std::vector<double> flux_rate(const Grid1D& g, const std::vector<double>& flux) {
    const int n = g.n;
    const double dx = g.dx;
    std::vector<double> rate(n);
    if (g.bc == Bc::periodic) {
        for (int i = 0; i < n; ++i) {
            const double fr = flux[i];
            const double fl = flux[(i + n - 1) % n];
            rate[i] = -(fr - fl) / dx;
        }
    } else {
        rate[0] = -flux[0] / (0.5 * dx);
        for (int i = 1; i + 1 < n; ++i) rate[i] = -(flux[i] - flux[i - 1]) / dx;
        rate[n - 1] = flux[n - 2] / (0.5 * dx);
    }
    return rate;
}

// Explicit stability menu; max_speed < 0 means "not yet known".
double explicit_menu(const Scenario& sc, const Grid1D& g, double max_speed,
                     bool include_biharmonic) {
    const double dx = g.dx;
    const PhysParams& p = sc.params;
    double lim = std::numeric_limits<double>::infinity();

    const bool quantum = sc.quantum_on();

    if (is_overdamped(sc.equation)) {
        double b1 = sc.law.b1_min();
        double b3 = sc.law.b3;
        if (!sc.law.b3_profile.empty())
            b3 = *std::min_element(sc.law.b3_profile.begin(), sc.law.b3_profile.end());
        if (sc.law.kind == FrictionKind::activated)
            b1 = sc.law.scale / sc.law.amplitude;  // small-gradient slope
        if (b1 > 0.0 && p.theta > 0.0)
            lim = std::min(lim, dx * dx / (2.0 * p.theta / b1));
        if (include_biharmonic && quantum && b1 > 0.0)
            lim = std::min(lim, dx * dx * dx * dx * 4.0 * p.m * b1 / (2.0 * p.hbar * p.hbar));
        if (b3 > 0.0) {
            const double eps = std::pow(sc.time.noise_tol, 2.0 / 3.0);
            if (p.theta > 0.0)
                lim = std::min(lim, eps * std::pow(dx, 4.0 / 3.0) *
                                        std::cbrt(b3 / (2.0 * p.theta)));
            if (quantum)
                lim = std::min(lim, eps * dx * dx *
                                        std::cbrt(p.m * b3 / (2.0 * p.hbar * p.hbar)));
            if (max_speed > 0.0) lim = std::min(lim, dx / max_speed);
        }
        if (sc.law.kind == FrictionKind::activated && max_speed > 0.0)
            lim = std::min(lim, dx / max_speed);
    } else if (sc.equation == Equation::reaction_diffusion) {
        const double D = p.theta / sc.law.b1;
        if (D > 0.0) lim = std::min(lim, dx * dx / (2.0 * D));
        if (quantum)
            lim = std::min(lim,
                           dx * dx * dx * dx * 4.0 * p.m * sc.law.b1 / (2.0 * p.hbar * p.hbar));
    } else if (sc.equation == Equation::convective) {
        lim = std::min(lim, dx / std::abs(p.V0));
        if (quantum) {
            // RK4 imaginary-axis bound for the third-derivative term at the
            // grid Nyquist wavenumber.
            const double coef = p.hbar * p.hbar / (4.0 * p.m * p.m * std::abs(p.V0));
            const double pi3 = std::numbers::pi * std::numbers::pi * std::numbers::pi;
            lim = std::min(lim, 2.8 * dx * dx * dx / (pi3 * coef));
        }
        if (p.k_rate > 0.0) lim = std::min(lim, 0.5 / p.k_rate);
    } else if (sc.equation == Equation::electron_gas) {
        const double De = electron_gas_diffusion(p.m, p.hbar, p.nu);
        if (De > 0.0) lim = std::min(lim, dx * dx / (2.0 * De));
    }
    return lim;
}

void check_step_dt(const Scenario& sc, const Grid1D& g, double dt, double max_speed,
                   bool include_biharm) {
    const double lim = sc.time.safety * explicit_menu(sc, g, max_speed, include_biharm);
    if (dt > lim * (1.0 + 1e-6))
        throw std::invalid_argument("step: dt = " + std::to_string(dt) +
                                    " exceeds the stability estimate " + std::to_string(lim));
}

// Raised when the implicit step cannot converge at the requested dt; the
// driver responds by halving dt, exactly like a positivity violation.
struct NewtonStall : std::exception {
    const char* what() const noexcept override {
        return "implicit step failed to converge";
    }
};

// Backward-Euler step for overdamped linear-friction dynamics, solved by
// damped Newton iteration on the discrete flux balance
//     G(rho') = rho' - rho_n + dt * div F(rho') = 0,
//     F_f = -M(rho_f) (mu_{f+1} - mu_f) / (dx b1_f),
// with mu = Q + theta ln(rho) + U built from the floored density and the
// regularized mobility M(r) = r^2 / (r + reg) evaluated at the face mean.
// M keeps the flux law smooth while switching off transport where the
// density is below resolution: the curvature of sqrt(rho) at 1e-15-level
// nodes is pure round-off noise with enormous gradients, and an unweighted
// flux would force Newton to resolve that junk exactly.  Solving with the
// true Jacobian damps every stiff linearized mode by 1/(1 + dt lambda),
// which no frozen-coefficient semi-implicit operator achieves: any mismatch
// larger than about 2x on a mode with dt lambda >> 1 becomes a per-step
// amplification independent of dt, and mismatches are unavoidable in the
// under-resolved tail.  The Jacobian is pentadiagonal (mu couples nearest
// neighbours, the flux divergence another layer), and the line search keeps
// the iterate nonnegative.  The returned state applies the converged fluxes
// in conservative form from rho_n, so mass telescopes to round-off.
DensityField implicit_overdamped_step(const DensityField& rho_n, const Scenario& sc,
                                      double dt, int depth = 0) {
    const Grid1D& g = rho_n.grid;
    const int n = g.n;
    const double dx = g.dx;
    const double a = sc.params.hbar * sc.params.hbar / (2.0 * sc.params.m);
    const double theta = sc.params.theta;
    const bool quantum = sc.quantum_on();
    const ScalarField U = sc.potential.build(g, sc.params);
    const double peak = std::max(rho_n.max_value(), 1e-300);
    // One scale governs both regularizations: transport below 1e-9 of the
    // peak is masked by the mobility, so flooring mu's density at the same
    // level only touches masked regions -- and it bounds the sqrt(rho) jump
    // across a floor seam to the local decay rate instead of the 1e2..1e8
    // ratios that raw round-off-level densities produce.  The scale also
    // caps the mobility's curvature (~2/reg); much below 1e-9 the Newton
    // quadratic remainder at an advancing front sits above the convergence
    // tolerance and the iteration crawls.
    const double reg = 1e-9 * peak;
    const double rho_floor = reg;

    std::vector<double> b1f(n - 1);
    for (int f = 0; f + 1 < n; ++f)
        b1f[f] = 0.5 * (sc.law.b1_at(f) + sc.law.b1_at(f + 1));

    // Clamping at zero also guards the denominator against the slightly
    // negative face means a previous step may have left behind.
    auto mob = [reg](double r) {
        r = std::max(r, 0.0);
        return r * r / (r + reg);
    };
    auto dmob = [reg](double r) {
        if (r <= 0.0) return 0.0;
        const double s = r + reg;
        return r * (r + 2.0 * reg) / (s * s);
    };
    // C1-smooth floor: a hard max() would put derivative kinks exactly where
    // tail nodes cross the floor, and Newton chatters on kinks instead of
    // converging.  soft(r) -> r for r >> floor and -> floor for r <= 0.
    auto soft = [rho_floor](double r) {
        const double d = r - rho_floor;
        return rho_floor + 0.5 * (d + std::sqrt(d * d + rho_floor * rho_floor));
    };
    auto dsoft = [rho_floor](double r) {
        const double d = r - rho_floor;
        return 0.5 * (1.0 + d / std::sqrt(d * d + rho_floor * rho_floor));
    };

    // mu of the current iterate; mirror neighbours realize the no-flux rows.
    auto mirror_l = [&](int i) { return i == 0 ? 1 : i - 1; };
    auto mirror_r = [&](int i) { return i == n - 1 ? n - 2 : i + 1; };
    auto build_mu = [&](const std::vector<double>& rho, std::vector<double>& mu) {
        for (int i = 0; i < n; ++i) {
            const double ri = soft(rho[i]);
            double m = U.v[i];
            if (theta > 0.0) m += theta * std::log(ri);
            if (quantum) {
                const double si = std::sqrt(ri);
                const double sl = std::sqrt(soft(rho[mirror_l(i)]));
                const double sr = std::sqrt(soft(rho[mirror_r(i)]));
                m += -a * (sl - 2.0 * si + sr) / (dx * dx * si);
            }
            mu[i] = m;
        }
    };
    // Faces whose density mean starts below the regularization scale stay
    // frozen for the whole step: their mobility-masked flux is negligible,
    // and excluding them keeps round-off-level tail structure from feeding
    // noise into the Newton system.  The pattern is fixed at rho_n so the
    // residual, Jacobian and conservative update all see the same system.
    std::vector<char> face_active(n - 1);
    for (int f = 0; f + 1 < n; ++f)
        face_active[f] = 0.5 * (rho_n.v[f] + rho_n.v[f + 1]) > reg;

    auto residual = [&](const std::vector<double>& rho, const std::vector<double>& mu,
                        std::vector<double>& G) {
        for (int i = 0; i < n; ++i) G[i] = rho[i] - rho_n.v[i];
        for (int f = 0; f + 1 < n; ++f) {
            if (!face_active[f]) continue;
            const double rbar = 0.5 * (rho[f] + rho[f + 1]);
            const double F = -mob(rbar) * (mu[f + 1] - mu[f]) / (dx * b1f[f]);
            G[f] += dt * F / ((f == 0) ? 0.5 * dx : dx);
            G[f + 1] -= dt * F / ((f + 1 == n - 1) ? 0.5 * dx : dx);
        }
    };

    std::vector<double> rho(rho_n.v), mu(n), G(n), Gtry(n), mutry(n);
    build_mu(rho, mu);
    residual(rho, mu, G);
    auto norm_inf = [&](const std::vector<double>& x) {
        double m = 0.0;
        for (double v : x) m = std::max(m, std::abs(v));
        return m;
    };
    double gn = norm_inf(G);
    // The residual cannot be evaluated below the round-off of the curvature
    // terms (~1e-12 of the peak), so demand a little above that and accept a
    // stagnated line search anywhere under the looser noise ceiling.
    const double tol = 1e-11 * peak;
    const double noise_ceiling = 1e-8 * peak;

    std::vector<double> bands(static_cast<size_t>(n) * 5);
    std::vector<int> didx(static_cast<size_t>(n) * 3);     // mu stencil columns
    std::vector<double> dval(static_cast<size_t>(n) * 3);  // d(mu_i)/d(rho_didx)
    std::vector<double> delta(n);

    bool converged = gn <= tol;
    double gn_hist[4] = {gn, gn, gn, gn};  // residuals four iterations back
    for (int iter = 0; iter < 12 && !converged; ++iter) {
        // A healthy Newton run contracts at least geometrically once the line
        // search engages; when four iterations fail to halve the residual the
        // iteration is limit-cycling around the mobility transition and the
        // half-step fallback is cheaper than more attempts.
        if (iter >= 4 && gn > 0.5 * gn_hist[iter % 4]) break;
        gn_hist[iter % 4] = gn;
        // d(mu_i)/d(rho_k): three (column, value) pairs per node, with the
        // soft-floor chain rule d sqrt(soft(r))/dr = dsoft(r) / (2 sqrt).
        for (int i = 0; i < n; ++i) {
            const int l = mirror_l(i), r = mirror_r(i);
            const double ri = soft(rho[i]);
            double dii = (theta > 0.0) ? theta * dsoft(rho[i]) / ri : 0.0;
            double dil = 0.0, dir = 0.0;
            if (quantum) {
                const double si = std::sqrt(ri);
                const double sl = std::sqrt(soft(rho[l]));
                const double sr = std::sqrt(soft(rho[r]));
                const double curv = sl - 2.0 * si + sr;
                const double dQds_nbr = -a / (dx * dx * si);
                const double dQdsi =
                    2.0 * a / (dx * dx * si) + a * curv / (dx * dx * si * si);
                dil = dQds_nbr * dsoft(rho[l]) / (2.0 * sl);
                dir = dQds_nbr * dsoft(rho[r]) / (2.0 * sr);
                dii += dQdsi * dsoft(rho[i]) / (2.0 * si);
            }
            const size_t s = static_cast<size_t>(i) * 3;
            didx[s] = l;
            dval[s] = dil;
            didx[s + 1] = i;
            dval[s + 1] = dii;
            didx[s + 2] = r;
            dval[s + 2] = dir;
        }
        std::fill(bands.begin(), bands.end(), 0.0);
        for (int i = 0; i < n; ++i) bands[static_cast<size_t>(i) * 5 + 2] = 1.0;
        auto add_band = [&](int row, int k, double v) {
            const int off = k - row + 2;
            if (off >= 0 && off < 5) bands[static_cast<size_t>(row) * 5 + off] += v;
        };
        for (int f = 0; f + 1 < n; ++f) {
            if (!face_active[f]) continue;
            const double grad = (mu[f + 1] - mu[f]) / (dx * b1f[f]);
            const double rbar = 0.5 * (rho[f] + rho[f + 1]);
            const double wl = dt / ((f == 0) ? 0.5 * dx : dx);
            const double wr = dt / ((f + 1 == n - 1) ? 0.5 * dx : dx);
            auto add_dF = [&](int k, double dF) {
                add_band(f, k, wl * dF);
                add_band(f + 1, k, -wr * dF);
            };
            add_dF(f, -0.5 * dmob(rbar) * grad);
            add_dF(f + 1, -0.5 * dmob(rbar) * grad);
            const double c = -mob(rbar) / (dx * b1f[f]);
            const size_t sj = static_cast<size_t>(f + 1) * 3;
            const size_t si = static_cast<size_t>(f) * 3;
            for (int p = 0; p < 3; ++p) {
                add_dF(didx[sj + p], c * dval[sj + p]);
                add_dF(didx[si + p], -c * dval[si + p]);
            }
        }
        // Row equilibration keeps the banded pivoting honest across the huge
        // dynamic range between bulk and tail rows.
        for (int i = 0; i < n; ++i) {
            double* row = &bands[static_cast<size_t>(i) * 5];
            double m = 0.0;
            for (int k = 0; k < 5; ++k) m = std::max(m, std::abs(row[k]));
            m = std::max(m, 1e-300);
            delta[i] = -G[i] / m;
            for (int k = 0; k < 5; ++k) row[k] /= m;
        }
        detail::solve_banded_penta(bands, delta);

        // Keep significant nodes positive through the step length; front and
        // tail nodes are projected onto [0, inf) instead, otherwise a node
        // crossing the mobility transition throttles the whole direction and
        // Newton crawls.  The projected step is still accepted on its true
        // residual, so the relaxation below never degrades the solve.
        const double signif = 1e-8 * peak;
        double alpha = 1.0;
        for (int i = 0; i < n; ++i)
            if (delta[i] < 0.0 && rho[i] > signif)
                alpha = std::min(alpha, 0.99 * rho[i] / -delta[i]);
        bool improved = false;
        for (int ls = 0; ls < 8; ++ls) {
            std::vector<double> rtry(n);
            for (int i = 0; i < n; ++i) rtry[i] = std::max(rho[i] + alpha * delta[i], 0.0);
            build_mu(rtry, mutry);
            residual(rtry, mutry, Gtry);
            const double gt = norm_inf(Gtry);
            if (gt < gn || gt <= tol) {
                rho.swap(rtry);
                mu.swap(mutry);
                G.swap(Gtry);
                gn = gt;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) break;  // stagnated at the evaluation noise floor
        converged = gn <= tol;
    }
    if (!converged && gn > noise_ceiling) {
        // When a front crosses the mobility transition faster than one cell
        // per step, Newton's quadratic model overshoots in a limit cycle.
        // Composing two half steps restores convergence without discarding
        // work at the driver level; only a deep recursion gives up.
        if (depth >= 8) throw NewtonStall{};
        DensityField half = implicit_overdamped_step(rho_n, sc, 0.5 * dt, depth + 1);
        return implicit_overdamped_step(half, sc, 0.5 * dt, depth + 1);
    }

    // Apply the converged fluxes conservatively from rho_n; mass then
    // telescopes exactly.  The dead band freezes faces whose mu difference
    // is round-off, which keeps equilibria stationary to machine precision.
    double mu_scale = 1.0;
    for (double m : mu) mu_scale = std::max(mu_scale, std::abs(m));
    const double dead = 1e-13 * mu_scale;
    std::vector<double> flux(n - 1);
    for (int f = 0; f + 1 < n; ++f) {
        const double dmu = mu[f + 1] - mu[f];
        const double rbar = 0.5 * (rho[f] + rho[f + 1]);
        flux[f] = (!face_active[f] || std::abs(dmu) < dead)
                      ? 0.0
                      : -mob(rbar) * dmu / (dx * b1f[f]);
    }
    std::vector<double> rate = flux_rate(g, flux);
    DensityField out(g);
    for (int i = 0; i < n; ++i) out.v[i] = rho_n.v[i] + dt * rate[i];
    // The conservative update reproduces the iterate only up to the Newton
    // residual, so tail nodes can land a little below zero.  Shift each
    // deficit into a neighbour (exactly mass-preserving) until the bulk
    // absorbs it; the displaced mass is at the residual tolerance scale.
    for (int i = 0; i + 1 < n; ++i)
        if (out.v[i] < 0.0) {
            out.v[i + 1] += out.v[i];
            out.v[i] = 0.0;
        }
    for (int i = n - 1; i > 0; --i)
        if (out.v[i] < 0.0) {
            out.v[i - 1] += out.v[i];
            out.v[i] = 0.0;
        }
    return out;
}

DensityField overdamped_step_impl(const DensityField& rho, const Scenario& sc, double dt) {
    const Grid1D& g = rho.grid;
    const bool implicit = stabilizer_enabled(sc) &&
                          sc.law.kind == FrictionKind::linear && g.bc == Bc::no_flux;
    if (implicit) return implicit_overdamped_step(rho, sc, dt);

    ScalarField U = sc.potential.build(g, sc.params);
    ScalarField mu = chemical_potential(rho, U, sc.params, sc.quantum_on());
    FaceFluxes faces = mu_face_fluxes(rho, mu, sc, dt);
    check_step_dt(sc, g, dt, faces.max_speed, /*include_biharm=*/true);

    std::vector<double> rate = flux_rate(g, faces.flux);
    DensityField out(g);
    for (int i = 0; i < g.n; ++i) out.v[i] = rho.v[i] + dt * rate[i];
    return out;
}

DensityField quantum_cubic_step_impl(const DensityField& rho, const Scenario& sc, double dt,
                                     bool full_bracket) {
    const Grid1D& g = rho.grid;
    const int n = g.n;
    const double dx = g.dx;
    const double pref = sc.params.hbar * sc.params.hbar / (4.0 * sc.params.m);

    // Both bracket variants are exact x-derivatives of a nodal quantity,
    //     L' L''        = d/dx [ (L')^2 / 2 ],
    //     L' L'' + L''' = d/dx [ L'' + (L')^2 / 2 ],
    // so the face velocity is the cube root of a two-point difference of P.
    // Differencing P at faces -- rather than face-averaging the nodal product
    // L' L'' -- matters for stability: centered first derivatives are blind
    // to grid-scale ripple, so noise never enters the velocity, whereas the
    // nodal product turns ripple in L'' into random cube-root kicks that
    // accumulate into a checkerboard at the profile's smoothed center where
    // nothing damps them (at theta = 0 this flux is the only transport).
    ScalarField L = log_density(rho);
    ScalarField L1 = derivative(L, 1);
    ScalarField L2 = full_bracket ? derivative(L, 2) : ScalarField(g);
    std::vector<double> P(n);
    for (int i = 0; i < n; ++i) {
        P[i] = 0.5 * L1.v[i] * L1.v[i];
        if (full_bracket) P[i] += L2.v[i];
    }
    double p_scale = 1.0;
    for (double p : P) p_scale = std::max(p_scale, std::abs(p));
    const double p_dead = 1e-13 * p_scale;

    const char* mode = std::getenv("QHD_QC_MODE");
    const bool nodal = mode && std::string(mode) == "nodal";
    const int nfaces = (g.bc == Bc::periodic) ? n : n - 1;
    std::vector<double> vel(nfaces, 0.0);
    if (nodal) {
        ScalarField L2n = full_bracket ? L2 : derivative(L, 2);
        ScalarField L3 = full_bracket ? derivative(L, 3) : ScalarField(g);
        std::vector<double> W(n);
        for (int i = 0; i < n; ++i) {
            double bracket = L1.v[i] * L2n.v[i];
            if (full_bracket) bracket += L3.v[i];
            W[i] = pref * bracket / sc.law.b3_at(i);
        }
        for (int f = 0; f < nfaces; ++f)
            vel[f] = signed_cbrt(0.5 * (W[f] + W[(f + 1) % n]));
    } else {
        for (int f = 0; f < nfaces; ++f) {
            const int i = f;
            const int j = (f + 1) % n;
            const double dP = P[j] - P[i];
            if (std::abs(dP) > p_dead) {
                const double b3f = 0.5 * (sc.law.b3_at(i) + sc.law.b3_at(j));
                vel[f] = signed_cbrt(pref * dP / (dx * b3f));
            }
        }
    }
    FaceFluxes faces = assemble_fluxes(rho, vel, dt,
                                       std::getenv("QHD_QC_DONOR") != nullptr);
    check_step_dt(sc, g, dt, faces.max_speed, /*include_biharm=*/true);

    std::vector<double> rate = flux_rate(g, faces.flux);
    DensityField out(g);
    for (int i = 0; i < n; ++i) out.v[i] = rho.v[i] + dt * rate[i];
    return out;
}

// Shared by reaction_diffusion and electron_gas: linear diffusion D, optional
// 4th-order coefficient B, exact exponential relaxation toward rho_eq.
DensityField linear_relaxation_step(const DensityField& rho, const Scenario& sc, double dt,
                                    double D, double B) {
    const Grid1D& g = rho.grid;
    const int n = g.n;
    const bool implicit = sc.semi_implicit != SemiImplicit::off;

    std::vector<double> delta(n);
    for (int i = 0; i < n; ++i) delta[i] = rho.v[i] - sc.params.rho_eq;

    if (implicit) {
        // Crank-Nicolson on d(delta)/dt = D L delta - B L^2 delta.
        std::vector<double> l1(n), l2(n), rhs(n);
        detail::apply_laplacian(g, delta, l1);
        detail::apply_laplacian(g, l1, l2);
        for (int i = 0; i < n; ++i)
            rhs[i] = delta[i] + 0.5 * dt * (D * l1[i] - B * l2[i]);
        detail::solve_helmholtz_pair(g, -0.5 * dt * D, 0.5 * dt * B, rhs);
        delta = rhs;
    } else {
        check_step_dt(sc, g, dt, -1.0, true);
        std::vector<double> l1(n), l2(n);
        detail::apply_laplacian(g, delta, l1);
        detail::apply_laplacian(g, l1, l2);
        for (int i = 0; i < n; ++i) delta[i] += dt * (D * l1[i] - B * l2[i]);
    }

    const double decay = std::exp(-sc.params.k_rate * dt);
    DensityField out(g);
    for (int i = 0; i < n; ++i) out.v[i] = sc.params.rho_eq + decay * delta[i];
    return out;
}

DensityField convective_step_impl(const DensityField& rho, const Scenario& sc, double dt) {
    const Grid1D& g = rho.grid;
    const int n = g.n;
    const double dx = g.dx;
    const PhysParams& p = sc.params;
    const double disp = sc.quantum_on()
                            ? p.hbar * p.hbar / (4.0 * p.m * p.m * p.V0)
                            : 0.0;
    check_step_dt(sc, g, dt, -1.0, true);

    auto rhs = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (int i = 0; i < n; ++i) {
            const double fm2 = v[wrap_index(i - 2, n)];
            const double fm1 = v[wrap_index(i - 1, n)];
            const double f0 = v[i];
            const double fp1 = v[wrap_index(i + 1, n)];
            const double fp2 = v[wrap_index(i + 2, n)];
            // third-order upwind-biased first derivative
            double d1;
            if (p.V0 > 0.0)
                d1 = (fm2 - 6.0 * fm1 + 3.0 * f0 + 2.0 * fp1) / (6.0 * dx);
            else
                d1 = -(fp2 - 6.0 * fp1 + 3.0 * f0 + 2.0 * fm1) / (6.0 * dx);
            const double d3 = (-fm2 + 2.0 * fm1 - 2.0 * fp1 + fp2) / (2.0 * dx * dx * dx);
            out[i] = -p.V0 * d1 - disp * d3 - p.k_rate * (v[i] - p.rho_eq);
        }
    };

    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    rhs(rho.v, k1);
    for (int i = 0; i < n; ++i) tmp[i] = rho.v[i] + 0.5 * dt * k1[i];
    rhs(tmp, k2);
    for (int i = 0; i < n; ++i) tmp[i] = rho.v[i] + 0.5 * dt * k2[i];
    rhs(tmp, k3);
    for (int i = 0; i < n; ++i) tmp[i] = rho.v[i] + dt * k3[i];
    rhs(tmp, k4);

    DensityField out(g);
    for (int i = 0; i < n; ++i)
        out.v[i] = rho.v[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

}  // namespace

DensityField step_overdamped_general(const DensityField& rho, const Scenario& sc, double dt) {
    return overdamped_step_impl(rho, sc, dt);
}

DensityField step_smoluchowski(const DensityField& rho, const Scenario& sc, double dt) {
    return overdamped_step_impl(rho, sc, dt);
}

DensityField step_cubic(const DensityField& rho, const Scenario& sc, double dt) {
    return overdamped_step_impl(rho, sc, dt);
}

DensityField step_quantum_cubic(const DensityField& rho, const Scenario& sc, double dt,
                                bool full_bracket) {
    return quantum_cubic_step_impl(rho, sc, dt, full_bracket);
}

DensityField step_reaction_diffusion(const DensityField& rho, const Scenario& sc, double dt) {
    const double D = sc.params.theta / sc.law.b1;
    const double B = sc.quantum_on() ? sc.params.hbar * sc.params.hbar /
                                           (4.0 * sc.params.m * sc.law.b1)
                                     : 0.0;
    return linear_relaxation_step(rho, sc, dt, D, B);
}

DensityField step_convective(const DensityField& rho, const Scenario& sc, double dt) {
    return convective_step_impl(rho, sc, dt);
}

DensityField step_electron_gas(const DensityField& rho, const Scenario& sc, double dt) {
    const double De = electron_gas_diffusion(sc.params.m, sc.params.hbar, sc.params.nu);
    return linear_relaxation_step(rho, sc, dt, De, 0.0);
}

double stable_dt(const Scenario& sc, const DensityField& state) {
    double max_speed = -1.0;
    if (is_overdamped(sc.equation) &&
        (sc.law.b3 > 0.0 || sc.law.kind == FrictionKind::activated ||
         sc.law.kind == FrictionKind::cubic)) {
        if (sc.equation == Equation::quantum_cubic_full ||
            sc.equation == Equation::quantum_cubic_reduced) {
            // velocity scale from the cold cubic flux argument
            ScalarField L = log_density(state);
            ScalarField L1 = derivative(L, 1);
            ScalarField L2 = derivative(L, 2);
            ScalarField L3 = derivative(L, 3);
            const double pref = sc.params.hbar * sc.params.hbar / (4.0 * sc.params.m);
            const double rho_floor = 1e-12 * state.max_value();
            max_speed = 0.0;
            for (int i = 0; i < state.size(); ++i) {
                if (state.v[i] <= rho_floor) continue;
                double w = pref * (L1.v[i] * L2.v[i]) / sc.law.b3_at(i);
                if (sc.equation == Equation::quantum_cubic_full)
                    w += pref * L3.v[i] / sc.law.b3_at(i);
                max_speed = std::max(max_speed, std::abs(signed_cbrt(w)));
            }
        } else {
            ScalarField U = sc.potential.build(state.grid, sc.params);
            ScalarField mu = chemical_potential(state, U, sc.params, sc.quantum_on());
            max_speed = mu_face_fluxes(state, mu, sc, 0.0).max_speed;
        }
    }
    return sc.time.safety * explicit_menu(sc, state.grid, max_speed, true);
}

double effective_dt(const Scenario& sc, const DensityField& state) {
    const Grid1D& g = state.grid;
    const double dx = g.dx;
    const PhysParams& p = sc.params;

    if (is_overdamped(sc.equation) && stabilizer_enabled(sc) &&
        sc.law.kind == FrictionKind::linear && g.bc == Bc::no_flux) {
        // Implicit scheme: the biharmonic stability bound no longer applies;
        // step at the accuracy scale dx^2 / (2 Dq) with Dq = hbar/(2m), and
        // keep the spreading front resolved in time via its CFL count.  The
        // speed is measured on resolved faces (above 1e-6 of the peak, below
        // which clipped tail nodes carry meaningless velocities) and doubled
        // to extrapolate to the mobility-transition front further out, where
        // the Newton solve loses its quadratic model if the front jumps more
        // than about a cell per step.
        ScalarField U = sc.potential.build(g, sc.params);
        ScalarField mu = chemical_potential(state, U, sc.params, sc.quantum_on());
        const std::vector<double> vel = mu_face_velocities(state, mu, sc);
        const double signif = 1e-6 * state.max_value();
        double front_speed = 0.0;
        for (int f = 0; f + 1 < g.n; ++f)
            if (0.5 * (state.v[f] + state.v[f + 1]) >= signif)
                front_speed = std::max(front_speed, std::abs(vel[f]));
        front_speed *= 2.0;
        double lim = explicit_menu(sc, g, front_speed, false);
        const double Dq = p.hbar / (2.0 * p.m);
        if (Dq > 0.0) lim = std::min(lim, dx * dx / (2.0 * Dq));
        if (front_speed > 0.0) lim = std::min(lim, 0.5 * dx / front_speed);
        return sc.time.safety * lim;
    }
    if ((sc.equation == Equation::reaction_diffusion ||
         sc.equation == Equation::electron_gas) &&
        sc.semi_implicit != SemiImplicit::off) {
        // Crank-Nicolson: pick dt so modes with >= 16 points per wavelength
        // keep |lambda dt| small.
        double D = 0.0, B = 0.0;
        if (sc.equation == Equation::reaction_diffusion) {
            D = p.theta / sc.law.b1;
            if (sc.quantum_on()) B = p.hbar * p.hbar / (4.0 * p.m * sc.law.b1);
        } else {
            D = electron_gas_diffusion(p.m, p.hbar, p.nu);
        }
        double lim = std::numeric_limits<double>::infinity();
        if (D > 0.0) lim = std::min(lim, dx * dx / (2.0 * D));
        if (B > 0.0) {
            const double q16 = std::numbers::pi / (8.0 * dx);
            lim = std::min(lim, 0.5 / (B * q16 * q16 * q16 * q16));
        }
        if (p.k_rate > 0.0) lim = std::min(lim, 0.5 / p.k_rate);
        if (!std::isfinite(lim)) lim = sc.time.t_end > 0.0 ? sc.time.t_end : 1.0;
        return sc.time.safety * lim;
    }
    return stable_dt(sc, state);
}

std::vector<TimeSeriesRecord> run(const Scenario& sc) {
    sc.validate();
    const double ratio = scale_variance_ratio(sc.family);

    DensityField rho = sc.initial;
    std::vector<TimeSeriesRecord> records;

    auto push_record = [&](double t, bool want_snapshot) {
        TimeSeriesRecord r;
        r.t = t;
        r.mass = integrate(rho);
        r.variance = variance(rho);
        r.sigma2 = r.variance / ratio;
        if (want_snapshot) r.snapshot = rho;
        records.push_back(std::move(r));
    };

    const bool snap_all = sc.output.snapshots == SnapshotPolicy::all;
    const bool snap_final = sc.output.snapshots != SnapshotPolicy::none;
    push_record(0.0, snap_all);

    const double t_end = sc.time.t_end;
    if (t_end == 0.0) return records;

    auto do_step = [&](const DensityField& r, double dt) {
        switch (sc.equation) {
            case Equation::general: return step_overdamped_general(r, sc, dt);
            case Equation::smoluchowski: return step_smoluchowski(r, sc, dt);
            case Equation::cubic_friction: return step_cubic(r, sc, dt);
            case Equation::quantum_cubic_full: return step_quantum_cubic(r, sc, dt, true);
            case Equation::quantum_cubic_reduced: return step_quantum_cubic(r, sc, dt, false);
            case Equation::reaction_diffusion: return step_reaction_diffusion(r, sc, dt);
            case Equation::convective: return step_convective(r, sc, dt);
            case Equation::electron_gas: return step_electron_gas(r, sc, dt);
        }
        throw std::invalid_argument("run: unknown equation");
    };

    double t = 0.0;
    long step_count = 0;
    const double t_tiny = 1e-12 * t_end;

    while (t < t_end - t_tiny) {
        double dt = (sc.time.dt > 0.0) ? sc.time.dt : effective_dt(sc, rho);
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw NumericalFailure("run: no positive step size available at t = " +
                                   std::to_string(t));
        dt = std::min(dt, t_end - t);

        DensityField candidate;
        int halvings = 0;
        for (;;) {
            try {
                candidate = do_step(rho, dt);
            } catch (const NewtonStall&) {
                if (++halvings > 20)
                    throw NumericalFailure("run: implicit step stalled at t = " +
                                           std::to_string(t) + " after 20 dt halvings");
                dt *= 0.5;
                continue;
            } catch (const std::invalid_argument& e) {
                throw NumericalFailure(std::string("run: step rejected at t = ") +
                                       std::to_string(t) + ": " + e.what());
            }
            double mn = candidate.v[0];
            bool finite = true;
            for (double v : candidate.v) {
                if (!std::isfinite(v)) {
                    finite = false;
                    break;
                }
                mn = std::min(mn, v);
            }
            if (!finite)
                throw NumericalFailure("run: non-finite density at t = " + std::to_string(t) +
                                       " (step " + std::to_string(step_count) + ")");
            if (mn >= kPositivityFloor || !is_flux_conservative(sc.equation)) break;
            if (++halvings > 20)
                throw NumericalFailure("run: positivity lost at t = " + std::to_string(t) +
                                       " after 20 dt halvings");
            dt *= 0.5;
        }

        rho = std::move(candidate);
        t += dt;
        ++step_count;
        const bool at_end = t >= t_end - t_tiny;
        if (at_end) {
            push_record(t_end, snap_final || snap_all);
        } else if (step_count % sc.output.every == 0) {
            push_record(t, snap_all);
        }
    }
    return records;
}

}  // namespace qhd
