#include "fraccyl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fraccyl/constants.hpp"

namespace fraccyl {

double rho(double x1) {
    const double a = std::abs(x1);
    if (a <= 0.5) return 1.0;
    if (a >= 1.0) return 0.0;
    return 2.0 * (1.0 - a);
}

double rho_ell(double x1, double ell) {
    if (!(ell > 0.0)) throw std::domain_error("rho_ell requires ell > 0");
    return rho(x1 / ell);
}

double h_ell(double y1, double ell, double s, double p,
             const QuadratureSpec& quad) {
    if (!(ell > 0.0)) throw std::domain_error("h_ell requires ell > 0");
    const double sp = s * p;
    const double rv = rho_ell(y1, ell);

    double acc = 0.0;
    // Tail outside the cutoff support.
    if (rv > 0.0) {
        acc += std::pow(rv, p) *
               (std::pow(ell - y1, -sp) + std::pow(y1 + ell, -sp)) / sp;
    }

    // Panels inside [-ell, ell], split at the rho breakpoints and at y1.
    std::vector<double> brk = {-ell, -0.5 * ell, 0.5 * ell, ell};
    if (y1 > -ell && y1 < ell) brk.push_back(y1);
    std::sort(brk.begin(), brk.end());

    const int n_gl = std::max(12, 4 * quad.far_order);
    const auto& gx = gl::nodes(n_gl);
    const auto& gw = gl::weights(n_gl);

    for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
        const double a = brk[k], b = brk[k + 1];
        const double len = b - a;
        if (len <= 0.0) continue;
        if (a == y1 || b == y1) {
            // rho is linear here: |rho(x)-rho(y1)| = |m| |x-y1| exactly.
            const double m = (rho_ell(b, ell) - rho_ell(a, ell)) / len;
            acc += std::pow(std::abs(m), p) * std::pow(len, p - sp) / (p - sp);
            continue;
        }
        // Graded composite Gauss toward the endpoint nearest to y1.
        const bool grade_left = std::abs(a - y1) < std::abs(b - y1);
        const int n_sub = 30;
        double far = len;
        for (int sub = 0; sub < n_sub; ++sub) {
            const double near_len = sub + 1 == n_sub ? 0.0 : far * 0.5;
            const double lo = grade_left ? a + near_len : b - far;
            const double hi = grade_left ? a + far : b - near_len;
            const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
            for (std::size_t q = 0; q < gx.size(); ++q) {
                const double x = c + r * gx[q];
                const double d = std::abs(rho_ell(x, ell) - rv);
                acc += gw[q] * r * std::pow(d, p) *
                       std::pow(std::abs(x - y1), -1.0 - sp);
            }
            far = near_len;
            if (far == 0.0) break;
        }
    }
    return acc;
}

HEllBoundReport verify_h_ell_bound(const std::vector<double>& ell_list,
                                   double s, double p,
                                   const QuadratureSpec& quad) {
    if (ell_list.empty())
        throw std::domain_error("verify_h_ell_bound requires a nonempty list");
    const double sp = s * p;
    HEllBoundReport rep;
    for (const double ell : ell_list) {
        // Inside regime: fixed normalized sample of (-2l, 2l).
        double inside_sup = 0.0;
        const int n_in = 41;
        for (int k = 0; k < n_in; ++k) {
            const double w = -2.0 + 4.0 * k / (n_in - 1.0);
            inside_sup = std::max(
                inside_sup, h_ell(0.999 * w * ell, ell, s, p, quad));
        }
        // Outside regime: normalized against the exact display bound.
        double outside_max = 0.0;
        for (const double w : {2.05, 2.5, 3.0, 4.0, 10.0}) {
            for (const double sign : {1.0, -1.0}) {
                const double y = sign * w * ell;
                const double bound =
                    (std::pow(std::abs(y - ell), -sp) +
                     std::pow(std::abs(y + ell), -sp)) /
                    sp;
                outside_max =
                    std::max(outside_max, h_ell(y, ell, s, p, quad) / bound);
            }
        }
        rep.rows.push_back({ell, inside_sup * std::pow(ell, sp), outside_max});
    }
    double lo = rep.rows[0].inside_sup_scaled, hi = lo;
    for (const auto& r : rep.rows) {
        lo = std::min(lo, r.inside_sup_scaled);
        hi = std::max(hi, r.inside_sup_scaled);
        rep.outside_worst = std::max(rep.outside_worst, r.outside_ratio_max);
    }
    rep.inside_spread = lo > 0.0 ? hi / lo : 1.0;
    rep.passed = rep.inside_spread <= 1.25 && rep.outside_worst <= 1.1;
    return rep;
}

std::string HEllBoundReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "ell,inside_sup_scaled,outside_ratio_max\n";
    for (const auto& r : rows)
        os << r.ell << ',' << r.inside_sup_scaled << ',' << r.outside_ratio_max
           << '\n';
    return os.str();
}

double fiber_identity_residual(double x1, double y1, double s, double p,
                               const QuadratureSpec& quad) {
    if (x1 == y1)
        throw std::domain_error("fiber_identity_residual requires x1 != y1");
    const double a = std::abs(x1 - y1);
    const double lhs = scaled_fiber_integral(a, 0.0, 2, s, p, quad);
    const double rhs = a * theta_np(2, s, p);
    return std::abs(lhs - rhs) / rhs;
}

namespace {

// d/du_i of the ||u||_p^p cell quadrature, indexed by dofs.
template <class GridT>
std::vector<double> lp_power_gradient(const GridT& grid,
                                      const DiscreteFunction& u, double p);

template <>
std::vector<double> lp_power_gradient(const CrossSectionGrid& grid,
                                      const DiscreteFunction& u, double p) {
    const auto& gx = gl::nodes(kCellRuleOrder);
    const auto& gw = gl::weights(kCellRuleOrder);
    std::vector<double> g(grid.n_nodes, 0.0);
    for (int c = 0; c < grid.n_cells(); ++c)
        for (std::size_t q = 0; q < gx.size(); ++q) {
            const double t = 0.5 * (1.0 + gx[q]);
            const double w = 0.5 * grid.h * gw[q];
            const double uv = (1.0 - t) * u.value(c) + t * u.value(c + 1);
            const double c0 = w * p * phi_p(uv, std::max(p, 2.0));
            g[c] += c0 * (1.0 - t);
            g[c + 1] += c0 * t;
        }
    return {g.begin() + 1, g.end() - 1};
}

template <>
std::vector<double> lp_power_gradient(const CylinderGrid& grid,
                                      const DiscreteFunction& u, double p) {
    const auto& gx = gl::nodes(kCellRuleOrder);
    const auto& gw = gl::weights(kCellRuleOrder);
    const int n2 = grid.cross.n_nodes;
    std::vector<double> g(grid.n_nodes(), 0.0);
    for (int c1 = 0; c1 < grid.n1 - 1; ++c1)
        for (int c2 = 0; c2 < grid.cross.n_cells(); ++c2) {
            const int base = c1 * n2 + c2;
            const int nd[4] = {base, base + 1, base + n2, base + n2 + 1};
            for (std::size_t q1 = 0; q1 < gx.size(); ++q1)
                for (std::size_t q2 = 0; q2 < gx.size(); ++q2) {
                    const double t1 = 0.5 * (1.0 + gx[q1]);
                    const double t2 = 0.5 * (1.0 + gx[q2]);
                    const double w =
                        0.25 * grid.h1 * grid.cross.h * gw[q1] * gw[q2];
                    const double b[4] = {(1 - t1) * (1 - t2), (1 - t1) * t2,
                                         t1 * (1 - t2), t1 * t2};
                    double uv = 0.0;
                    for (int k = 0; k < 4; ++k) uv += b[k] * u.value(nd[k]);
                    const double c0 = w * p * phi_p(uv, std::max(p, 2.0));
                    for (int k = 0; k < 4; ++k) g[nd[k]] += c0 * b[k];
                }
        }
    std::vector<double> out;
    out.reserve(grid.n_dofs());
    for (int i1 = 1; i1 < grid.n1 - 1; ++i1)
        for (int i2 = 1; i2 < n2 - 1; ++i2) out.push_back(g[i1 * n2 + i2]);
    return out;
}

template <class GridT>
PoincareEstimate poincare_impl(const GridT& grid,
                               const FractionalParams& params,
                               const SolverOptions& opts,
                               const QuadratureSpec& quad,
                               const DiscreteFunction* init) {
    opts.validate();
    NonlocalAssembler assembler(grid, params, quad);
    const double p = params.p();
    const int threads = opts.threads;

    DiscreteFunction u(grid);
    if (init != nullptr && init->grid() == Grid{grid}) {
        u = *init;
    } else {
        // positive bump profile as the starting point
        if constexpr (std::is_same_v<GridT, CrossSectionGrid>) {
            const double mid = 0.5 * (grid.lo + grid.hi);
            const double rad = 0.5 * (grid.hi - grid.lo);
            for (int i = 1; i < grid.n_nodes - 1; ++i) {
                const double w = 1.0 - std::pow((grid.node(i) - mid) / rad, 2);
                u.set_value(i, w > 0 ? w * w : 0.0);
            }
        } else {
            const double mid = 0.5 * (grid.cross.lo + grid.cross.hi);
            const double rad = 0.5 * (grid.cross.hi - grid.cross.lo);
            const int n2 = grid.cross.n_nodes;
            for (int i1 = 1; i1 < grid.n1 - 1; ++i1) {
                const double w1 =
                    1.0 - std::pow(grid.node1(i1) / grid.ell, 2);
                for (int i2 = 1; i2 < n2 - 1; ++i2) {
                    const double w2 =
                        1.0 -
                        std::pow((grid.cross.node(i2) - mid) / rad, 2);
                    u.set_value(i1 * n2 + i2,
                                (w1 > 0 && w2 > 0) ? w1 * w1 * w2 * w2 : 0.0);
                }
            }
        }
    }

    auto normalize = [&](DiscreteFunction& v) {
        const double n = lp_norm(v, p);
        if (!(n > 0.0))
            throw SolveError("poincare: zero iterate", 0.0, 0, v);
        std::vector<double> d = v.dofs();
        for (double& x : d) x /= n;
        v.set_dofs(d);
    };
    normalize(u);

    auto quotient_grad = [&](const DiscreteFunction& v) {
        // v normalized: M = 1, R = S; grad = S' - S * M'
        auto [S, Sg] = assembler.seminorm_and_gradient(v, threads);
        const std::vector<double> Mg = lp_power_gradient(grid, v, p);
        for (std::size_t i = 0; i < Sg.size(); ++i) Sg[i] -= S * Mg[i];
        return std::make_pair(S, std::move(Sg));
    };
    auto quotient = [&](const DiscreteFunction& v) {
        return assembler.seminorm(v, threads) / std::pow(lp_norm(v, p), p);
    };

    auto [R, g] = quotient_grad(u);
    double alpha = 0.1 / (1.0 + std::sqrt(std::inner_product(
                              g.begin(), g.end(), g.begin(), 0.0)));
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        double gnorm = 0.0, gg = 0.0;
        for (const double x : g) {
            gnorm = std::max(gnorm, std::abs(x));
            gg += x * x;
        }
        if (gnorm <= opts.grad_tol * std::max(1.0, R)) break;

        std::vector<double> d0 = u.dofs();
        double step = std::clamp(alpha, 1e-14, 1e8);
        // below the quotient's floating-point resolution the line search is
        // uninformative; step with a monotone gradient-norm guard instead
        const double e_res =
            64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(R));
        DiscreteFunction ut = u;
        if (opts.armijo_c * step * gg >= e_res) {
            double Rt = R;
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                std::vector<double> dt(d0.size());
                for (std::size_t i = 0; i < d0.size(); ++i)
                    dt[i] = d0[i] - step * g[i];
                ut.set_dofs(dt);
                Rt = quotient(ut);
                if (std::isfinite(Rt) && Rt <= R - opts.armijo_c * step * gg) {
                    accepted = true;
                    break;
                }
                step *= opts.backtrack_shrink;
                if (opts.armijo_c * step * gg < e_res) break;
            }
            if (accepted) {
                normalize(ut);
                auto [Rn, gn] = quotient_grad(ut);
                // BB2 on the normalized iterates
                double sty = 0.0, yty = 0.0;
                const std::vector<double> dn = ut.dofs();
                for (std::size_t i = 0; i < dn.size(); ++i) {
                    const double sdiff = dn[i] - d0[i];
                    const double ydiff = gn[i] - g[i];
                    sty += sdiff * ydiff;
                    yty += ydiff * ydiff;
                }
                alpha = (sty > 0.0 && yty > 0.0) ? sty / yty : 2.0 * step;
                u = std::move(ut);
                R = Rn;
                g = std::move(gn);
                continue;
            }
        }
        std::vector<double> dt(d0.size());
        for (std::size_t i = 0; i < d0.size(); ++i)
            dt[i] = d0[i] - step * g[i];
        ut.set_dofs(dt);
        normalize(ut);
        auto [Rn, gn] = quotient_grad(ut);
        double ggn = 0.0;
        for (const double x : gn) ggn += x * x;
        if (!std::isfinite(Rn) || ggn > gg * (1.0 + 1e-12)) {
            alpha = 0.5 * step;  // reject: past the stability edge
            continue;
        }
        alpha = step;
        u = std::move(ut);
        R = Rn;
        g = std::move(gn);
    }
    if (it >= opts.max_iters)
        throw SolveError("poincare minimization did not converge (last quotient " +
                             std::to_string(R) + ")",
                         0.0, it, u);
    normalize(u);
    PoincareEstimate est;
    est.value = quotient(u);
    est.minimizer = std::move(u);
    est.iterations = it;
    return est;
}

}  // namespace

PoincareEstimate poincare_constant(const CrossSectionGrid& grid,
                                   const FractionalParams& params,
                                   const SolverOptions& opts,
                                   const QuadratureSpec& quad) {
    return poincare_impl(grid, params, opts, quad, opts.init);
}

PoincareEstimate poincare_constant(const CylinderGrid& grid,
                                   const FractionalParams& params,
                                   const SolverOptions& opts,
                                   const QuadratureSpec& quad) {
    return poincare_impl(grid, params, opts, quad, opts.init);
}

InequalityReport check_elementary_inequalities(double p, long long n_samples,
                                               std::uint64_t seed) {
    if (n_samples < 1)
        throw std::domain_error("n_samples must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> upos(0.0, 10.0);
    std::uniform_real_distribution<double> usym(-10.0, 10.0);
    std::uniform_real_distribution<double> ulow(0.0, 1.0);

    InequalityReport rep;
    rep.samples = n_samples;
    const std::array<double, 4> qs = {p, 2.0, 3.0, 4.0};
    // absorbs floating-point rounding only; any true violation is O(1)
    const double eps = 1e-10;

    for (long long n = 0; n < n_samples; ++n) {
        const double a = upos(rng), b = upos(rng);
        const double c = usym(rng), d = usym(rng);
        const double qlow = ulow(rng);
        for (const double q : qs) {
            // (1) monotonicity of phi_q with its sharp constant:
            // (phi_q(c) - phi_q(d))(c - d) >= 2^{2-q} |c - d|^q, q >= 2
            // (equality at d = -c)
            {
                const double lhs = (phi_p(c, q) - phi_p(d, q)) * (c - d);
                const double rhs =
                    std::pow(2.0, 2.0 - q) * std::pow(std::abs(c - d), q);
                if (lhs < rhs - eps * (1.0 + rhs)) ++rep.violations[0];
            }
            // (2) (a+b)^q <= 2^{q-1} (a^q + b^q),  q >= 1
            {
                const double lhs = std::pow(a + b, q);
                const double rhs =
                    std::pow(2.0, q - 1.0) * (std::pow(a, q) + std::pow(b, q));
                if (lhs > rhs + eps * (1.0 + rhs)) ++rep.violations[1];
            }
            // (4) |a^q - b^q| <= q |a-b| (a^{q-1} + b^{q-1}),  q >= 1
            {
                const double lhs = std::abs(std::pow(a, q) - std::pow(b, q));
                const double rhs = q * std::abs(a - b) *
                                   (std::pow(a, q - 1.0) + std::pow(b, q - 1.0));
                if (lhs > rhs + eps * (1.0 + rhs)) ++rep.violations[3];
            }
            // (5) |phi_q(c) - phi_q(d)| <= C(q) |c-d| (|c|^{q-2} + |d|^{q-2}),
            //     C(q) = max(1, q)
            {
                const double lhs = std::abs(phi_p(c, q) - phi_p(d, q));
                const double rhs = std::max(1.0, q) * std::abs(c - d) *
                                   (std::pow(std::abs(c), q - 2.0) +
                                    std::pow(std::abs(d), q - 2.0));
                if (lhs > rhs + eps * (1.0 + rhs)) ++rep.violations[4];
            }
        }
        // (3) (a+b)^q <= a^q + b^q for q in [0, 1]
        {
            const double lhs = std::pow(a + b, qlow);
            const double rhs = std::pow(a, qlow) + std::pow(b, qlow);
            if (lhs > rhs + eps * (1.0 + rhs)) ++rep.violations[2];
        }
    }
    rep.passed = true;
    for (const auto v : rep.violations)
        if (v != 0) rep.passed = false;
    return rep;
}

std::string InequalityReport::to_csv() const {
    std::ostringstream os;
    os << "inequality,violations\n";
    for (std::size_t i = 0; i < violations.size(); ++i)
        os << (i + 1) << ',' << violations[i] << '\n';
    return os.str();
}

DiscreteFunction embed_cylinder(const DiscreteFunction& u_small,
                                const CylinderGrid& big) {
    const auto& small = u_small.cylinder_grid();
    if (!(small.cross == big.cross) || small.h1 != big.h1)
        throw std::domain_error("embed_cylinder: incompatible grids");
    const double off = (big.ell - small.ell) / big.h1;
    const int shift = static_cast<int>(std::round(off));
    if (std::abs(off - shift) > 1e-9)
        throw std::domain_error("embed_cylinder: axial nodes do not align");
    DiscreteFunction out(big);
    const int n2 = big.cross.n_nodes;
    for (int i1 = 1; i1 < small.n1 - 1; ++i1)
        for (int i2 = 1; i2 < n2 - 1; ++i2)
            out.set_value((i1 + shift) * n2 + i2,
                          u_small.value(i1 * n2 + i2));
    return out;
}

EnergyGrowthReport energy_growth_report(const std::vector<double>& ell_list,
                                        const ForcingSpec& f,
                                        const CrossSectionGrid& omega,
                                        double h1,
                                        const FractionalParams& params,
                                        const QuadratureSpec& quad,
                                        const SolverOptions& opts) {
    if (ell_list.empty())
        throw std::domain_error("energy_growth_report requires a nonempty list");
    EnergyGrowthReport rep;
    DiscreteFunction prev;
    bool have_prev = false;
    for (const double ell : ell_list) {
        const CylinderGrid grid = CylinderGrid::make(ell, omega, h1);
        const DiscreteFunction fs = sample_forcing(f, grid);
        SolverOptions o = opts;
        DiscreteFunction warm;
        if (have_prev) {
            warm = embed_cylinder(prev, grid);
            o.init = &warm;
        }
        const DiscreteFunction u = solve_elliptic(grid, fs, params, quad, o);
        NonlocalAssembler assembler(grid, params, quad);
        const double sem = assembler.seminorm(u, opts.threads);
        rep.rows.push_back({ell, sem, sem / ell});
        prev = u;
        have_prev = true;
    }
    double lo = rep.rows[0].ratio, hi = lo;
    for (const auto& r : rep.rows) {
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
    }
    rep.spread = lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : 0.0);
    rep.passed = hi == 0.0 || (lo > 0.0 && hi / lo <= 2.0);
    return rep;
}

std::string EnergyGrowthReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "ell,seminorm_p,ratio\n";
    for (const auto& r : rows)
        os << r.ell << ',' << r.seminorm << ',' << r.ratio << '\n';
    return os.str();
}

}  // namespace fraccyl
