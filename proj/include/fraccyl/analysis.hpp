#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fraccyl/energy.hpp"
#include "fraccyl/grid.hpp"
#include "fraccyl/solver.hpp"

namespace fraccyl {

/// Trapezoidal cutoff: 1 on [-1/2, 1/2], 0 outside (-1, 1), ramps of
/// slope 2 in between.
double rho(double x1);
double rho_ell(double x1, double ell);

/// h_ell(y1) = integral over R of |rho_ell(x1) - rho_ell(y1)|^p
/// / |x1 - y1|^{1+sp} dx1. Panels split at the cutoff breakpoints; the
/// panels touching y1 are integrated in closed form, the rest by graded
/// composite Gauss; the tail outside the cutoff support is analytic.
double h_ell(double y1, double ell, double s, double p,
             const QuadratureSpec& quad);

/// Two-regime decay check for h_ell: inside (-2l, 2l) the scaled sup
/// l^{sp} h_l must be stable across l; outside, h_l must stay below the
/// exact bracket (1/(sp)) (|y1-l|^{-sp} + |y1+l|^{-sp}).
struct HEllBoundReport {
    struct Row {
        double ell;
        double inside_sup_scaled;
        double outside_ratio_max;
    };
    std::vector<Row> rows;
    double inside_spread = 0.0;  // max/min of inside_sup_scaled
    double outside_worst = 0.0;
    bool passed = false;
    std::string to_csv() const;
};
HEllBoundReport verify_h_ell_bound(const std::vector<double>& ell_list,
                                   double s, double p,
                                   const QuadratureSpec& quad);

/// |quadrature of the fiber integral - |x1-y1| theta_{2,p}| relative to the
/// closed form (N = 2).
double fiber_identity_residual(double x1, double y1, double s, double p,
                               const QuadratureSpec& quad);

struct PoincareEstimate {
    double value = 0.0;  // inf of [u]^p_{s,p} / ||u||_p^p over the grid space
    DiscreteFunction minimizer;  // unit L^p norm
    int iterations = 0;
};

/// Rayleigh-quotient minimization by normalized gradient descent.
PoincareEstimate poincare_constant(const CrossSectionGrid& grid,
                                   const FractionalParams& params,
                                   const SolverOptions& opts,
                                   const QuadratureSpec& quad = {});
PoincareEstimate poincare_constant(const CylinderGrid& grid,
                                   const FractionalParams& params,
                                   const SolverOptions& opts,
                                   const QuadratureSpec& quad = {});

/// Randomized check of the five elementary inequalities; exponents are
/// drawn from {p, 2, 3, 4}, except inequality (3) which holds for
/// exponents in [0, 1] and draws them there. C(q) = max(1, q) in (5).
struct InequalityReport {
    long long samples = 0;
    std::array<long long, 5> violations{};
    bool passed = false;
    std::string to_csv() const;
};
InequalityReport check_elementary_inequalities(double p, long long n_samples,
                                               std::uint64_t seed);

/// Linear-in-ell growth of the elliptic energy: seminorm_p(u_ell)/ell must
/// stay within a factor-2 spread across the sweep.
struct EnergyGrowthReport {
    struct Row {
        double ell;
        double seminorm;
        double ratio;  // seminorm / ell
    };
    std::vector<Row> rows;
    double spread = 0.0;
    bool passed = false;
    std::string to_csv() const;
};
EnergyGrowthReport energy_growth_report(const std::vector<double>& ell_list,
                                        const ForcingSpec& f,
                                        const CrossSectionGrid& omega,
                                        double h1,
                                        const FractionalParams& params,
                                        const QuadratureSpec& quad,
                                        const SolverOptions& opts);

/// Copies nodal values of a function on a shorter cylinder into a longer
/// one (aligned axial nodes); used for warm starts across an ell sweep.
DiscreteFunction embed_cylinder(const DiscreteFunction& u_small,
                                const CylinderGrid& big);

}  // namespace fraccyl
