#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "fraccyl/energy.hpp"
#include "fraccyl/grid.hpp"

namespace fraccyl {

/// Options for the energy minimizers (gradient descent with Armijo
/// backtracking, Barzilai-Borwein step initialization).
struct SolverOptions {
    double grad_tol = 1e-8;  // sup-norm tolerance relative to problem scale
    int max_iters = 100000;
    double backtrack_shrink = 0.5;
    double armijo_c = 1e-4;
    const DiscreteFunction* init = nullptr;  // nullptr = start from zero
    int threads = 1;

    void validate() const;
};

struct SolveInfo {
    int iterations = 0;
    double grad_norm = 0.0;
    double grad_tol_abs = 0.0;  // resolved absolute tolerance
    double energy_value = 0.0;
};

/// Non-convergence: carries the last iterate and its gradient norm.
struct SolveError : std::runtime_error {
    SolveError(const std::string& msg, double grad_norm_, int iterations_,
               DiscreteFunction last_)
        : std::runtime_error(msg),
          grad_norm(grad_norm_),
          iterations(iterations_),
          last(std::move(last_)) {}
    double grad_norm;
    int iterations;
    DiscreteFunction last;
};

/// Minimizes E(v) = (C/(2p)) [v]^p - (f, v); the returned iterate satisfies
/// sup_i |dE/dv_i| <= grad_tol * scale, i.e. the discrete weak form holds to
/// that residual against every nodal basis function.
DiscreteFunction solve_elliptic(const CylinderGrid& grid,
                                const DiscreteFunction& f,
                                const FractionalParams& params,
                                const QuadratureSpec& quad,
                                const SolverOptions& opts = {},
                                SolveInfo* info = nullptr);
DiscreteFunction solve_elliptic(const CrossSectionGrid& grid,
                                const DiscreteFunction& f,
                                const FractionalParams& params,
                                const QuadratureSpec& quad,
                                const SolverOptions& opts = {},
                                SolveInfo* info = nullptr);

/// Cross-section problem with the (N-1)-dimensional kernel constant.
DiscreteFunction solve_cross_section(const CrossSectionGrid& grid,
                                     const DiscreteFunction& f, double s,
                                     double p, const QuadratureSpec& quad,
                                     const SolverOptions& opts = {},
                                     SolveInfo* info = nullptr);

struct ParabolicOptions {
    double tau = 0.05;
    double t_end = 1.0;
    SolverOptions inner;
    int save_every = 1;

    void validate() const;
    int n_steps() const;
};

struct StepDiagnostics {
    int iterations = 0;
    double grad_norm = 0.0;
    bool dissipation_ok = false;
    double j_value = 0.0;  // J(u_next) = (C/(2p)) [u]^p - (f, u)
};

struct Trajectory {
    std::vector<double> times;             // saved times, t_0 = 0 first
    std::vector<DiscreteFunction> states;  // aligned with `times`
    std::vector<StepDiagnostics> steps;    // one entry per time step
    double tau = 0.0;
    double t_end = 0.0;

    bool all_dissipation_ok() const;
};

/// One minimizing-movement step: argmin_v ||v - u_prev||_2^2/(2 tau)
/// + (C/(2p)) [v]^p - (f_slice, v), warm-started from u_prev.
DiscreteFunction parabolic_step(const DiscreteFunction& u_prev,
                                const DiscreteFunction& f_slice, double tau,
                                const FractionalParams& params,
                                const QuadratureSpec& quad,
                                const SolverOptions& inner,
                                StepDiagnostics* diag = nullptr);

/// Implicit Euler chain for the gradient-flow formulation; f is sampled at
/// the right endpoint of each step.
Trajectory solve_parabolic(const CylinderGrid& grid, const ForcingSpec& u0,
                           const ForcingSpec& f, const FractionalParams& params,
                           const QuadratureSpec& quad,
                           const ParabolicOptions& popts);
Trajectory solve_parabolic(const CrossSectionGrid& grid, const ForcingSpec& u0,
                           const ForcingSpec& f, const FractionalParams& params,
                           const QuadratureSpec& quad,
                           const ParabolicOptions& popts);

}  // namespace fraccyl
