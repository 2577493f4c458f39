#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fraccyl/analysis.hpp"
#include "fraccyl/config.hpp"
#include "fraccyl/constants.hpp"
#include "fraccyl/study.hpp"

namespace py = pybind11;
using namespace fraccyl;

PYBIND11_MODULE(_fraccyl, m) {
    m.doc() = "fractional p-Laplacian cylinder solvers and rate studies";

    py::register_exception<ConfigError>(m, "ConfigError");

    py::class_<QuadratureSpec>(m, "QuadratureSpec")
        .def(py::init<>())
        .def_readwrite("near_split", &QuadratureSpec::near_split)
        .def_readwrite("far_order", &QuadratureSpec::far_order)
        .def_readwrite("tail_radius", &QuadratureSpec::tail_radius)
        .def_readwrite("pair_cutoff", &QuadratureSpec::pair_cutoff);

    // constants
    m.def("gamma", &gamma_fn, py::arg("x"));
    m.def("c_nsp", &c_nsp, py::arg("dim"), py::arg("s"), py::arg("p"));
    m.def("theta_np", &theta_np, py::arg("dim"), py::arg("s"), py::arg("p"));
    m.def("theta_np_quadrature", &theta_np_quadrature);
    m.def("reduction_residual", &reduction_residual, py::arg("dim"),
          py::arg("s"), py::arg("p"));
    m.def(
        "scaled_fiber_integral",
        [](double a, double x, int dim, double s, double p,
           const QuadratureSpec& quad) {
            return scaled_fiber_integral(a, x, dim, s, p, quad);
        },
        py::arg("a"), py::arg("x"), py::arg("dim"), py::arg("s"), py::arg("p"),
        py::arg("quad") = QuadratureSpec{});

    py::class_<FractionalParams>(m, "FractionalParams")
        .def_static("make", &FractionalParams::make, py::arg("dim"),
                    py::arg("s"), py::arg("p"))
        .def_static("with_kernel_constant",
                    &FractionalParams::with_kernel_constant)
        .def_property_readonly("dim", &FractionalParams::dim)
        .def_property_readonly("s", &FractionalParams::s)
        .def_property_readonly("p", &FractionalParams::p)
        .def_property_readonly("c_kernel", &FractionalParams::c_kernel)
        .def_property_readonly("p_conjugate", &FractionalParams::p_conjugate);


    // grids and functions
    py::class_<CrossSectionGrid>(m, "CrossSectionGrid")
        .def_readonly("lo", &CrossSectionGrid::lo)
        .def_readonly("hi", &CrossSectionGrid::hi)
        .def_readonly("h", &CrossSectionGrid::h)
        .def_readonly("n_nodes", &CrossSectionGrid::n_nodes)
        .def("n_dofs", &CrossSectionGrid::n_dofs)
        .def("node", &CrossSectionGrid::node);
    py::class_<CylinderGrid>(m, "CylinderGrid")
        .def_readonly("ell", &CylinderGrid::ell)
        .def_readonly("cross", &CylinderGrid::cross)
        .def_readonly("h1", &CylinderGrid::h1)
        .def_readonly("n1", &CylinderGrid::n1)
        .def("n_dofs", &CylinderGrid::n_dofs);
    m.def("make_cross_section_grid", &make_cross_section_grid, py::arg("lo"),
          py::arg("hi"), py::arg("h"));
    m.def("make_cylinder_grid", &make_cylinder_grid, py::arg("ell"),
          py::arg("cross"), py::arg("h1"));

    py::class_<Window>(m, "Window").def(py::init<double>(), py::arg("ell0"));

    py::class_<DiscreteFunction>(m, "DiscreteFunction")
        .def(py::init<CrossSectionGrid>())
        .def(py::init<CylinderGrid>())
        .def("values", &DiscreteFunction::values)
        .def("dofs", &DiscreteFunction::dofs)
        .def("set_dofs", &DiscreteFunction::set_dofs)
        .def("n_dofs", &DiscreteFunction::n_dofs)
        .def("is_cylinder", &DiscreteFunction::is_cylinder)
        .def("__call__",
             [](const DiscreteFunction& u, double x) { return u(x); })
        .def("__call__", [](const DiscreteFunction& u, double x1, double x2) {
            return u(x1, x2);
        });

    m.def("lp_norm",
          py::overload_cast<const DiscreteFunction&, double>(&lp_norm),
          py::arg("u"), py::arg("p"));
    m.def("lp_norm",
          py::overload_cast<const DiscreteFunction&, const Window&, double>(
              &lp_norm),
          py::arg("u"), py::arg("window"), py::arg("p"));
    m.def("l2_norm", &l2_norm);
    m.def("subtract", &subtract);
    m.def("extend_cross_section", &extend_cross_section);
    m.def("to_csv", &to_csv);

    py::class_<ForcingSpec>(m, "ForcingSpec")
        .def_static("zero", &ForcingSpec::zero)
        .def_static("constant", &ForcingSpec::constant, py::arg("c"))
        .def_static("bump", &ForcingSpec::bump, py::arg("r"))
        .def_static("tabulated", &ForcingSpec::tabulated)
        .def_static("custom", &ForcingSpec::custom);
    m.def("sample_forcing",
          py::overload_cast<const ForcingSpec&, const CrossSectionGrid&,
                            double>(&sample_forcing),
          py::arg("spec"), py::arg("grid"), py::arg("t") = 0.0);
    m.def("sample_forcing",
          py::overload_cast<const ForcingSpec&, const CylinderGrid&, double>(
              &sample_forcing),
          py::arg("spec"), py::arg("grid"), py::arg("t") = 0.0);

    // energy
    m.def("phi_p", &phi_p, py::arg("r"), py::arg("p"));
    m.def("tail_integral", &tail_integral, py::arg("R"), py::arg("params"));
    m.def("seminorm_p", &seminorm_p, py::arg("u"), py::arg("params"),
          py::arg("quad") = QuadratureSpec{}, py::arg("threads") = 1);
    m.def("energy", &energy, py::arg("u"), py::arg("f"), py::arg("params"),
          py::arg("quad") = QuadratureSpec{}, py::arg("threads") = 1);
    m.def("energy_gradient", &energy_gradient, py::arg("u"), py::arg("f"),
          py::arg("params"), py::arg("quad") = QuadratureSpec{},
          py::arg("threads") = 1);

    // solvers
    py::class_<SolverOptions>(m, "SolverOptions")
        .def(py::init<>())
        .def_readwrite("grad_tol", &SolverOptions::grad_tol)
        .def_readwrite("max_iters", &SolverOptions::max_iters)
        .def_readwrite("backtrack_shrink", &SolverOptions::backtrack_shrink)
        .def_readwrite("armijo_c", &SolverOptions::armijo_c)
        .def_readwrite("threads", &SolverOptions::threads);
    py::class_<SolveInfo>(m, "SolveInfo")
        .def(py::init<>())
        .def_readonly("iterations", &SolveInfo::iterations)
        .def_readonly("grad_norm", &SolveInfo::grad_norm)
        .def_readonly("grad_tol_abs", &SolveInfo::grad_tol_abs)
        .def_readonly("energy_value", &SolveInfo::energy_value);

    m.def(
        "solve_elliptic",
        [](const CylinderGrid& g, const DiscreteFunction& f,
           const FractionalParams& params, const QuadratureSpec& quad,
           const SolverOptions& opts) {
            SolveInfo info;
            auto u = solve_elliptic(g, f, params, quad, opts, &info);
            return std::make_pair(std::move(u), info);
        },
        py::arg("grid"), py::arg("f"), py::arg("params"),
        py::arg("quad") = QuadratureSpec{}, py::arg("opts") = SolverOptions{});
    m.def(
        "solve_elliptic",
        [](const CrossSectionGrid& g, const DiscreteFunction& f,
           const FractionalParams& params, const QuadratureSpec& quad,
           const SolverOptions& opts) {
            SolveInfo info;
            auto u = solve_elliptic(g, f, params, quad, opts, &info);
            return std::make_pair(std::move(u), info);
        },
        py::arg("grid"), py::arg("f"), py::arg("params"),
        py::arg("quad") = QuadratureSpec{}, py::arg("opts") = SolverOptions{});
    m.def(
        "solve_cross_section",
        [](const CrossSectionGrid& g, const DiscreteFunction& f, double s,
           double p, const QuadratureSpec& quad, const SolverOptions& opts) {
            SolveInfo info;
            auto u = solve_cross_section(g, f, s, p, quad, opts, &info);
            return std::make_pair(std::move(u), info);
        },
        py::arg("grid"), py::arg("f"), py::arg("s"), py::arg("p"),
        py::arg("quad") = QuadratureSpec{}, py::arg("opts") = SolverOptions{});

    py::class_<ParabolicOptions>(m, "ParabolicOptions")
        .def(py::init<>())
        .def_readwrite("tau", &ParabolicOptions::tau)
        .def_readwrite("t_end", &ParabolicOptions::t_end)
        .def_readwrite("inner", &ParabolicOptions::inner)
        .def_readwrite("save_every", &ParabolicOptions::save_every);
    py::class_<StepDiagnostics>(m, "StepDiagnostics")
        .def_readonly("iterations", &StepDiagnostics::iterations)
        .def_readonly("grad_norm", &StepDiagnostics::grad_norm)
        .def_readonly("dissipation_ok", &StepDiagnostics::dissipation_ok)
        .def_readonly("j_value", &StepDiagnostics::j_value);
    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("states", &Trajectory::states)
        .def_readonly("steps", &Trajectory::steps)
        .def("all_dissipation_ok", &Trajectory::all_dissipation_ok);
    m.def("solve_parabolic",
          py::overload_cast<const CylinderGrid&, const ForcingSpec&,
                            const ForcingSpec&, const FractionalParams&,
                            const QuadratureSpec&, const ParabolicOptions&>(
              &solve_parabolic),
          py::arg("grid"), py::arg("u0"), py::arg("f"), py::arg("params"),
          py::arg("quad"), py::arg("popts"));
    m.def("solve_parabolic",
          py::overload_cast<const CrossSectionGrid&, const ForcingSpec&,
                            const ForcingSpec&, const FractionalParams&,
                            const QuadratureSpec&, const ParabolicOptions&>(
              &solve_parabolic),
          py::arg("grid"), py::arg("u0"), py::arg("f"), py::arg("params"),
          py::arg("quad"), py::arg("popts"));

    // analysis
    m.def("rho", &rho, py::arg("x1"));
    m.def("rho_ell", &rho_ell, py::arg("x1"), py::arg("ell"));
    m.def("h_ell", &h_ell, py::arg("y1"), py::arg("ell"), py::arg("s"),
          py::arg("p"), py::arg("quad") = QuadratureSpec{});
    m.def("fiber_identity_residual", &fiber_identity_residual, py::arg("x1"),
          py::arg("y1"), py::arg("s"), py::arg("p"),
          py::arg("quad") = QuadratureSpec{});
    py::class_<PoincareEstimate>(m, "PoincareEstimate")
        .def_readonly("value", &PoincareEstimate::value)
        .def_readonly("minimizer", &PoincareEstimate::minimizer)
        .def_readonly("iterations", &PoincareEstimate::iterations);
    m.def("poincare_constant",
          py::overload_cast<const CrossSectionGrid&, const FractionalParams&,
                            const SolverOptions&, const QuadratureSpec&>(
              &poincare_constant),
          py::arg("grid"), py::arg("params"), py::arg("opts"),
          py::arg("quad") = QuadratureSpec{});
    m.def("poincare_constant",
          py::overload_cast<const CylinderGrid&, const FractionalParams&,
                            const SolverOptions&, const QuadratureSpec&>(
              &poincare_constant),
          py::arg("grid"), py::arg("params"), py::arg("opts"),
          py::arg("quad") = QuadratureSpec{});
    py::class_<InequalityReport>(m, "InequalityReport")
        .def_readonly("samples", &InequalityReport::samples)
        .def_readonly("violations", &InequalityReport::violations)
        .def_readonly("passed", &InequalityReport::passed);
    m.def("check_elementary_inequalities", &check_elementary_inequalities,
          py::arg("p"), py::arg("n_samples"), py::arg("seed"));

    // studies
    py::class_<RateFit>(m, "RateFit")
        .def_readonly("slope", &RateFit::slope)
        .def_readonly("intercept", &RateFit::intercept)
        .def_readonly("r_squared", &RateFit::r_squared)
        .def_readonly("theoretical", &RateFit::theoretical)
        .def_readonly("slack", &RateFit::slack)
        .def_readonly("passed", &RateFit::passed)
        .def_readonly("trivial", &RateFit::trivial);
    m.def("theoretical_elliptic_rate", &theoretical_elliptic_rate,
          py::arg("s"), py::arg("p"));
    m.def("theoretical_parabolic_rate", &theoretical_parabolic_rate,
          py::arg("s"), py::arg("p"));
    m.def("fit_loglog_slope", &fit_loglog_slope, py::arg("points"),
          py::arg("theoretical"), py::arg("slack") = 0.5);

    py::class_<RateStudyConfig>(m, "RateStudyConfig")
        .def(py::init<>())
        .def_readwrite("s", &RateStudyConfig::s)
        .def_readwrite("p", &RateStudyConfig::p)
        .def_readwrite("omega_lo", &RateStudyConfig::omega_lo)
        .def_readwrite("omega_hi", &RateStudyConfig::omega_hi)
        .def_readwrite("h", &RateStudyConfig::h)
        .def_readwrite("h1", &RateStudyConfig::h1)
        .def_readwrite("ell_list", &RateStudyConfig::ell_list)
        .def_readwrite("ell0", &RateStudyConfig::ell0)
        .def_readwrite("forcing", &RateStudyConfig::forcing)
        .def_readwrite("u0", &RateStudyConfig::u0)
        .def_readwrite("t_end", &RateStudyConfig::t_end)
        .def_readwrite("tau", &RateStudyConfig::tau)
        .def_readwrite("slack", &RateStudyConfig::slack)
        .def_readwrite("quad", &RateStudyConfig::quad)
        .def_readwrite("solver", &RateStudyConfig::solver);
    py::class_<EllipticRateResult>(m, "EllipticRateResult")
        .def_readonly("errors", &EllipticRateResult::errors)
        .def_readonly("fit", &EllipticRateResult::fit)
        .def_readonly("monotone_decreasing",
                      &EllipticRateResult::monotone_decreasing)
        .def_readonly("passed", &EllipticRateResult::passed)
        .def("errors_csv", &EllipticRateResult::errors_csv);
    m.def("elliptic_rate_study", &elliptic_rate_study, py::arg("cfg"));
    py::class_<ParabolicRateResult::Row>(m, "ParabolicRateRow")
        .def_readonly("ell", &ParabolicRateResult::Row::ell)
        .def_readonly("sup_l2_sq", &ParabolicRateResult::Row::sup_l2_sq)
        .def_readonly("lplp", &ParabolicRateResult::Row::lplp)
        .def_readonly("combined", &ParabolicRateResult::Row::combined);
    py::class_<ParabolicRateResult>(m, "ParabolicRateResult")
        .def_readonly("rows", &ParabolicRateResult::rows)
        .def_readonly("fit_combined", &ParabolicRateResult::fit_combined)
        .def_readonly("passed", &ParabolicRateResult::passed)
        .def("errors_csv", &ParabolicRateResult::errors_csv);
    m.def("parabolic_rate_study", &parabolic_rate_study, py::arg("cfg"));
}
