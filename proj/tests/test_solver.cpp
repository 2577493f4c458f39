#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fraccyl/constants.hpp"
#include "fraccyl/solver.hpp"

using namespace fraccyl;

TEST_CASE("zero forcing yields the zero minimizer") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.5, 2.5);
    const auto f = sample_forcing(ForcingSpec::zero(), g);
    const auto u = solve_elliptic(g, f, params, QuadratureSpec{});
    for (const double v : u.values()) CHECK(v == 0.0);
}

TEST_CASE("ball torsion oracle at p=2, s=1/2") {
    // (-Delta)^{1/2} u = 1 on (-1,1) has u(x) = (1-x^2)^{1/2} / lambda with
    // lambda = 4^s Gamma(1/2+s) Gamma(1+s) / Gamma(1/2) = 1 at s = 1/2.
    const double s = 0.5;
    const double lambda = std::pow(4.0, s) * gamma_fn(0.5 + s) *
                          gamma_fn(1.0 + s) / gamma_fn(0.5);
    CHECK(lambda == doctest::Approx(1.0).epsilon(1e-14));

    const auto g = make_cross_section_grid(-1.0, 1.0, 1.0 / 16);
    const auto params = FractionalParams::make(1, s, 2.0);
    const auto f = sample_forcing(ForcingSpec::constant(1.0), g);
    SolveInfo info;
    const auto u =
        solve_elliptic(g, f, params, QuadratureSpec{}, SolverOptions{}, &info);
    CHECK(info.grad_norm <= info.grad_tol_abs);

    double num = 0.0, den = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const double x = -1.0 + 2.0 * (i + 0.5) / n;
        const double exact = std::sqrt(1.0 - x * x) / lambda;
        num += std::pow(u(x) - exact, 2);
        den += exact * exact;
    }
    CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("even forcing gives an even solution") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g = make_cylinder_grid(1.0, omega, 0.25);
    const auto params = FractionalParams::make(2, 0.8, 2.5);
    const auto f = sample_forcing(ForcingSpec::bump(1.0), g);
    SolverOptions opts;
    opts.grad_tol = 1e-10;
    const auto u = solve_elliptic(g, f, params, QuadratureSpec{}, opts);
    const int n2 = g.cross.n_nodes;
    double asym = 0.0;
    for (int i1 = 0; i1 < g.n1; ++i1)
        for (int i2 = 0; i2 < n2; ++i2)
            asym = std::max(asym,
                            std::abs(u.value(i1 * n2 + i2) -
                                     u.value((g.n1 - 1 - i1) * n2 + i2)));
    CHECK(asym < 1e-8);
}

TEST_CASE("minimizer is independent of the initialization") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.6, 2.5);
    const auto f = sample_forcing(ForcingSpec::constant(1.0), g);
    SolverOptions opts;
    SolveInfo info;
    const auto u0 = solve_elliptic(g, f, params, QuadratureSpec{}, opts, &info);

    DiscreteFunction init(g);
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> d01(-1.0, 1.0);
    std::vector<double> d(g.n_dofs());
    for (auto& x : d) x = d01(rng);
    init.set_dofs(d);
    SolverOptions opts2;
    opts2.init = &init;
    const auto u1 = solve_elliptic(g, f, params, QuadratureSpec{}, opts2);

    for (int i = 0; i < u0.n_nodes(); ++i)
        CHECK(std::abs(u0.value(i) - u1.value(i)) <= 10 * info.grad_tol_abs);
}

TEST_CASE("weak-form residual at acceptance") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.125);
    const auto params = FractionalParams::make(1, 0.9, 2.5);
    const auto f = sample_forcing(ForcingSpec::constant(1.0), g);
    const QuadratureSpec quad;
    SolveInfo info;
    const auto u = solve_elliptic(g, f, params, quad, SolverOptions{}, &info);
    // recompute the residual independently of the solver bookkeeping
    const auto grad = energy_gradient(u, f, params, quad);
    double sup = 0.0;
    for (const double v : grad) sup = std::max(sup, std::abs(v));
    CHECK(sup <= info.grad_tol_abs);
}

TEST_CASE("cross-section solve agrees with the reduced 2D constant") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const double s = 0.9, p = 2.5;
    const auto f = sample_forcing(ForcingSpec::constant(1.0), g);
    const QuadratureSpec quad;
    SolveInfo info;
    const auto u1 = solve_cross_section(g, f, s, p, quad, SolverOptions{}, &info);
    // same problem with C_{2,s,p} * theta_{2,p} in place of C_{1,s,p}
    const auto reduced = FractionalParams::with_kernel_constant(
        1, s, p, c_nsp(2, s, p) * theta_np(2, s, p));
    const auto u2 = solve_elliptic(g, f, reduced, quad);
    for (int i = 0; i < u1.n_nodes(); ++i)
        CHECK(std::abs(u1.value(i) - u2.value(i)) <= 1e-6);
}

TEST_CASE("non-convergence raises SolveError with diagnostics") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.125);
    const auto params = FractionalParams::make(1, 0.9, 2.5);
    const auto f = sample_forcing(ForcingSpec::constant(1.0), g);
    SolverOptions opts;
    opts.max_iters = 3;
    try {
        solve_elliptic(g, f, params, QuadratureSpec{}, opts);
        FAIL("expected SolveError");
    } catch (const SolveError& e) {
        CHECK(e.iterations == 3);
        CHECK(e.grad_norm > 0.0);
        CHECK(e.last.n_dofs() == g.n_dofs());
    }
}

TEST_CASE("parabolic fixed point at zero") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.8, 2.5);
    DiscreteFunction z(g);
    const auto f0 = sample_forcing(ForcingSpec::zero(), g);
    StepDiagnostics diag;
    const auto next = parabolic_step(z, f0, 0.05, params, QuadratureSpec{},
                                     SolverOptions{}, &diag);
    for (const double v : next.values()) CHECK(v == 0.0);
    CHECK(diag.dissipation_ok);
}

TEST_CASE("implicit step shrinks with tau") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.8, 2.5);
    const auto f0 = sample_forcing(ForcingSpec::zero(), g);
    const auto u0 = sample_forcing(ForcingSpec::bump(1.0), g);
    const QuadratureSpec quad;

    const auto next1 = parabolic_step(u0, f0, 0.05, params, quad, SolverOptions{});
    const auto next2 = parabolic_step(u0, f0, 0.025, params, quad, SolverOptions{});
    const double step1 = l2_norm(subtract(next1, u0));
    const double step2 = l2_norm(subtract(next2, u0));
    // halving tau roughly halves the step (within 20%)
    CHECK(step2 / step1 == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("gradient flow dissipates the seminorm") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.8, 2.5);
    const auto f0 = sample_forcing(ForcingSpec::zero(), g);
    const auto u0 = sample_forcing(ForcingSpec::bump(1.0), g);
    const QuadratureSpec quad;
    const auto next = parabolic_step(u0, f0, 0.05, params, quad, SolverOptions{});
    CHECK(seminorm_p(next, params, quad) < seminorm_p(u0, params, quad));
}

TEST_CASE("trajectory with zero data stays zero") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.8, 2.5);
    ParabolicOptions popts;
    popts.tau = 0.1;
    popts.t_end = 0.5;
    const auto traj = solve_parabolic(g, ForcingSpec::zero(),
                                      ForcingSpec::zero(), params,
                                      QuadratureSpec{}, popts);
    CHECK(traj.states.size() == 6);
    CHECK(traj.steps.size() == 5);
    CHECK(traj.all_dissipation_ok());
    for (const auto& st : traj.states)
        for (const double v : st.values()) CHECK(v == 0.0);
}

TEST_CASE("steady forcing: trajectory approaches the elliptic solution") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.8, 2.5);
    const QuadratureSpec quad;
    const auto f = ForcingSpec::constant(1.0);
    ParabolicOptions popts;
    popts.tau = 0.05;
    popts.t_end = 1.0;
    const auto traj = solve_parabolic(g, ForcingSpec::zero(), f, params, quad,
                                      popts);
    CHECK(traj.all_dissipation_ok());
    const auto u_ell =
        solve_elliptic(g, sample_forcing(f, g), params, quad);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& st : traj.states) {
        const double dist = l2_norm(subtract(st, u_ell));
        CHECK(dist <= prev * (1.0 + 1e-8) + 1e-14);
        prev = dist;
    }
}

TEST_CASE("initial state equals the sampled datum and times align") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g = make_cylinder_grid(1.0, omega, 0.25);
    const auto params = FractionalParams::make(2, 0.8, 2.5);
    ParabolicOptions popts;
    popts.tau = 0.1;
    popts.t_end = 0.3;
    popts.inner.grad_tol = 1e-6;
    const auto traj = solve_parabolic(g, ForcingSpec::bump(1.0),
                                      ForcingSpec::constant(1.0), params,
                                      QuadratureSpec{}, popts);
    const auto u0 = sample_forcing(ForcingSpec::bump(1.0), g);
    for (int i = 0; i < u0.n_nodes(); ++i)
        CHECK(traj.states[0].value(i) == u0.value(i));
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(0.3));
}

TEST_CASE("parabolic options validation") {
    ParabolicOptions popts;
    popts.tau = 0.07;
    popts.t_end = 1.0;  // not an integer multiple
    CHECK_THROWS_AS(popts.validate(), ConfigError);
    popts.tau = -1.0;
    CHECK_THROWS_AS(popts.validate(), ConfigError);
    popts.tau = 0.1;
    popts.t_end = 1.0;
    CHECK_NOTHROW(popts.validate());
    CHECK(popts.n_steps() == 10);
}
