#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fraccyl/study.hpp"

using namespace fraccyl;

TEST_CASE("theoretical elliptic rate") {
    CHECK(theoretical_elliptic_rate(0.9, 2.5) == doctest::Approx(0.2));
    CHECK(theoretical_elliptic_rate(0.8, 3.0) ==
          doctest::Approx((0.8 - 2.0 / 3.0) / 2.0));
    CHECK_THROWS_AS(theoretical_elliptic_rate(0.6, 2.5), std::domain_error);
    CHECK_THROWS_AS(theoretical_elliptic_rate(0.9, 2.0), std::domain_error);
    // boundary: s = 1/p' exactly fails the open-interval hypothesis
    CHECK_THROWS_AS(theoretical_elliptic_rate(0.6, 2.5), std::domain_error);
}

TEST_CASE("theoretical parabolic rate") {
    CHECK(theoretical_parabolic_rate(0.9, 2.5) == doctest::Approx(0.5));
    CHECK(theoretical_parabolic_rate(0.8, 3.0) == doctest::Approx(0.2));
    CHECK_THROWS_AS(theoretical_parabolic_rate(2.0 / 3, 3.0),
                    std::domain_error);
}

TEST_CASE("loglog fit on exact geometric decay") {
    const auto fit = fit_loglog_slope({{2.0, 1.0}, {4.0, 0.5}, {8.0, 0.25}},
                                      0.5, 0.5);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.passed);
}

TEST_CASE("loglog fit on constant data") {
    const auto fit =
        fit_loglog_slope({{2.0, 0.7}, {4.0, 0.7}, {8.0, 0.7}}, 0.5, 0.5);
    CHECK(fit.slope == doctest::Approx(0.0));
    CHECK_FALSE(fit.passed);
}

TEST_CASE("loglog fit three-point regression oracle") {
    // hand-computed least squares on (log ell, log err)
    const auto fit = fit_loglog_slope({{2.0, 0.9}, {4.0, 0.62}, {8.0, 0.41}},
                                      0.2, 0.5);
    CHECK(fit.slope == doctest::Approx(-0.56713).epsilon(1e-4));
    CHECK(fit.passed);  // -0.567 <= -0.1
}

TEST_CASE("loglog fit degenerate inputs") {
    const auto trivial = fit_loglog_slope({{2.0, 0.0}, {4.0, 0.0}}, 0.2, 0.5);
    CHECK(trivial.trivial);
    CHECK(trivial.passed);

    CHECK_THROWS_AS(fit_loglog_slope({{2.0, 0.0}, {4.0, 0.5}}, 0.2, 0.5),
                    std::domain_error);
    CHECK_THROWS_AS(fit_loglog_slope({{-1.0, 0.5}, {4.0, 0.5}}, 0.2, 0.5),
                    std::domain_error);
}

TEST_CASE("study config hypothesis gating") {
    RateStudyConfig cfg;
    cfg.p = 2.0;  // needs p > 2
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.p = 2.5;
    cfg.s = 0.6;  // needs s > 1/p' = 0.6
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.s = 0.9;
    CHECK_NOTHROW(cfg.validate());
    cfg.ell0 = 5.0;  // must stay below min ell
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("zero forcing study short-circuits to a trivial pass") {
    RateStudyConfig cfg;
    cfg.forcing = ForcingSpec::zero();
    cfg.ell_list = {2.0, 4.0};
    cfg.solver.grad_tol = 1e-6;
    const auto res = elliptic_rate_study(cfg);
    for (const auto& [ell, err] : res.errors) CHECK(err == 0.0);
    CHECK(res.fit.trivial);
    CHECK(res.passed);
}

TEST_CASE("self-consistency: extension against itself gives zero error") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto grid = make_cylinder_grid(2.0, omega, 0.25);
    DiscreteFunction u_inf(omega);
    std::vector<double> d(omega.n_dofs());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.3 + 0.1 * i;
    u_inf.set_dofs(d);
    const auto ext = extend_cross_section(u_inf, grid);
    const auto diff = subtract(ext, ext);
    CHECK(lp_norm(diff, Window{1.0}, 2.5) == 0.0);
}

TEST_CASE("window consistency of the study error") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto grid = make_cylinder_grid(2.0, omega, 0.25);
    DiscreteFunction a(grid), b(grid);
    std::vector<double> d(grid.n_dofs());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::sin(0.31 * i);
    a.set_dofs(d);
    for (auto& x : d) x *= 0.7;
    b.set_dofs(d);
    const auto diff = subtract(a, b);
    double prev = 0.0;
    for (const double ell0 : {0.5, 1.0, 1.5}) {
        const double e = lp_norm(diff, Window{ell0}, 2.5);
        CHECK(e >= prev);
        prev = e;
    }
}

TEST_CASE("small elliptic study is deterministic and decays") {
    RateStudyConfig cfg;
    cfg.h = 0.5;
    cfg.ell_list = {1.0, 2.0, 4.0};
    cfg.ell0 = 0.5;
    cfg.solver.grad_tol = 1e-7;
    const auto res1 = elliptic_rate_study(cfg);
    const auto res2 = elliptic_rate_study(cfg);
    CHECK(res1.errors_csv() == res2.errors_csv());
    CHECK(res1.loglog_csv() == res2.loglog_csv());
    CHECK(res1.errors.size() == 3);
    CHECK(res1.errors[1].second < res1.errors[0].second);
    CHECK(res1.errors_csv().substr(0, 10) == "ell,error\n");
}

TEST_CASE("small parabolic study runs and reports all three fits") {
    RateStudyConfig cfg;
    cfg.h = 0.5;
    cfg.ell_list = {1.0, 2.0};
    cfg.ell0 = 0.5;
    cfg.t_end = 0.2;
    cfg.tau = 0.1;
    cfg.solver.grad_tol = 1e-6;
    const auto res = parabolic_rate_study(cfg);
    CHECK(res.rows.size() == 2);
    CHECK(res.rows[0].combined ==
          doctest::Approx(res.rows[0].sup_l2_sq + res.rows[0].lplp));
    CHECK(res.rows[1].combined < res.rows[0].combined);
    CHECK(res.fit_combined.theoretical == doctest::Approx(0.5));
    const auto res2 = parabolic_rate_study(cfg);
    CHECK(res.errors_csv() == res2.errors_csv());
}
