#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fraccyl/grid.hpp"

using namespace fraccyl;

TEST_CASE("cross-section grid construction and counting") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.5);
    CHECK(g.n_nodes == 5);
    CHECK(g.n_dofs() == 3);
    CHECK(g.node(0) == -1.0);
    CHECK(g.node(4) == doctest::Approx(1.0));

    const auto g2 = make_cross_section_grid(0.0, 2.0, 0.25);
    CHECK(g2.n_nodes == 9);
    CHECK(g2.n_dofs() == 7);

    CHECK_THROWS_AS(make_cross_section_grid(-1.0, 1.0, 0.3), ConfigError);
    CHECK_THROWS_AS(make_cross_section_grid(1.0, -1.0, 0.5), ConfigError);
}

TEST_CASE("cylinder grid construction and counting") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.5);
    const auto g = make_cylinder_grid(2.0, omega, 0.5);
    CHECK(g.n1 == 9);
    CHECK(g.n_dofs() == 7 * 3);

    const auto degenerate = make_cylinder_grid(1.0, omega, 1.0);
    CHECK(degenerate.n1 == 3);
    CHECK(degenerate.n_dofs() == 1 * 3);

    CHECK_THROWS_AS(make_cylinder_grid(2.0, omega, 0.7), ConfigError);
}

TEST_CASE("discrete function pins boundary nodes to zero") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.5);
    DiscreteFunction u(g);
    u.set_value(0, 3.0);
    u.set_value(2, 1.0);
    CHECK(u.value(0) == 0.0);
    CHECK(u.value(2) == 1.0);

    // zero extension outside the open domain
    CHECK(u(-1.0) == 0.0);
    CHECK(u(1.5) == 0.0);
    CHECK(u(-57.0) == 0.0);
    CHECK(u(0.0) == 1.0);
    CHECK(u(0.25) == doctest::Approx(0.5));
}

TEST_CASE("cylinder evaluation is bilinear with zero extension") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.5);
    const auto g = make_cylinder_grid(2.0, omega, 0.5);
    DiscreteFunction u(g);
    const int n2 = g.cross.n_nodes;
    u.set_value(4 * n2 + 2, 1.0);  // center node (x1=0, x2=0)
    CHECK(u(0.0, 0.0) == 1.0);
    CHECK(u(0.25, 0.0) == doctest::Approx(0.5));
    CHECK(u(0.25, 0.25) == doctest::Approx(0.25));
    CHECK(u(5.0, 0.0) == 0.0);
    CHECK(u(0.0, 2.0) == 0.0);
}

TEST_CASE("lp_norm of the zero and constant functions") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.5);
    DiscreteFunction z(g);
    CHECK(lp_norm(z, 2.0) == 0.0);

    // interior-1 function: compare against a dense Riemann oracle
    DiscreteFunction u(g);
    for (int i = 1; i < g.n_nodes - 1; ++i) u.set_value(i, 1.0);
    const int n = 10000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -1.0 + 2.0 * (i + 0.5) / n;
        acc += u(x) * u(x) * (2.0 / n);
    }
    CHECK(lp_norm(u, 2.0) == doctest::Approx(std::sqrt(acc)).epsilon(1e-7));
}

TEST_CASE("lp_norm homogeneity and window monotonicity") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g = make_cylinder_grid(2.0, omega, 0.25);
    DiscreteFunction u(g);
    std::vector<double> d(g.n_dofs());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = std::sin(0.37 * i) + 0.2;
    u.set_dofs(d);

    DiscreteFunction u2 = u;
    for (auto& x : d) x *= 2.0;
    u2.set_dofs(d);
    CHECK(lp_norm(u2, 2.5) ==
          doctest::Approx(2.0 * lp_norm(u, 2.5)).epsilon(1e-12));

    double prev = 0.0;
    for (const double ell0 : {0.5, 1.0, 1.5, 2.0}) {
        const double v = lp_norm(u, Window{ell0}, 2.5);
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(lp_norm(u, Window{2.0}, 2.5) ==
          doctest::Approx(lp_norm(u, 2.5)).epsilon(1e-12));
    CHECK_THROWS_AS(lp_norm(u, Window{3.0}, 2.0), std::domain_error);
}

TEST_CASE("window clipping handles off-node boundaries") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g = make_cylinder_grid(2.0, omega, 0.25);
    DiscreteFunction u(g);
    std::vector<double> d(g.n_dofs(), 1.0);
    u.set_dofs(d);
    const double a = lp_norm(u, Window{0.5}, 2.0);
    const double b = lp_norm(u, Window{0.55}, 2.0);
    const double c = lp_norm(u, Window{0.75}, 2.0);
    CHECK(a < b);
    CHECK(b < c);
}

TEST_CASE("extend_cross_section is constant in x1 and satisfies Fubini") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g = make_cylinder_grid(4.0, omega, 0.25);

    DiscreteFunction zero1(omega);
    const auto zext = extend_cross_section(zero1, g);
    CHECK(lp_norm(zext, 2.0) == 0.0);

    DiscreteFunction peak(omega);
    peak.set_value(4, 1.0);  // x2 = 0
    const auto pext = extend_cross_section(peak, g);
    for (double x1 = -3.75 + 0.13; x1 < 3.75; x1 += 0.71)
        CHECK(pext(x1, 0.0) == doctest::Approx(1.0));

    // Fubini on an interior window: ||ext||_p^p = 2 ell0 ||u||_p^p
    const double p = 2.5;
    const double lhs = std::pow(lp_norm(pext, Window{2.0}, p), p);
    const double rhs = 2.0 * 2.0 * std::pow(lp_norm(peak, p), p);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    const auto mismatched = make_cross_section_grid(-1.0, 1.0, 0.5);
    DiscreteFunction wrong(mismatched);
    CHECK_THROWS_AS(extend_cross_section(wrong, g), std::domain_error);
}

TEST_CASE("sample_forcing families") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto c1 = sample_forcing(ForcingSpec::constant(1.0), omega);
    for (int i = 1; i < omega.n_nodes - 1; ++i) CHECK(c1.value(i) == 1.0);

    const auto bump = sample_forcing(ForcingSpec::bump(1.0), omega);
    CHECK(bump(0.0) == doctest::Approx(1.0));
    CHECK(bump(0.5) == doctest::Approx(0.5625));  // (1 - 0.25)^2

    // tabulated round-trip: sample then read back equals the input
    std::vector<double> vals(omega.n_nodes);
    for (int i = 0; i < omega.n_nodes; ++i) vals[i] = 0.1 * i;
    const auto tab = sample_forcing(ForcingSpec::tabulated(vals), omega);
    for (int i = 1; i < omega.n_nodes - 1; ++i)
        CHECK(tab.value(i) == doctest::Approx(vals[i]));
}

TEST_CASE("csv serialization round-trips and is deterministic") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.5);
    const auto g = make_cylinder_grid(1.0, omega, 0.5);
    DiscreteFunction u(g);
    std::vector<double> d(g.n_dofs());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 1.0 / (i + 3.0);
    u.set_dofs(d);

    const std::string csv = to_csv(u);
    CHECK(csv.substr(0, 12) == "x1,x2,value\n");
    CHECK(csv == to_csv(u));

    std::istringstream in(csv);
    const auto back = read_csv(Grid{g}, in);
    for (int n = 0; n < u.n_nodes(); ++n) CHECK(back.value(n) == u.value(n));
}

TEST_CASE("mass application matches the inner product") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g = make_cylinder_grid(2.0, omega, 0.5);
    DiscreteFunction u(g), v(g);
    std::vector<double> du(g.n_dofs()), dv(g.n_dofs());
    for (std::size_t i = 0; i < du.size(); ++i) {
        du[i] = std::cos(0.7 * i);
        dv[i] = std::sin(0.3 * i) - 0.1;
    }
    u.set_dofs(du);
    v.set_dofs(dv);
    const auto mv = apply_mass(v);
    double dot = 0.0;
    for (std::size_t i = 0; i < du.size(); ++i) dot += du[i] * mv[i];
    CHECK(dot == doctest::Approx(l2_inner(u, v)).epsilon(1e-12));
}
