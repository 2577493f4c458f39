#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fraccyl/energy.hpp"

using namespace fraccyl;

namespace {

// Dense double Riemann sum over Omega x Omega (midpoints, diagonal pairs
// skipped by the symmetric offset) plus the closed-form complement term.
double brute_force_seminorm_1d(const DiscreteFunction& u, double s, double p,
                               int n) {
    const auto& g = u.cross_grid();
    const double sp = s * p;
    const double delta = (g.hi - g.lo) / n;
    std::vector<double> uv(n);
    for (int i = 0; i < n; ++i) uv[i] = u(g.lo + (i + 0.5) * delta);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = uv[i] - uv[j];
            if (d == 0.0) continue;
            acc += std::pow(std::abs(d), p) *
                   std::pow(delta * std::abs(i - j), -1.0 - sp) * delta * delta;
        }
    }
    double ext = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = g.lo + (i + 0.5) * delta;
        const double psi =
            (std::pow(x - g.lo, -sp) + std::pow(g.hi - x, -sp)) / sp;
        ext += std::pow(std::abs(uv[i]), p) * psi * delta;
    }
    return acc + 2.0 * ext;
}

DiscreteFunction random_function(const CrossSectionGrid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u01(-1.0, 1.0);
    DiscreteFunction v(g);
    std::vector<double> d(g.n_dofs());
    for (auto& x : d) x = u01(rng);
    v.set_dofs(d);
    return v;
}

DiscreteFunction random_function(const CylinderGrid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u01(-1.0, 1.0);
    DiscreteFunction v(g);
    std::vector<double> d(g.n_dofs());
    for (auto& x : d) x = u01(rng);
    v.set_dofs(d);
    return v;
}

}  // namespace

TEST_CASE("phi_p basics") {
    CHECK(phi_p(0.0, 2.5) == 0.0);
    CHECK(phi_p(-2.0, 3.0) == doctest::Approx(-4.0));
    CHECK(phi_p(2.0, 2.5) == doctest::Approx(std::pow(2.0, 1.5)));
    CHECK(phi_p(-3.0, 2.0) == doctest::Approx(-3.0));
    CHECK_THROWS_AS(phi_p(1.0, 1.5), std::domain_error);
}

TEST_CASE("tail integral closed form") {
    const auto p1 = FractionalParams::make(1, 0.5, 2.0);
    CHECK(tail_integral(1.0, p1) == doctest::Approx(2.0).epsilon(1e-14));

    const auto p2 = FractionalParams::make(2, 0.9, 2.5);
    CHECK(tail_integral(2.0, p2) ==
          doctest::Approx(2.0 * M_PI * std::pow(2.0, -2.25) / 2.25));

    // homogeneity in R
    const double sp = 0.9 * 2.5;
    CHECK(tail_integral(4.0, p2) ==
          doctest::Approx(tail_integral(1.0, p2) * std::pow(4.0, -sp)));
    CHECK_THROWS_AS(tail_integral(0.0, p2), std::domain_error);
}

TEST_CASE("seminorm of zero is zero, p-homogeneity holds") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.5, 2.5);
    const QuadratureSpec quad;
    DiscreteFunction z(g);
    CHECK(seminorm_p(z, params, quad) == 0.0);

    const auto u = random_function(g, 11);
    DiscreteFunction u3 = u;
    std::vector<double> d = u.dofs();
    for (auto& x : d) x *= -3.0;
    u3.set_dofs(d);
    const double a = seminorm_p(u3, params, quad);
    const double b = std::pow(3.0, 2.5) * seminorm_p(u, params, quad);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("single hat matches the dense brute-force oracle") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    DiscreteFunction hat(g);
    hat.set_value(4, 1.0);
    const auto params = FractionalParams::make(1, 0.5, 2.0);
    const QuadratureSpec quad;  // near_split 4, far_order 3
    const double sem = seminorm_p(hat, params, quad);

    // frozen value of the 1e4-point oracle below
    CHECK(sem == doctest::Approx(5.543572128276).epsilon(0.02));

    const double oracle = brute_force_seminorm_1d(hat, 0.5, 2.0, 10000);
    CHECK(oracle == doctest::Approx(5.543572128276).epsilon(1e-9));
    CHECK(std::abs(sem - oracle) / oracle < 0.02);
}

TEST_CASE("energy basics") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.5, 2.5);
    const QuadratureSpec quad;
    const auto f = sample_forcing(ForcingSpec::constant(1.0), g);

    DiscreteFunction z(g);
    CHECK(energy(z, f, params, quad) == 0.0);

    const auto u = random_function(g, 3);
    const auto f0 = sample_forcing(ForcingSpec::zero(), g);
    CHECK(energy(u, f0, params, quad) > 0.0);
}

TEST_CASE("gradient with zero state carries only the load term") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.5, 2.5);
    const QuadratureSpec quad;
    DiscreteFunction z(g);

    const auto f0 = sample_forcing(ForcingSpec::zero(), g);
    for (const double v : energy_gradient(z, f0, params, quad))
        CHECK(v == 0.0);

    const auto f = sample_forcing(ForcingSpec::bump(1.0), g);
    for (const double v : energy_gradient(z, f, params, quad)) CHECK(v < 0.0);
}

TEST_CASE("gradient is the exact derivative of the discrete energy") {
    const QuadratureSpec quad;
    for (const double p : {2.0, 2.5, 3.0}) {
        // 1D instances (<= 10 dofs)
        for (const unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
            const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
            const auto params = FractionalParams::make(1, 0.6, p);
            const auto f = sample_forcing(ForcingSpec::bump(1.0), g);
            const auto u = random_function(g, seed);
            const auto grad = energy_gradient(u, f, params, quad);
            std::vector<double> d = u.dofs();
            double worst = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double eps = 1e-6;
                auto dp = d, dm = d;
                dp[i] += eps;
                dm[i] -= eps;
                DiscreteFunction up(g), um(g);
                up.set_dofs(dp);
                um.set_dofs(dm);
                const double fd = (energy(up, f, params, quad) -
                                   energy(um, f, params, quad)) /
                                  (2.0 * eps);
                worst = std::max(worst, std::abs(fd - grad[i]) /
                                            std::max(1.0, std::abs(fd)));
            }
            CHECK(worst < 1e-5);
        }
        // 2D instance (<= 30 dofs)
        const auto omega = make_cross_section_grid(-1.0, 1.0, 0.5);
        const auto cyl = make_cylinder_grid(1.25, omega, 0.25);
        const auto params = FractionalParams::make(2, 0.7, p);
        const auto f = sample_forcing(ForcingSpec::constant(0.5), cyl);
        const auto u = random_function(cyl, 7);
        const auto grad = energy_gradient(u, f, params, quad);
        std::vector<double> d = u.dofs();
        double worst = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double eps = 1e-6;
            auto dp = d, dm = d;
            dp[i] += eps;
            dm[i] -= eps;
            DiscreteFunction up(cyl), um(cyl);
            up.set_dofs(dp);
            um.set_dofs(dm);
            const double fd =
                (energy(up, f, params, quad) - energy(um, f, params, quad)) /
                (2.0 * eps);
            worst = std::max(worst, std::abs(fd - grad[i]) /
                                        std::max(1.0, std::abs(fd)));
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("energy is convex along segments") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.8, 2.5);
    const QuadratureSpec quad;
    const auto f = sample_forcing(ForcingSpec::constant(1.0), g);
    const auto u = random_function(g, 21);
    const auto w = random_function(g, 22);
    const double Eu = energy(u, f, params, quad);
    const double Ew = energy(w, f, params, quad);
    const double scale = std::max({1.0, std::abs(Eu), std::abs(Ew)});
    for (const double t : {0.25, 0.5, 0.75}) {
        DiscreteFunction mix(g);
        std::vector<double> d(g.n_dofs());
        const auto du = u.dofs();
        const auto dw = w.dofs();
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = t * du[i] + (1.0 - t) * dw[i];
        mix.set_dofs(d);
        CHECK(energy(mix, f, params, quad) <=
              t * Eu + (1.0 - t) * Ew + 1e-10 * scale);
    }
}

TEST_CASE("seminorm is reflection symmetric") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g = make_cylinder_grid(2.0, omega, 0.25);
    const auto params = FractionalParams::make(2, 0.9, 2.5);
    const QuadratureSpec quad;
    const auto u = random_function(g, 31);

    // reflect in x1
    DiscreteFunction r(g);
    const int n2 = g.cross.n_nodes;
    for (int i1 = 0; i1 < g.n1; ++i1)
        for (int i2 = 0; i2 < n2; ++i2)
            r.set_value(i1 * n2 + i2, u.value((g.n1 - 1 - i1) * n2 + i2));
    CHECK(seminorm_p(r, params, quad) ==
          doctest::Approx(seminorm_p(u, params, quad)).epsilon(1e-12));
}

TEST_CASE("energy report decomposition") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto params = FractionalParams::make(1, 0.5, 2.0);
    const QuadratureSpec quad;
    const auto f = sample_forcing(ForcingSpec::constant(1.0), g);
    const auto u = random_function(g, 5);
    const auto rep = energy_report(u, f, params, quad);
    CHECK(rep.seminorm_p ==
          doctest::Approx(rep.interaction_part + rep.tail_part).epsilon(1e-14));
    CHECK(rep.seminorm_p >= 0.0);
    CHECK(rep.tail_part >= 0.0);
    CHECK(rep.seminorm_p ==
          doctest::Approx(seminorm_p(u, params, quad)).epsilon(1e-14));
    CHECK(rep.to_json().find("seminorm_p") != std::string::npos);
    CHECK(rep.to_kv_text().find("tail_part=") != std::string::npos);
}

TEST_CASE("parallel evaluation matches single-threaded bitwise") {
    const auto omega = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g = make_cylinder_grid(2.0, omega, 0.25);
    const auto params = FractionalParams::make(2, 0.9, 2.5);
    NonlocalAssembler a(g, params, QuadratureSpec{});
    const auto u = random_function(g, 17);
    const double s1 = a.seminorm(u, 1);
    for (const int t : {2, 3, 8}) CHECK(a.seminorm(u, t) == s1);
    const auto g1 = a.seminorm_gradient(u, 1);
    const auto g4 = a.seminorm_gradient(u, 4);
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g4[i]);
}

TEST_CASE("grid mismatch raises domain errors") {
    const auto g = make_cross_section_grid(-1.0, 1.0, 0.25);
    const auto g2 = make_cross_section_grid(-1.0, 1.0, 0.5);
    const auto params = FractionalParams::make(1, 0.5, 2.0);
    NonlocalAssembler a(g, params, QuadratureSpec{});
    DiscreteFunction wrong(g2);
    CHECK_THROWS_AS(a.seminorm(wrong), std::domain_error);
    CHECK_THROWS_AS(
        NonlocalAssembler(g, FractionalParams::make(2, 0.5, 2.0),
                          QuadratureSpec{}),
        std::domain_error);
}
