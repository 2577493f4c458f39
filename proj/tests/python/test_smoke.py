"""Smoke tests for the _fraccyl extension module."""

import math
import unittest

import _fraccyl as fc


class ConstantsTest(unittest.TestCase):
    def test_gamma(self):
        self.assertAlmostEqual(fc.gamma(1.0), 1.0, places=13)
        self.assertAlmostEqual(fc.gamma(0.5), math.sqrt(math.pi), places=12)

    def test_kernel_constant(self):
        self.assertAlmostEqual(fc.c_nsp(1, 0.5, 2.0), 1.0 / math.pi, places=13)

    def test_reduction_identity(self):
        for s in (0.3, 0.9):
            for p in (2.0, 2.5):
                self.assertLess(fc.reduction_residual(2, s, p), 1e-10)

    def test_theta_quadrature(self):
        closed = fc.theta_np(2, 0.9, 2.5)
        quad = fc.theta_np_quadrature(2, 0.9, 2.5)
        self.assertLess(abs(closed - quad) / closed, 1e-8)


class GridTest(unittest.TestCase):
    def test_grid_counts(self):
        omega = fc.make_cross_section_grid(-1.0, 1.0, 0.5)
        self.assertEqual(omega.n_nodes, 5)
        self.assertEqual(omega.n_dofs(), 3)
        cyl = fc.make_cylinder_grid(2.0, omega, 0.5)
        self.assertEqual(cyl.n_dofs(), 21)

    def test_zero_extension(self):
        omega = fc.make_cross_section_grid(-1.0, 1.0, 0.5)
        u = fc.DiscreteFunction(omega)
        u.set_dofs([0.0, 1.0, 0.0])
        self.assertEqual(u(5.0), 0.0)
        self.assertAlmostEqual(u(0.0), 1.0)

    def test_forcing_and_norms(self):
        omega = fc.make_cross_section_grid(-1.0, 1.0, 0.25)
        f = fc.sample_forcing(fc.ForcingSpec.bump(1.0), omega)
        self.assertAlmostEqual(f(0.0), 1.0)
        self.assertGreater(fc.lp_norm(f, 2.0), 0.0)


class EnergyTest(unittest.TestCase):
    def test_phi_p(self):
        self.assertEqual(fc.phi_p(0.0, 2.5), 0.0)
        self.assertAlmostEqual(fc.phi_p(-2.0, 3.0), -4.0)

    def test_seminorm_homogeneity(self):
        omega = fc.make_cross_section_grid(-1.0, 1.0, 0.25)
        params = fc.FractionalParams.make(1, 0.5, 2.5)
        u = fc.DiscreteFunction(omega)
        u.set_dofs([0.1 * k for k in range(omega.n_dofs())])
        v = fc.DiscreteFunction(omega)
        v.set_dofs([0.2 * k for k in range(omega.n_dofs())])
        a = fc.seminorm_p(v, params)
        b = 2.0 ** 2.5 * fc.seminorm_p(u, params)
        self.assertAlmostEqual(a, b, delta=1e-10 * max(1.0, b))


class SolverTest(unittest.TestCase):
    def test_torsion_value(self):
        # (-Delta)^{1/2} u = 1 on (-1,1): u(0) = 1
        omega = fc.make_cross_section_grid(-1.0, 1.0, 1.0 / 16)
        params = fc.FractionalParams.make(1, 0.5, 2.0)
        f = fc.sample_forcing(fc.ForcingSpec.constant(1.0), omega)
        u, info = fc.solve_elliptic(omega, f, params)
        self.assertLessEqual(info.grad_norm, info.grad_tol_abs)
        self.assertAlmostEqual(u(0.0), 1.0, delta=0.05)

    def test_parabolic_dissipation(self):
        omega = fc.make_cross_section_grid(-1.0, 1.0, 0.25)
        params = fc.FractionalParams.make(1, 0.8, 2.5)
        popts = fc.ParabolicOptions()
        popts.tau = 0.1
        popts.t_end = 0.3
        traj = fc.solve_parabolic(omega, fc.ForcingSpec.bump(1.0),
                                  fc.ForcingSpec.constant(1.0), params,
                                  fc.QuadratureSpec(), popts)
        self.assertTrue(traj.all_dissipation_ok())
        self.assertEqual(len(traj.times), 4)


class StudyTest(unittest.TestCase):
    def test_theoretical_rates(self):
        self.assertAlmostEqual(fc.theoretical_elliptic_rate(0.9, 2.5), 0.2)
        self.assertAlmostEqual(fc.theoretical_parabolic_rate(0.9, 2.5), 0.5)

    def test_fit(self):
        fit = fc.fit_loglog_slope([(2.0, 1.0), (4.0, 0.5), (8.0, 0.25)], 0.5)
        self.assertAlmostEqual(fit.slope, -1.0, places=12)
        self.assertTrue(fit.passed)

    def test_inequalities(self):
        rep = fc.check_elementary_inequalities(2.5, 10000, 7)
        self.assertTrue(rep.passed)


if __name__ == "__main__":
    unittest.main()
