from dataclasses import replace

import numpy as np
import sympy
from django.test import SimpleTestCase

from ..ball_quadrature import M_constant
from ..exceptions import InvalidArgumentError
from ..fields import ALIASES, CATALOGUE, EPS, S, SMOOTH_SUITE, T, \
    coordinate_symbols, field_from_expression, field_names, \
    harmonic_fields, parse_polynomial, resolve_field, \
    symbolic_time_average, symbolic_weighted_mean
from ..horizontal_calculus import delta_H, jet
from ..mvp_operators import counterexample_oracle
from .helpers import TestingHelper


##############################
#     Expression tests
#############################


class PolynomialParserTestCase(SimpleTestCase):

    def test_parse(self):
        """
        Tests powers with ^, decimal literals and the xT alias.
        """
        x1, x2, x3 = coordinate_symbols(1)
        expr = parse_polynomial('x1^2 + 0.5*t - xT', 1)
        self.assertEqual(expr, x1 ** 2 + sympy.Rational(1, 2) * T - x3)

    def test_rejects_non_polynomials(self):
        """
        Tests that transcendental, irrational and unknown input is rejected.
        """
        for text in ('sin(x1)', 'sqrt(2)*x1', 'y + 1', 'x1/x2', 'x1 +'):
            with self.assertRaises(InvalidArgumentError, msg=text):
                parse_polynomial(text, 1)

    def test_field_from_expression(self):
        """
        Tests evaluation and jet of an expression field.
        """
        u = field_from_expression('3*x1*x2 + t', 1)
        self.assertEqual(u(2.0, np.array([1.0, 2.0, 0.0])), 8.0)
        j = jet(u, 0.0, np.zeros(3))
        self.assertEqual(j.dt, 1.0)


class ResolveFieldTestCase(SimpleTestCase):

    def test_catalogue_names(self):
        """
        Tests that every catalogue name resolves for n = 1 and n = 2.
        """
        self.assertEqual(field_names(), sorted(CATALOGUE))
        for name in field_names():
            for n in (1, 2):
                u = resolve_field(name, n)
                self.assertEqual(u.n, n)
                self.assertEqual(u.label, name)

    def test_aliases(self):
        """
        Tests that an alias resolves to its catalogue field.
        """
        for alias, name in ALIASES.items():
            self.assertNotIn(alias, CATALOGUE)
            u = resolve_field(alias, 1)
            self.assertEqual(u.label, name)
            point = np.array([0.3, -0.2, 0.1])
            self.assertEqual(u(0.5, point),
                             resolve_field(name, 1)(0.5, point))
        self.assertEqual(ALIASES['paper-sec4'], 'caloric-quartic')

    def test_coordinates(self):
        """
        Tests x1 .. x{2n+1} and the range check.
        """
        u = resolve_field('x4', 2)
        self.assertEqual(u(0.0, np.array([0, 0, 0, 7.0, 0])), 7.0)
        with self.assertRaises(InvalidArgumentError):
            resolve_field('x4', 1)

    def test_unknown(self):
        """
        Tests that garbage identifiers are rejected.
        """
        with self.assertRaisesMessage(InvalidArgumentError, 'Unknown field'):
            resolve_field('no-such-field', 1)


##############################
#     Catalogue tests
#############################


class CatalogueTestCase(SimpleTestCase, TestingHelper):

    def test_analytic_jets_match_differences(self):
        """
        Tests the exact jets of the smooth suite against finite differences.
        """
        for name, t, point in SMOOTH_SUITE:
            u = resolve_field(name, 1)
            exact = jet(u, t, np.array(point))
            approx = jet(replace(u, analytic_jet=None), t, np.array(point))
            self.assertAlmostEqual(exact.dt, approx.dt, places=6, msg=name)
            self.assertArrayAlmostEqual(approx.grad0, exact.grad0, 1e-7)
            self.assertArrayAlmostEqual(approx.hess, exact.hess, 1e-5)

    def test_smooth_suite_gradients(self):
        """
        Tests that the suite fields have a nonvanishing gradient.
        """
        self.assertGreaterEqual(len(SMOOTH_SUITE), 6)
        for name, t, point in SMOOTH_SUITE:
            j = jet(resolve_field(name, 1), t, np.array(point))
            self.assertGreater(np.linalg.norm(j.grad0), 1e-3, name)

    def test_harmonic_fields(self):
        """
        Tests Δ_H u = 0 for the harmonic set at random points.
        """
        for n in (1, 2):
            for name in harmonic_fields(n):
                u = resolve_field(name, n)
                for x in self.random_points(n, 5, seed=n):
                    self.assertAlmostEqual(delta_H(jet(u, 0.0, x)), 0.0,
                                           places=12, msg=name)

    def test_caloric_fields(self):
        """
        Tests u_t = Δ_H u and w_t = M(1) Δ_H w for the two caloric fields.
        """
        u = resolve_field('caloric-quartic', 1)
        w = resolve_field('caloric-quartic-rescaled', 1)
        for x in self.random_points(1, 5, seed=9):
            j = jet(u, 0.7, x)
            self.assertAlmostEqual(j.dt, delta_H(j), places=10)
            j = jet(w, 0.7, x)
            self.assertAlmostEqual(j.dt, M_constant(1) * delta_H(j),
                                   places=10)


##############################
#     Symbolic oracle tests
#############################


class SymbolicMeanTestCase(SimpleTestCase):

    def test_caloric_spatial_mean(self):
        """
        Tests the exact spatial mean 12s^2 + pi eps^2 s + eps^4/8.
        """
        spatial, _ = counterexample_oracle()
        expected = 12 * S ** 2 + sympy.pi * EPS ** 2 * S + EPS ** 4 / 8
        self.assertEqual(sympy.simplify(spatial - expected), 0)

    def test_time_average(self):
        """
        Tests that the window (pi/12) eps^2 gives 12 + (1/8 - pi^2/72) eps^4.
        """
        _, average = counterexample_oracle()
        expected = 12 + (sympy.Rational(1, 8) - sympy.pi ** 2 / 72) * EPS ** 4
        self.assertEqual(sympy.simplify(average - expected), 0)

    def test_harmonic_mean_off_centre(self):
        """
        Tests that x1 x2 keeps its value as mean around another centre.
        """
        x1, x2, _ = coordinate_symbols(1)
        mean = symbolic_weighted_mean(x1 * x2, center=(1, 2, 3))
        self.assertEqual(mean, 2)

    def test_vertical_mean(self):
        """
        Tests the mean of x3 around (1, 2, 3) and a linear time average.
        """
        x3 = coordinate_symbols(1)[2]
        self.assertEqual(symbolic_weighted_mean(x3, center=(1, 2, 3)), 3)
        self.assertEqual(symbolic_time_average(S, 1, sympy.Rational(1, 2)),
                         sympy.Rational(3, 4))
