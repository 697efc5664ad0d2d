import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from ..exceptions import DegenerateGradientError, DomainError, \
    InvalidArgumentError
from ..fields import resolve_field
from ..heis_core import HPoint
from ..horizontal_calculus import INFINITY, HorizontalJet, ScalarField, \
    constant_field, delta_H, delta_H_inf, format_exponent, frame_vector, \
    jet, lie_bracket, p_laplacian_normalized, parse_exponent, \
    viscosity_envelope
from .helpers import TestingHelper


def numeric(name, n=1):
    """
    The catalogue field without its exact jet, so jets are taken by
    finite differences.
    """
    return replace(resolve_field(name, n), analytic_jet=None)


def make_jet(grad0, hess):
    grad0 = np.asarray(grad0, dtype=float)
    return HorizontalJet(0.0, 0.0, grad0, 0.0, np.asarray(hess, dtype=float))


##############################
#        Exponent tests
#############################


class ExponentTestCase(SimpleTestCase):

    def test_infinity_literals(self):
        """
        Tests that the usual spellings of infinity parse to INFINITY.
        """
        for text in ('inf', 'INF', 'Infinity', '∞', math.inf, INFINITY):
            self.assertIs(parse_exponent(text), INFINITY)

    def test_numbers(self):
        """
        Tests that finite exponents > 1 are returned as floats.
        """
        self.assertEqual(parse_exponent('4'), 4.0)
        self.assertEqual(parse_exponent(1.5), 1.5)
        self.assertEqual(format_exponent(INFINITY), 'inf')

    def test_bad_exponents(self):
        """
        Tests that p <= 1, NaN and garbage are rejected.
        """
        for bad in ('1', 0.5, '-inf', 'nan', 'abc', -3):
            with self.assertRaises(InvalidArgumentError):
                parse_exponent(bad)


##############################
#        Field tests
#############################


class ScalarFieldTestCase(SimpleTestCase, TestingHelper):

    def test_point_and_array_evaluation(self):
        """
        Tests that a field accepts a point and a stack of coordinates.
        """
        u = resolve_field('x1sq', 1)
        self.assertEqual(u(0.0, HPoint((3.0, 0.0, 0.0))), 9.0)
        values = u(0.0, np.array([[1.0, 0, 0], [2.0, 0, 0]]))
        self.assertEqual(list(values), [1.0, 4.0])

    def test_dimension_mismatch(self):
        """
        Tests that points of the wrong group are rejected.
        """
        with self.assertRaises(InvalidArgumentError):
            resolve_field('x1', 1)(0.0, HPoint.origin(2))

    def test_non_finite_value(self):
        """
        Tests that a non-finite value raises a domain error.
        """
        u = ScalarField(lambda t, x: np.log(x[..., 0]), 1, 'log')
        with self.assertRaises(DomainError):
            u(0.0, np.array([-1.0, 0.0, 0.0]))

    def test_translated(self):
        """
        Tests (t, y) -> u(t, z∘y) and the left invariance of its jet.
        """
        u = resolve_field('smooth-poly', 1)
        z = np.array([0.4, -0.3, 0.2])
        y = np.array([0.1, 0.5, -0.7])
        moved = u.translated(z)
        numeric_moved = replace(moved, analytic_jet=None)
        exact = jet(moved, 0.3, y)
        approx = jet(numeric_moved, 0.3, y)
        self.assertAlmostEqual(exact.value, approx.value, places=12)
        self.assertArrayAlmostEqual(approx.grad0, exact.grad0, 1e-7)
        self.assertArrayAlmostEqual(approx.hess, exact.hess, 1e-5)

    def test_constant_field(self):
        """
        Tests that a constant field has a zero jet.
        """
        j = jet(constant_field(2.5, 2), 0.0, np.zeros(5))
        self.assertEqual(j.value, 2.5)
        self.assertEqual(delta_H(j), 0.0)


##############################
#        Jet tests
#############################


class JetTestCase(SimpleTestCase, TestingHelper):

    def test_linear_coordinate(self):
        """
        Tests that x1 has grad0 = e1 and no second derivatives.
        """
        j = jet(numeric('x1'), 0.0, np.array([0.3, 0.2, -0.1]))
        self.assertArrayAlmostEqual(j.grad0, [1.0, 0.0], 1e-9)
        self.assertArrayAlmostEqual(j.hess, np.zeros((2, 2)), 1e-5)
        self.assertAlmostEqual(j.vert, 0.0, places=9)

    def test_vertical_coordinate(self):
        """
        Tests that x3 on H^1 at (a, b, c) has grad0 = (2b, -2a), Tu = 1 and
        a zero symmetrized Hessian.
        """
        a, b, c = 0.7, -0.4, 0.2
        for u in (resolve_field('x3', 1), numeric('x3')):
            j = jet(u, 0.0, np.array([a, b, c]))
            self.assertArrayAlmostEqual(j.grad0, [2 * b, -2 * a], 1e-8)
            self.assertAlmostEqual(j.vert, 1.0, places=8)
            self.assertArrayAlmostEqual(j.hess, np.zeros((2, 2)), 1e-5)
            self.assertEqual(np.max(np.abs(j.hess - j.hess.T)), 0.0)

    def test_caloric_field(self):
        """
        Tests the jet of 12t^2 + 12x1^2 t + x1^4 at (t, x) = (1, 0).
        """
        for u in (resolve_field('caloric-quartic', 1), numeric('caloric-quartic')):
            j = jet(u, 1.0, np.zeros(3))
            self.assertAlmostEqual(j.dt, 24.0, places=6)
            self.assertArrayAlmostEqual(j.grad0, [0.0, 0.0], 1e-8)
            self.assertArrayAlmostEqual(j.hess, np.diag([24.0, 0.0]), 1e-6)

    def test_finite_differences_second_order(self):
        """
        Tests that the finite difference jet error decays like h^2.
        """
        x = np.array([0.3, -0.2, 0.1])
        exact = jet(resolve_field('smooth-exp', 1), 0.5, x)
        u = numeric('smooth-exp')
        errors = []
        for h in (1e-2, 5e-3, 2.5e-3):
            approx = jet(u, 0.5, x, h)
            errors.append(max(np.max(np.abs(approx.grad0 - exact.grad0)),
                              np.max(np.abs(approx.hess - exact.hess))))
        slopes = np.diff(np.log(errors)) / np.diff(np.log([1e-2, 5e-3,
                                                            2.5e-3]))
        self.assertTrue(np.all(slopes >= 1.9), slopes)

    def test_commutator(self):
        """
        Tests [X_1, X_2]u = -4 Tu on H^1.
        """
        u = resolve_field('smooth-trig', 1)
        x = HPoint((0.2, -0.5, 0.3))
        j = jet(u, 0.0, x)
        self.assertAlmostEqual(lie_bracket(u, 1, 2, 0.0, x, 1e-3),
                               -4 * j.vert, places=4)
        self.assertAlmostEqual(lie_bracket(u, 1, 1, 0.0, x, 1e-3), 0.0,
                               places=9)

    def test_frame_index(self):
        """
        Tests the frame vectors of H^1 and the index check.
        """
        x = HPoint((1.0, 2.0, 0.0))
        self.assertEqual(list(frame_vector(1, x)), [1.0, 0.0, 4.0])
        self.assertEqual(list(frame_vector(2, x)), [0.0, 1.0, -2.0])
        self.assertEqual(list(frame_vector(3, x)), [0.0, 0.0, 1.0])
        with self.assertRaises(InvalidArgumentError):
            frame_vector(4, x)


##############################
#        Operator tests
#############################


class OperatorTestCase(SimpleTestCase):

    def test_sub_laplacian(self):
        """
        Tests Δ_H of |x̄|^2 (= 4) and of x1 x2 (= 0) on H^1.
        """
        x = np.array([0.3, 0.4, 0.5])
        self.assertAlmostEqual(
            delta_H(jet(resolve_field('horizontal-norm-sq', 1), 0.0, x)),
            4.0, places=12)
        self.assertAlmostEqual(
            delta_H(jet(resolve_field('x1x2', 1), 0.0, x)), 0.0, places=12)

    def test_infinity_laplacian(self):
        """
        Tests Δ_H^∞ = 1 for the identity Hessian and = 2 for x1^2.
        """
        self.assertAlmostEqual(
            delta_H_inf(make_jet([0.3, -2.0], np.eye(2))), 1.0, places=14)
        j = jet(resolve_field('x1sq', 1), 0.0, np.array([0.5, 0.1, 0.0]))
        self.assertAlmostEqual(delta_H_inf(j), 2.0, places=12)

    def test_degenerate_gradient(self):
        """
        Tests that a vanishing gradient raises a degenerate gradient error.
        """
        with self.assertRaises(DegenerateGradientError) as cm:
            delta_H_inf(make_jet([0.0, 0.0], np.eye(2)))
        self.assertEqual(cm.exception.grad_norm, 0.0)

    def test_normalization(self):
        """
        Tests homogeneity in u and invariance under scaling grad0 alone.
        """
        j = make_jet([0.3, -0.8], [[1.0, 0.4], [0.4, -2.0]])
        value = delta_H_inf(j)
        self.assertAlmostEqual(delta_H_inf(j.scaled(3.0)), 3.0 * value,
                               places=12)
        stretched = make_jet(7.0 * j.grad0, j.hess)
        self.assertAlmostEqual(delta_H_inf(stretched), value, places=12)

    def test_p_laplacian(self):
        """
        Tests the p = 2, p = inf and p = 4 branches on x1^2.
        """
        j = jet(resolve_field('x1sq', 1), 0.0, np.array([0.5, 0.1, 0.0]))
        self.assertAlmostEqual(p_laplacian_normalized(j, 2), 2.0, places=12)
        self.assertAlmostEqual(p_laplacian_normalized(j, INFINITY), 2.0,
                               places=12)
        self.assertAlmostEqual(p_laplacian_normalized(j, 4), 6.0, places=12)

    def test_p_two_ignores_gradient(self):
        """
        Tests that p = 2 needs no gradient.
        """
        j = make_jet([0.0, 0.0], np.diag([1.0, 3.0]))
        self.assertEqual(p_laplacian_normalized(j, 2), 4.0)
        with self.assertRaises(DegenerateGradientError):
            p_laplacian_normalized(j, 3)

    def test_viscosity_envelope(self):
        """
        Tests the eigenvalue bounds at a degenerate gradient.
        """
        j = make_jet([0.0, 0.0], np.diag([1.0, 3.0]))
        np.testing.assert_allclose(viscosity_envelope(j, INFINITY), (1.0, 3.0))
        np.testing.assert_allclose(viscosity_envelope(j, 4), (6.0, 10.0))
        regular = make_jet([1.0, 0.0], np.diag([1.0, 3.0]))
        self.assertEqual(viscosity_envelope(regular, 4), (6.0, 6.0))
