from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase, tag

from ..ball_quadrature import M_constant
from ..dpp_solver import DppScheme, MeanValueStencil, Provenance, \
    SolverConfig, SpaceTimeGrid, error_report, solve
from ..exceptions import ConvergenceError, InvalidArgumentError, \
    InvalidGridError
from ..fields import resolve_field
from ..heis_core import gauge_array
from ..horizontal_calculus import ScalarField, constant_field
from ..mvp_operators import MvpParams
from .helpers import TestingHelper


def small_grid(epsilon=0.2, T=0.08, **kwargs):
    """
    A cylinder of radius 0.3 with a 0.3 collar, small enough for the
    quick tests.
    """
    return SpaceTimeGrid.build(1, epsilon, 0.3, T, collar=0.3, **kwargs)


def default_cylinder(epsilon):
    """
    The gauge ball of radius 1 over (0, 0.2) with a 0.2 collar.
    """
    return SpaceTimeGrid.build(1, epsilon, 1.0, 0.2, collar=0.2)


def config_for(p, epsilon=0.2, **kwargs):
    return SolverConfig(MvpParams(1, p, epsilon), **kwargs)


def bump_field(seed, count=6):
    """
    A random sum of nonnegative Gaussian bumps, growing in t.
    """
    rng = np.random.default_rng(seed)
    centres = rng.uniform(-0.6, 0.6, size=(count, 3))
    amplitudes = rng.uniform(0.0, 0.2, size=count)
    widths = rng.uniform(0.02, 0.1, size=count)

    def evaluator(t, coords):
        d2 = np.sum((coords[..., None, :] - centres) ** 2, axis=-1)
        bumps = np.sum(amplitudes * np.exp(-d2 / widths), axis=-1)
        return bumps * (1.0 + np.asarray(t, dtype=float))

    return ScalarField(evaluator, 1, f'bumps({seed})')


##############################
#     Grid tests
#############################


class SpaceTimeGridTestCase(SimpleTestCase):

    def test_layout(self):
        """
        Tests spacings, slab times and the interior mask.
        """
        grid = small_grid()
        self.assertAlmostEqual(grid.h, 0.08, places=15)
        self.assertAlmostEqual(grid.k, 0.04, places=15)
        self.assertAlmostEqual(grid.delta_t, 0.02, places=15)
        self.assertEqual(grid.window_slabs, 2)
        self.assertEqual(grid.slab_count, 4)
        self.assertEqual(grid.size, int(np.prod(grid.shape)))
        self.assertEqual(grid.strides[-1], 1)
        self.assertTrue(grid.interior_mask.any())
        self.assertFalse(grid.interior_mask.all())
        self.assertEqual(len(grid.history_times), 1)
        self.assertAlmostEqual(grid.history_times[0], -0.02, places=15)
        stats = grid.stats()
        self.assertEqual(stats['nodes'], grid.size)
        self.assertEqual(stats['interior_nodes'],
                         int(grid.interior_mask.sum()))

    def test_nodes_are_read_only(self):
        """
        Tests that the node arrays cannot be modified.
        """
        grid = small_grid()
        with self.assertRaises(ValueError):
            grid.nodes[0, 0] = 1.0

    def test_narrow_collar(self):
        """
        Tests that a collar narrower than eps is rejected.
        """
        with self.assertRaises(InvalidGridError):
            SpaceTimeGrid.build(1, 0.2, 0.3, 0.08, collar=0.1)

    def test_bad_slab_length(self):
        """
        Tests that delta_t must divide eps^2 and not exceed it.
        """
        for delta_t in (0.03, 0.05):
            with self.assertRaises(InvalidGridError):
                small_grid(delta_t=delta_t)
        with self.assertRaises(InvalidGridError):
            small_grid(T=0.05)

    def test_bad_arguments(self):
        """
        Tests that non-positive radii and times are rejected.
        """
        with self.assertRaises(InvalidArgumentError):
            SpaceTimeGrid.build(1, 0.2, -1.0, 0.08, collar=0.3)
        with self.assertRaises(InvalidArgumentError):
            SpaceTimeGrid.build(1, 0.0, 0.3, 0.08, collar=0.3)


class MeanValueStencilTestCase(SimpleTestCase):

    def test_weights(self):
        """
        Tests non-negative weights summing to 1 with second moment
        M(n) eps^2 per horizontal coordinate.
        """
        for n, eps, h in ((1, 0.2, 0.08), (1, 0.1, 0.04), (2, 0.2, 0.08)):
            M = M_constant(n)
            stencil = MeanValueStencil.build(n, eps, h, M)
            self.assertTrue(np.all(stencil.weights >= 0))
            self.assertAlmostEqual(stencil.weights.sum(), 1.0, places=14)
            self.assertAlmostEqual(stencil.second_moment, M * eps ** 2,
                                   places=12)

    def test_closed_columns(self):
        """
        Tests that the closed ball has at least the columns of the open
        one, all within eps.
        """
        stencil = MeanValueStencil.build(1, 0.2, 0.08, M_constant(1))
        self.assertGreaterEqual(len(stencil.closed_offsets),
                                len(stencil.offsets))
        radius = np.linalg.norm(stencil.closed_offsets * 0.08, axis=1)
        self.assertTrue(np.all(radius <= 0.2 + 1e-12))


##############################
#     Scheme tests
#############################


class DppSchemeTestCase(SimpleTestCase):

    def test_linear_fields_are_fixed(self):
        """
        Tests that the one-step update leaves x1, x2 and xT unchanged.
        """
        grid = small_grid()
        for p in (2, 4, 'inf'):
            scheme = DppScheme(grid, config_for(p), threads=1)
            for name in ('x1', 'x2', 'xT'):
                U = resolve_field(name, 1)(0.0, grid.nodes)
                increment = scheme.increment(U)
                self.assertLess(float(np.max(np.abs(increment))), 1e-12,
                                (p, name))

    def test_default_cylinder(self):
        """
        Tests that the scheme fits the lattice of the default cylinder and
        keeps constant data there.
        """
        grid = default_cylinder(0.2)
        for p in (2, 4, 'inf'):
            scheme = DppScheme(grid, config_for(p), threads=1)
            self.assertEqual(scheme.interior.size,
                             int(grid.interior_mask.sum()))
        data = constant_field(0.25, 1)
        field = solve(grid, config_for(4), data, data, threads=1)
        self.assertTrue(np.all(field.values == 0.25))

    def test_short_vertical_axis(self):
        """
        Tests that a stencil reaching past the top of the lattice is
        rejected.
        """
        grid = small_grid()
        horizontal, _, vertical = grid.axes
        centre = vertical.size // 2
        cut = vertical[centre - 3:centre + 4]
        mesh = np.meshgrid(horizontal, horizontal, cut, indexing='ij')
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        short = replace(grid, axes=(horizontal, horizontal, cut),
                        nodes=nodes,
                        interior_mask=gauge_array(nodes) < grid.domain_radius)
        with self.assertRaisesMessage(InvalidGridError, 'vertically'):
            DppScheme(short, config_for(2))

    def test_mismatched_config(self):
        """
        Tests that the grid and the parameters must agree on eps.
        """
        with self.assertRaises(InvalidGridError):
            DppScheme(small_grid(), config_for(2, epsilon=0.1))

    def test_config_checks(self):
        """
        Tests the validation of the solver settings.
        """
        with self.assertRaises(InvalidArgumentError):
            config_for(2, fp_tolerance=0.0)
        with self.assertRaises(InvalidArgumentError):
            config_for(2, max_inner_iters=0)
        with self.assertRaises(InvalidArgumentError):
            config_for(2, interpolation='cubic')


class SolveTestCase(TestingHelper, SimpleTestCase):

    def test_constant_data(self):
        """
        Tests that constant data give the same constant for every p.
        """
        grid = small_grid()
        data = constant_field(3.0, 1)
        for p in (2, 4, 'inf'):
            field = solve(grid, config_for(p), data, data, threads=1)
            self.assertTrue(np.all(field.values == 3.0), p)

    def test_provenance(self):
        """
        Tests that every node is tagged with where its value comes from.
        """
        grid = small_grid()
        field = solve(grid, config_for(2), resolve_field('x1sq', 1),
                      resolve_field('x1sq', 1), threads=1)
        self.assertTrue(np.all(field.provenance[0] == Provenance.INITIAL))
        self.assertTrue(np.all(
            field.provenance[1:, grid.interior_mask] == Provenance.COMPUTED))
        self.assertTrue(np.all(
            field.provenance[1:, ~grid.interior_mask] == Provenance.LATERAL))
        self.assertEqual(len(field.convergence), grid.slab_count)
        self.assertIn(-1, field.history)

    def test_maximum_principle(self):
        """
        Tests that computed values stay within the range of the data.
        """
        grid = small_grid()
        data = resolve_field('smooth-trig', 1)
        values = data(0.0, grid.nodes)
        low, high = values.min(), values.max()
        for p in (2, 3, 'inf'):
            field = solve(grid, config_for(p), data, data, threads=1)
            computed = field.values[1:, grid.interior_mask]
            self.assertGreaterEqual(computed.min(), low - 1e-12, p)
            self.assertLessEqual(computed.max(), high + 1e-12, p)

    def test_maximum_principle_random_data(self):
        """
        Tests the maximum principle on random quadratic data in (t, x).
        """
        grid = small_grid(T=0.04)
        rng = np.random.default_rng(11)
        names = ('1', 't', 'x1', 'x2', 'x3', 'x1^2', 'x1*x2', 'x2^2', 't*x1')
        times = np.concatenate([grid.history_times, grid.times])
        for run in range(10):
            coefficients = rng.integers(-9, 10, size=len(names))
            text = ' + '.join(f'({c})*{m}' for c, m in zip(coefficients,
                                                           names))
            data = resolve_field(text, 1)
            values = np.array([data(t, grid.nodes) for t in times])
            p = (2, 3, 'inf')[run % 3]
            field = solve(grid, config_for(p), data, data, threads=1)
            computed = field.values[1:, grid.interior_mask]
            self.assertGreaterEqual(computed.min(), values.min() - 1e-12)
            self.assertLessEqual(computed.max(), values.max() + 1e-12)

    def test_monotonicity(self):
        """
        Tests that data raised by a random nonnegative perturbation give
        a solution that is nowhere lower.
        """
        grid = small_grid()
        lower = resolve_field('smooth-trig', 1)
        for seed, p in ((1, 2), (2, 4), (3, 'inf')):
            bumps = bump_field(seed)
            upper = ScalarField(
                lambda t, x, bumps=bumps: lower(t, x) + bumps(t, x), 1)
            u = solve(grid, config_for(p), lower, lower, threads=1)
            v = solve(grid, config_for(p), upper, upper, threads=1)
            self.assertTrue(np.all(u.values <= v.values + 1e-9), p)
            self.assertGreater(float(np.max(v.values - u.values)), 1e-3)

    def test_linearity(self):
        """
        Tests that for p = 2 the solution of 2 f - 3 g is 2 u_f - 3 u_g.
        """
        grid = small_grid()
        f = resolve_field('x1^2 - x2*t + x3', 1)
        g = resolve_field('x1*x2*x3 + t^2 - x2', 1)
        combined = resolve_field(
            '2*(x1^2 - x2*t + x3) - 3*(x1*x2*x3 + t^2 - x2)', 1)
        u = solve(grid, config_for(2), f, f, threads=1)
        v = solve(grid, config_for(2), g, g, threads=1)
        w = solve(grid, config_for(2), combined, combined, threads=1)
        self.assertArrayAlmostEqual(w.values, 2 * u.values - 3 * v.values,
                                    tol=1e-8)

    def test_sweeps_contract(self):
        """
        Tests that the sweep-to-sweep change decreases on the reference
        problem.
        """
        grid = small_grid()
        reference = resolve_field('caloric-quartic-rescaled', 1)
        for p in (2, 4):
            config = config_for(p)
            field = solve(grid, config, reference, reference, threads=1)
            self.assertSweepsContract(field, config.fp_tolerance)

    def test_residual(self):
        """
        Tests that every slab satisfies the update to the fixed point
        tolerance.
        """
        grid = small_grid()
        data = resolve_field('x1sq', 1)
        config = config_for(4)
        field = solve(grid, config, data, data, threads=1)
        scheme = DppScheme(grid, config, threads=1)
        for k in range(1, grid.slab_count + 1):
            self.assertLessEqual(scheme.residual(field, k),
                                 10 * config.fp_tolerance)
        with self.assertRaises(InvalidArgumentError):
            scheme.residual(field, 0)

    def test_thread_count(self):
        """
        Tests that the result does not depend on the number of threads.
        """
        grid = small_grid()
        data = resolve_field('smooth-exp', 1)
        one = solve(grid, config_for(3), data, data, threads=1)
        three = solve(grid, config_for(3), data, data, threads=3)
        self.assertTrue(np.array_equal(one.values, three.values))

    def test_no_convergence(self):
        """
        Tests that a slab stopping short of the tolerance is reported.
        """
        grid = small_grid()
        data = resolve_field('x1sq', 1)
        config = config_for(2, fp_tolerance=1e-14, max_inner_iters=1)
        with self.assertRaises(ConvergenceError) as cm:
            solve(grid, config, data, data, threads=1)
        self.assertEqual(cm.exception.diagnostics['slab'], 1)
        self.assertEqual(len(cm.exception.diagnostics['changes']), 1)

    def test_nearest_interpolation(self):
        """
        Tests the nearest neighbour variant on constant data.
        """
        grid = small_grid()
        data = constant_field(-1.5, 1)
        field = solve(grid, config_for(2, interpolation='nearest'), data,
                      data, threads=1)
        self.assertTrue(np.all(field.values == -1.5))


##############################
#     Result tests
#############################


class DiscreteFieldTestCase(TestingHelper, SimpleTestCase):

    def setUp(self):
        self.grid = small_grid()
        data = resolve_field('x1sq', 1)
        self.field = solve(self.grid, config_for(2), data, data, threads=1)

    def test_own_interpolant(self):
        """
        Tests that the field has no error against its own interpolant.
        """
        report = error_report(self.field, self.field.as_scalar_field())
        self.assertEqual(len(report), self.grid.slab_count + 1)
        for row in report:
            self.assertLessEqual(row.max_error, 1e-12)
            self.assertLessEqual(row.l2_error, 1e-12)

    def test_initial_slab_error(self):
        """
        Tests that slab 0 carries the initial data exactly.
        """
        report = error_report(self.field, resolve_field('x1sq', 1))
        self.assertEqual(report[0].max_error, 0.0)

    def test_rows(self):
        """
        Tests the exported rows and the slab selection.
        """
        rows = list(self.field.to_rows(export_every=3))
        slabs = sorted({row['k'] for row in rows})
        self.assertEqual(slabs, [0, 3, 4])
        self.assertEqual(list(rows[0]),
                         ['k', 't', 'x1', 'x2', 'x3', 'value', 'provenance'])
        self.assertEqual(rows[0]['provenance'], 'initial')
        self.assertTrue({row['provenance'] for row in rows if row['k'] > 0}
                        <= {'computed', 'lateral'})

    def test_history(self):
        """
        Tests that negative slabs read the data before t = 0.
        """
        expected = resolve_field('x1sq', 1)(-self.grid.delta_t,
                                            self.grid.nodes)
        self.assertArrayAlmostEqual(self.field.slab(-1), expected)


@tag('slow')
class ConvergenceTestCase(TestingHelper, SimpleTestCase):

    def test_caloric_reference(self):
        """
        Tests that for p = 2 the largest error over the default cylinder
        against a known solution of w_t = M(1) Δ_H w decreases when eps
        is halved.
        """
        reference = resolve_field('caloric-quartic-rescaled', 1)
        errors = []
        for eps in (0.2, 0.1):
            config = config_for(2, epsilon=eps)
            field = solve(default_cylinder(eps), config, reference,
                          reference)
            self.assertSweepsContract(field, config.fp_tolerance)
            errors.append(max(row.max_error
                              for row in error_report(field, reference)))
        self.assertLess(errors[0], 5e-3)
        self.assertLess(errors[1], errors[0])
