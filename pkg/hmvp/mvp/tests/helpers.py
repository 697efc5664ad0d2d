import shutil
import tempfile

import numpy as np


class TestingHelper(object):
    """
    Contains helper methods, used on many places
    by other classes.
    """

    def random_points(self, n, count=20, scale=2.0, seed=0):
        """
        Random points of H^n with coordinates in [-scale, scale].
        """
        rng = np.random.default_rng(seed)
        return rng.uniform(-scale, scale, size=(count, 2 * n + 1))

    def make_output_dir(self):
        """
        Creates a temporary artifact directory removed after the test.
        """
        self.output_dir = tempfile.mkdtemp(prefix='hmvp-test-')
        self.addCleanup(shutil.rmtree, self.output_dir, ignore_errors=True)
        return self.output_dir

    def assertArrayAlmostEqual(self, first, second, tol=1e-12):
        first = np.asarray(first, dtype=float)
        second = np.asarray(second, dtype=float)
        self.assertEqual(first.shape, second.shape)
        scale = 1.0 + np.max(np.abs(second), initial=0.0)
        self.assertLessEqual(float(np.max(np.abs(first - second),
                                          initial=0.0)), tol * scale)

    def assertSweepsContract(self, field, tolerance):
        """
        Every slab converged and its sweep-to-sweep changes never grew.
        """
        for slab in field.convergence:
            changes = slab['changes']
            self.assertLess(changes[-1], tolerance, slab['slab'])
            for before, after in zip(changes, changes[1:]):
                self.assertLessEqual(after, before, slab['slab'])
