"""
Dynamic programming solver for

    u_t = M(n)/(M(n)(p-2)+1) |∇₀u|^(2-p) Δ_H^p u

on the cylinder (0, T) x {gauge < R}, using the mean value blend as a
one-step update.

The spatial lattice is uniform in (x̄, x_T) with spacing h = r_h eps
horizontally and k = r_v eps^2 vertically, laid out in C order with the
vertical axis last. The ball mean is discretized column by column: the
horizontal offsets are lattice vectors, so only the vertical coordinate
of a target needs interpolation. Each slab k solves

    u_k = sum_j tau_j Op(u_{k-j}),   j = 0..m,  m = eps^2 / delta_t,

(trapezoidal weights over the window [t_k - eps^2, t_k]) by Jacobi
sweeps, since the j = 0 term makes the update implicit.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from scipy.interpolate import RegularGridInterpolator
from scipy.special import roots_legendre

from .exceptions import ConvergenceError, DomainError, InvalidArgumentError, \
    InvalidGridError
from .heis_core import HPoint, gauge_array
from .horizontal_calculus import ScalarField
from .mvp_operators import MvpParams
from .parallel import map_chunks, resolve_threads

logger = logging.getLogger(__name__)

INTERPOLATIONS = ('multilinear', 'nearest')


class Provenance(enum.IntEnum):
    INITIAL = 0
    LATERAL = 1
    COMPUTED = 2


def _integer_ratio(value, name):
    ratio = round(value)
    if ratio < 1 or abs(value - ratio) > 1e-9 * max(1.0, value):
        raise InvalidGridError(f'{name} = {value} is not a positive integer!')
    return int(ratio)


##############################
#   Grid
#############################


@dataclass(frozen=True, eq=False)
class SpaceTimeGrid:
    """
    Lattice nodes covering the domain {gauge < domain_radius} plus a
    collar, and the slab times t_k = k delta_t on [0, T].
    """
    n: int
    epsilon: float
    domain_radius: float
    collar: float
    T: float
    delta_t: float
    h: float
    k: float
    axes: tuple
    nodes: np.ndarray
    interior_mask: np.ndarray
    times: np.ndarray
    window_slabs: int

    @classmethod
    def build(cls, n, epsilon, domain_radius, T, delta_t=None, collar=None,
              horizontal_ratio=None, vertical_ratio=None):
        """
        :param n: group index
        :param epsilon: ball radius of the update
        :param domain_radius: Ω is the gauge ball of this radius
        :param T: final time
        :param delta_t: slab length, must divide eps^2; defaults to
            eps^2 / HMVP_WINDOW_SLABS
        :param collar: width of the lateral data strip, at least eps
        :raises InvalidGridError: on a narrow collar or a bad slab length
        """
        for name, value in (('eps', epsilon), ('domain_radius', domain_radius),
                            ('T', T)):
            if not (value > 0 and math.isfinite(value)):
                raise InvalidArgumentError(
                    settings.ERR_MSG_NON_POSITIVE.format(name, value))
        collar = epsilon if collar is None else collar
        if collar < epsilon:
            raise InvalidGridError(
                settings.ERR_MSG_COLLAR.format(collar, epsilon))
        delta_t = epsilon ** 2 / settings.HMVP_WINDOW_SLABS \
            if delta_t is None else delta_t
        if not (0 < delta_t <= epsilon ** 2 * (1 + 1e-12)):
            raise InvalidGridError(
                settings.ERR_MSG_WINDOW.format(delta_t, epsilon ** 2))
        try:
            window_slabs = _integer_ratio(epsilon ** 2 / delta_t, 'eps^2/dt')
        except InvalidGridError:
            raise InvalidGridError(
                settings.ERR_MSG_WINDOW.format(delta_t, epsilon ** 2)) from None
        slabs = _integer_ratio(T / delta_t, 'T/delta_t')

        h = (settings.HMVP_HORIZONTAL_RATIO if horizontal_ratio is None
             else horizontal_ratio) * epsilon
        k = (settings.HMVP_VERTICAL_RATIO if vertical_ratio is None
             else vertical_ratio) * epsilon ** 2
        if not (h > 0 and k > 0):
            raise InvalidArgumentError(
                settings.ERR_MSG_NON_POSITIVE.format('lattice spacing',
                                                     min(h, k)))
        outer = domain_radius + collar
        half_h = int(math.ceil(outer / h)) + 1
        half_v = int(math.ceil(outer ** 2 / k)) + 2
        horizontal = np.arange(-half_h, half_h + 1) * h
        vertical = np.arange(-half_v, half_v + 1) * k
        axes = (horizontal,) * (2 * n) + (vertical,)
        mesh = np.meshgrid(*axes, indexing='ij')
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        interior = gauge_array(nodes) < domain_radius
        times = np.arange(slabs + 1) * delta_t
        for array in (nodes, interior, times):
            array.setflags(write=False)
        logger.debug('grid n=%s eps=%s: %s nodes, %s interior, %s slabs',
                     n, epsilon, nodes.shape[0], int(interior.sum()), slabs)
        return cls(n, float(epsilon), float(domain_radius), float(collar),
                   float(T), float(delta_t), float(h), float(k), axes, nodes,
                   interior, times, window_slabs)

    @property
    def shape(self):
        return tuple(axis.size for axis in self.axes)

    @property
    def size(self):
        return self.nodes.shape[0]

    @property
    def slab_count(self):
        return self.times.size - 1

    @property
    def strides(self):
        """
        Flat index steps along every lattice axis.
        """
        shape = self.shape
        return tuple(int(np.prod(shape[i + 1:])) for i in range(len(shape)))

    @property
    def history_times(self):
        """
        Slab times before 0 needed by the first window, oldest first.
        """
        return -np.arange(self.window_slabs - 1, 0, -1) * self.delta_t

    @property
    def cell_volume(self):
        return self.h ** (2 * self.n) * self.k

    def node(self, i):
        return HPoint.from_array(self.nodes[i])

    def stats(self):
        return {'n': self.n, 'epsilon': self.epsilon,
                'domain_radius': self.domain_radius, 'collar': self.collar,
                'T': self.T, 'delta_t': self.delta_t, 'h': self.h,
                'k': self.k, 'shape': list(self.shape), 'nodes': self.size,
                'interior_nodes': int(self.interior_mask.sum()),
                'slabs': self.slab_count,
                'window_slabs': self.window_slabs}


@dataclass(frozen=True)
class SolverConfig:
    params: MvpParams
    fp_tolerance: float = field(
        default_factory=lambda: settings.HMVP_FP_TOLERANCE)
    max_inner_iters: int = field(
        default_factory=lambda: settings.HMVP_MAX_INNER_ITERS)
    interpolation: str = 'multilinear'
    vertical_nodes: int = field(
        default_factory=lambda: settings.HMVP_VERTICAL_NODES)

    def __post_init__(self):
        if not self.fp_tolerance > 0:
            raise InvalidArgumentError(settings.ERR_MSG_NON_POSITIVE.format(
                'fp_tolerance', self.fp_tolerance))
        if not self.max_inner_iters >= 1:
            raise InvalidArgumentError(settings.ERR_MSG_NON_POSITIVE.format(
                'max_inner_iters', self.max_inner_iters))
        if self.interpolation not in INTERPOLATIONS:
            raise InvalidArgumentError(
                f'Unknown interpolation {self.interpolation}!')


##############################
#   Discrete operator
#############################


@dataclass(frozen=True, eq=False)
class MeanValueStencil:
    """
    Discrete psi-weighted ball mean and the column set of the closed
    ball.

    ``offsets`` are integer horizontal lattice offsets a (|a h| < eps);
    column a carries ``vertical_nodes`` Gauss-Legendre points z_T on the
    chord |z_T| < c_a = (eps^4 - |a h|^4)^(1/2). ``weights`` are
    non-negative, sum to 1 and give every horizontal coordinate the
    second moment M(n) eps^2.
    ``closed_offsets`` / ``closed_chords`` describe the columns of the
    closed ball used by the midrange.
    """
    offsets: np.ndarray
    chords: np.ndarray
    vertical: np.ndarray
    weights: np.ndarray
    closed_offsets: np.ndarray
    closed_chords: np.ndarray
    second_moment: float

    @classmethod
    def build(cls, n, epsilon, h, M, vertical_nodes=3):
        reach = int(math.floor(epsilon / h)) + 1
        grid = np.array(np.meshgrid(*[np.arange(-reach, reach + 1)] * (2 * n),
                                    indexing='ij')).reshape(2 * n, -1).T
        radius2 = np.sum(grid ** 2, axis=1) * h * h
        closed = radius2 <= epsilon ** 2 * (1 + 1e-12)
        open_ = radius2 < epsilon ** 2 * (1 - 1e-12)
        eps4 = epsilon ** 4

        offsets = grid[open_]
        r2 = radius2[open_]
        chords = np.sqrt(np.maximum(eps4 - r2 ** 2, 0.0))
        xi, w = roots_legendre(vertical_nodes)
        vertical = chords[:, None] * xi[None, :]
        rho2 = np.sqrt(r2[:, None] ** 2 + vertical ** 2)
        psi = np.where(rho2 > 0, r2[:, None] / np.where(rho2 > 0, rho2, 1.0),
                       0.0)
        weights = chords[:, None] * w[None, :] * psi
        weights /= weights.sum()

        target = M * epsilon ** 2
        per_coordinate = r2 / (2 * n)
        moment = float(weights.sum(axis=1) @ per_coordinate)
        if moment < target:
            ring = r2 >= r2.max() * (1 - 1e-12)
            ring_weights = np.where(ring[:, None], chords[:, None] * w
                                    * psi, 0.0)
            ring_weights /= ring_weights.sum()
            ring_moment = float(ring_weights.sum(axis=1) @ per_coordinate)
            if ring_moment < target:
                raise InvalidGridError(
                    f'Lattice spacing {h} is too coarse for eps = {epsilon}!')
            lam = (ring_moment - target) / (ring_moment - moment)
            weights = lam * weights + (1 - lam) * ring_weights
        elif moment > target:
            centre = r2 == 0
            centre_weights = np.where(centre[:, None], chords[:, None] * w,
                                      0.0)
            centre_weights /= centre_weights.sum()
            lam = target / moment
            weights = lam * weights + (1 - lam) * centre_weights
        weights = weights / weights.sum()
        second_moment = float(weights.sum(axis=1) @ per_coordinate)

        closed_offsets = grid[closed]
        closed_chords = np.sqrt(np.maximum(eps4 - radius2[closed] ** 2, 0.0))
        return cls(offsets, chords, vertical, weights, closed_offsets,
                   closed_chords, second_moment)

    @property
    def size(self):
        return int(np.count_nonzero(self.weights))


class DppScheme:
    """
    The discrete update on a grid. Values are handled as increments
    relative to the node's own value, so constant data stay exactly
    constant.
    """

    def __init__(self, grid, config, threads=None):
        params = config.params
        if params.n != grid.n or params.epsilon != grid.epsilon:
            raise InvalidGridError(
                'Solver parameters and grid disagree on n or eps!')
        self.grid = grid
        self.config = config
        self.params = params
        self.threads = resolve_threads(threads)
        self.stencil = MeanValueStencil.build(
            grid.n, grid.epsilon, grid.h, params.M, config.vertical_nodes)
        self.interior = np.flatnonzero(grid.interior_mask)
        self.tau = self._time_weights(grid.window_slabs)

        n = grid.n
        strides = np.array(grid.strides)
        self.vertical_stride = int(strides[-1])
        x = grid.nodes[self.interior]
        self._columns = self._prepare(self.stencil.offsets, x, strides)
        self._closed = self._prepare(self.stencil.closed_offsets, x, strides)
        self._validate(x, strides)
        logger.debug('scheme: %s interior nodes, %s mean entries, '
                     '%s midrange columns, tau=%s', self.interior.size,
                     self.stencil.size, len(self._closed), self.tau)

    @staticmethod
    def _time_weights(m):
        tau = np.full(m + 1, 1.0 / m)
        tau[0] = tau[-1] = 0.5 / m
        return tau

    def _prepare(self, offsets, x, strides):
        # per column: flat offset and the shear x∘z - x - z in units of k
        n = self.grid.n
        h, k = self.grid.h, self.grid.k
        columns = []
        for a in offsets:
            flat = int(a @ strides[:-1])
            z = a * h
            shear = 2.0 * (x[:, n:2 * n] @ z[:n] - x[:, :n] @ z[n:2 * n])
            columns.append((flat, shear / k))
        return columns

    def _validate(self, x, strides):
        grid = self.grid
        k = grid.k
        shape = grid.shape
        if x.shape[0] == 0:
            raise InvalidGridError(
                f'No lattice node lies in the gauge ball of radius '
                f'{grid.domain_radius}!')
        index = np.round((x - np.array([ax[0] for ax in grid.axes]))
                         / np.array([grid.h] * (2 * grid.n) + [k])
                         ).astype(np.intp)
        vertical = index[:, -1]
        for a, (flat, shear), chord in zip(self.stencil.closed_offsets,
                                           self._closed,
                                           self.stencil.closed_chords):
            horizontal = index[:, :-1] + a
            if horizontal.min() < 0 or horizontal.max() > shape[0] - 1:
                raise InvalidGridError('Stencil leaves the lattice '
                                       'horizontally; widen the collar!')
            # node by node, one spare row for the linear interpolation
            reach = chord / k
            lowest = int((vertical + np.floor(shear - reach)).min()) - 1
            highest = int((vertical + np.ceil(shear + reach)).max()) + 1
            if lowest < 0 or highest > shape[-1] - 1:
                raise InvalidGridError('Stencil leaves the lattice '
                                       'vertically; widen the collar!')

    ##############################
    #   Operator increments
    #############################

    def _mean_increment(self, U, start, stop):
        idx = self.interior[start:stop]
        base = U[idx]
        acc = np.zeros(idx.size)
        st = self.vertical_stride
        k = self.grid.k
        nearest = self.config.interpolation == 'nearest'
        for (flat, shear), vertical, weights in zip(
                self._columns, self.stencil.vertical, self.stencil.weights):
            target = idx + flat
            s = shear[start:stop]
            for z, w in zip(vertical, weights):
                if w == 0:
                    continue
                q = s + z / k
                if nearest:
                    acc += w * (U[target + np.rint(q).astype(np.intp) * st]
                                - base)
                    continue
                low = np.floor(q)
                frac = q - low
                j = target + low.astype(np.intp) * st
                u0 = U[j]
                acc += w * ((u0 - base) + frac * (U[j + st] - u0))
        return acc

    def _midrange_increment(self, U, start, stop):
        idx = self.interior[start:stop]
        base = U[idx]
        top = np.full(idx.size, -np.inf)
        bottom = np.full(idx.size, np.inf)
        st = self.vertical_stride
        k = self.grid.k
        last = U.size - 1
        for (flat, shear), chord in zip(self._closed,
                                        self.stencil.closed_chords):
            s = shear[start:stop]
            lo = np.ceil(s - chord / k - 1e-12).astype(np.intp)
            hi = np.floor(s + chord / k + 1e-12).astype(np.intp)
            target = idx + flat
            for d in range(int(lo.min(initial=0)), int(hi.max(initial=0)) + 1):
                inside = (lo <= d) & (d <= hi)
                if not inside.any():
                    continue
                values = U[np.clip(target + d * st, 0, last)]
                np.maximum(top, values, out=top, where=inside)
                np.minimum(bottom, values, out=bottom, where=inside)
        return 0.5 * ((top - base) + (bottom - base))

    def _increment_chunk(self, U, out, start, stop):
        alpha, beta = self.params.alpha, self.params.beta
        if alpha == 0:
            out[start:stop] = self._mean_increment(U, start, stop)
        elif beta == 0:
            out[start:stop] = self._midrange_increment(U, start, stop)
        else:
            out[start:stop] = (alpha * self._midrange_increment(U, start, stop)
                               + beta * self._mean_increment(U, start, stop))

    def increment(self, U):
        """
        Op(U) - U on the interior nodes, Op being the blend of the
        lattice midrange and the discrete weighted mean at one time.

        :param U: full-lattice values of one slab
        :type U: numpy.ndarray
        """
        U = np.asarray(U, dtype=float)
        out = np.empty(self.interior.size)
        map_chunks(lambda a, b: self._increment_chunk(U, out, a, b),
                   self.interior.size, self.threads)
        return out

    def update(self, U):
        """
        Op(U) on the interior nodes.
        """
        return np.asarray(U, dtype=float)[self.interior] + self.increment(U)

    ##############################
    #   Time marching
    #############################

    def _step(self, window, increments, v):
        # one Jacobi sweep for the newest slab; window[0] is the current
        # slab (interior entries are replaced by v), window[i] slab k-i
        base = window[1][self.interior]
        tau = self.tau
        current = window[0].copy()
        current[self.interior] = v
        new = tau[0] * ((v - base) + self.increment(current))
        for i in range(1, len(tau)):
            new += tau[i] * ((window[i][self.interior] - base)
                             + increments[i])
        return base + new

    def march(self, initial, lateral):
        """
        Runs every slab.

        :param initial: data for t <= 0 (all nodes)
        :type initial: ScalarField
        :param lateral: data for t > 0 on the nodes outside Ω
        :type lateral: ScalarField
        :rtype: DiscreteField
        """
        grid = self.grid
        m = grid.window_slabs
        K = grid.slab_count
        interior = self.interior
        outside = ~grid.interior_mask
        values = np.empty((K + 1, grid.size))
        provenance = np.full((K + 1, grid.size), Provenance.COMPUTED,
                             dtype=np.int8)

        history = [np.asarray(initial(t, grid.nodes), dtype=float)
                   for t in grid.history_times]
        values[0] = initial(0.0, grid.nodes)
        provenance[0] = Provenance.INITIAL
        provenance[1:, outside] = Provenance.LATERAL
        # slabs k-m .. k-1 and their increments, newest first
        slabs = [values[0]] + history[::-1]
        increments = [self.increment(u) for u in slabs]
        low = min([values[0].min()] + [u.min() for u in history])
        high = max([values[0].max()] + [u.max() for u in history])

        convergence = []
        for k in range(1, K + 1):
            t = grid.times[k]
            current = values[k]
            current[outside] = lateral(t, grid.nodes[outside])
            low = min(low, current[outside].min(initial=low))
            high = max(high, current[outside].max(initial=high))

            previous = slabs[0][interior]
            if len(slabs) > 1 and k > 1:
                guess = 2 * previous - values[k - 2][interior]
            else:
                guess = previous.copy()
            v = np.clip(guess, low, high)
            window = [current] + slabs[:m]
            padded = [None] + increments[:m]
            changes = []
            for sweep in range(1, self.config.max_inner_iters + 1):
                new = self._step(window, padded, v)
                change = float(np.max(np.abs(new - v), initial=0.0))
                changes.append(change)
                v = new
                if change < self.config.fp_tolerance:
                    break
            else:
                diagnostics = {'slab': k, 't': float(t), 'sweeps': sweep,
                               'changes': changes}
                raise ConvergenceError(settings.ERR_MSG_NO_CONVERGENCE.format(
                    k, sweep, changes[-1]), diagnostics)
            current[interior] = v
            logger.debug('slab %s: %s sweeps, last change %.3e',
                         k, len(changes), changes[-1])
            convergence.append({'slab': k, 't': float(t),
                                'sweeps': len(changes), 'changes': changes})
            slabs = [current] + slabs[:m - 1]
            increments = [self.increment(current)] + increments[:m - 1]

        logger.info('solved %s slabs on %s interior nodes, %s sweeps in total',
                    K, interior.size, sum(c['sweeps'] for c in convergence))
        return DiscreteField(grid, values, provenance, convergence)

    def residual(self, field, k):
        """
        max |u_k - sum_j tau_j Op(u_{k-j})| over the interior nodes, the
        slabs before 0 being taken from ``field.history``.
        """
        if not 1 <= k <= field.grid.slab_count:
            raise InvalidArgumentError(f'Slab {k} is out of range!')
        window = [field.slab(k - i) for i in range(self.grid.window_slabs + 1)]
        increments = [None] + [self.increment(u) for u in window[1:]]
        update = self._step(window, increments, field.slab(k)[self.interior])
        return float(np.max(np.abs(update - field.slab(k)[self.interior]),
                            initial=0.0))


##############################
#   Results
#############################


@dataclass(eq=False)
class DiscreteField:
    """
    Per-slab values on every lattice node with their provenance.
    ``convergence`` keeps the sweep history of every slab.
    """
    grid: SpaceTimeGrid
    values: np.ndarray
    provenance: np.ndarray
    convergence: list = field(default_factory=list)
    history: dict = field(default_factory=dict)

    def slab(self, k):
        """
        Full-lattice values of slab k; k < 0 reads the stored history.
        """
        if k >= 0:
            return self.values[k]
        return self.history[k]

    def as_scalar_field(self):
        """
        The field (t, x) -> value, multilinear in space and linear in
        time between lattice nodes and slabs, exact at nodes.
        """
        grid = self.grid
        interpolator = RegularGridInterpolator(
            (grid.times,) + tuple(grid.axes),
            self.values.reshape((grid.times.size,) + grid.shape))

        def evaluator(t, coords):
            coords = np.asarray(coords, dtype=float)
            shape = np.broadcast_shapes(np.shape(t), coords.shape[:-1])
            points = np.concatenate(
                [np.broadcast_to(t, shape)[..., None],
                 np.broadcast_to(coords, shape + coords.shape[-1:])], axis=-1)
            try:
                return interpolator(points)
            except ValueError as exc:
                raise DomainError(str(exc)) from None

        return ScalarField(evaluator, grid.n, 'discrete')

    def to_rows(self, export_every=1):
        """
        Rows (k, t, coordinates, value, provenance) for the nodes with
        gauge <= R + eps, every ``export_every``-th slab plus the last.
        """
        grid = self.grid
        support = np.flatnonzero(
            gauge_array(grid.nodes) <= grid.domain_radius + grid.epsilon)
        slabs = list(range(0, grid.slab_count + 1, max(1, export_every)))
        if slabs[-1] != grid.slab_count:
            slabs.append(grid.slab_count)
        names = [f'x{i + 1}' for i in range(2 * grid.n + 1)]
        for k in slabs:
            t = float(grid.times[k])
            for i in support:
                row = {'k': k, 't': t}
                row.update(zip(names, (float(c) for c in grid.nodes[i])))
                row['value'] = float(self.values[k, i])
                row['provenance'] = Provenance(
                    int(self.provenance[k, i])).name.lower()
                yield row


@dataclass(frozen=True)
class SlabError:
    k: int
    t: float
    max_error: float
    l2_error: float


def error_report(field, reference):
    """
    Max and discrete L2 errors (sqrt(h^2n k sum e^2)) of the interior
    nodes against ``reference``, per slab.

    :rtype: list of SlabError
    """
    grid = field.grid
    interior = np.flatnonzero(grid.interior_mask)
    x = grid.nodes[interior]
    report = []
    for k, t in enumerate(grid.times):
        error = np.abs(field.values[k, interior]
                       - np.asarray(reference(float(t), x), dtype=float))
        report.append(SlabError(
            k, float(t), float(np.max(error, initial=0.0)),
            float(math.sqrt(grid.cell_volume * float(error @ error)))))
    return report


def solve(grid, config, initial, lateral, threads=None):
    """
    Marches the update over every slab of ``grid``.

    :param grid: lattice and slab times
    :type grid: SpaceTimeGrid
    :param config: operator and iteration settings
    :type config: SolverConfig
    :param initial: data for t <= 0
    :type initial: ScalarField
    :param lateral: data outside Ω for t > 0
    :type lateral: ScalarField
    :raises ConvergenceError: when a slab does not converge
    :rtype: DiscreteField
    """
    scheme = DppScheme(grid, config, threads)
    result = scheme.march(initial, lateral)
    result.history = {-(i + 1): np.asarray(initial(t, grid.nodes), float)
                      for i, t in enumerate(grid.history_times[::-1])}
    return result
