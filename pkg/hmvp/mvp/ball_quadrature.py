"""
psi-weighted integration over gauge balls in polar coordinates, the
second-moment constants M(n), and extremum search over closed balls.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy
from django.conf import settings
from scipy.special import beta as beta_function, roots_legendre

from .exceptions import DegenerateGradientError, InvalidArgumentError
from .heis_core import HPoint, PolarCoord, gauge_array, group_inv_array, \
    group_mul_array, polar_jacobian_array, polar_to_array, psi_array
from .horizontal_calculus import gradient_threshold, jet
from .parallel import map_chunks

logger = logging.getLogger(__name__)


def _check_positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise InvalidArgumentError(
            settings.ERR_MSG_NON_POSITIVE.format(name, value))


def _check_group_index(n):
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise InvalidArgumentError(
            settings.ERR_MSG_NON_POSITIVE.format('n', n))


def _as_coords(x):
    return x.as_array() if isinstance(x, HPoint) else np.asarray(x, float)


##############################
#   Closed forms
#############################


def _double_factorial(k):
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def M_constant(n):
    """
    The normalized psi-weighted second moment of one horizontal
    coordinate over the unit gauge ball:

        (2n+2)/(2n+4) * (n!!)^2 / ((n+1)!! (n-1)!!) / (2n)

    times pi/2 for odd n and 2/pi for even n. M(1) = pi/12.
    """
    _check_group_index(n)
    ratio = (_double_factorial(n) ** 2
             / (_double_factorial(n + 1) * _double_factorial(n - 1)))
    parity = math.pi / 2 if n % 2 else 2 / math.pi
    return (2 * n + 2) / (2 * n + 4) * ratio / (2 * n) * parity


def M_constant_exact(n):
    """
    Symbolic version of :func:`M_constant`.
    """
    _check_group_index(n)
    ratio = sympy.Rational(
        _double_factorial(n) ** 2,
        _double_factorial(n + 1) * _double_factorial(n - 1))
    parity = sympy.pi / 2 if n % 2 else 2 / sympy.pi
    return sympy.Rational(2 * n + 2, (2 * n + 4) * 2 * n) * ratio * parity


def _sine_power_integral(m):
    # int_0^pi sin^m
    return beta_function(0.5, (m + 1) / 2)


def _sphere_area(n):
    # |S^{2n-1}|
    return 2 * math.pi ** n / math.factorial(n - 1)


def weighted_ball_volume(n, r):
    """
    |B_r| = int over B_r of psi.
    """
    _check_group_index(n)
    return (r ** (2 * n + 2) / (2 * n + 2) * _sine_power_integral(n)
            * _sphere_area(n))


def lebesgue_ball_volume(n, r):
    _check_group_index(n)
    return (r ** (2 * n + 2) / (2 * n + 2) * _sine_power_integral(n - 1)
            * _sphere_area(n))


def weighted_sphere_measure(n, r):
    """
    |dB_r| = d/dr |B_r|.
    """
    _check_group_index(n)
    return r ** (2 * n + 1) * _sine_power_integral(n) * _sphere_area(n)


##############################
#   Quadrature rules
#############################


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Tensor-product rule on B_eps(0) in polar coordinates.

    ``weights`` already contain the polar Jacobian; ``points`` and ``psi``
    are the Cartesian nodes and the weight function at them. All arrays
    are read-only so that a cached rule can be shared between threads.
    """
    n: int
    epsilon: float
    resolution: tuple
    rho: np.ndarray
    phi: np.ndarray
    thetas: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    psi: np.ndarray

    @property
    def size(self):
        return self.weights.shape[0]

    @property
    def psi_weights(self):
        return self.weights * self.psi

    @property
    def weighted_volume(self):
        return float(np.sum(self.weights * self.psi))

    @property
    def volume(self):
        return float(np.sum(self.weights))

    def nodes(self):
        """
        Iterates over (PolarCoord, weight) pairs.
        """
        for i in range(self.size):
            yield (PolarCoord(float(self.rho[i]), float(self.phi[i]),
                              tuple(self.thetas[i])),
                   float(self.weights[i]))


def _gauss_legendre(count, a, b):
    x, w = roots_legendre(count)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def default_resolution(n):
    return tuple(settings.HMVP_QUADRATURE_RESOLUTION.get(
        n, settings.HMVP_QUADRATURE_FALLBACK_RESOLUTION))


def normalize_resolution(n, resolution):
    """
    Expands (n_rho, n_phi, n_theta) to one count per polar variable:
    (n_rho, n_phi, n_theta_1, ..., n_theta_{2n-1}). A full list is
    accepted as is.
    """
    if resolution is None:
        resolution = default_resolution(n)
    counts = tuple(resolution)
    if len(counts) == 3:
        counts = counts[:2] + (counts[2],) * (2 * n - 1)
    if (len(counts) != 2 * n + 1
            or not all(isinstance(c, (int, np.integer)) and c >= 2
                       for c in counts)):
        raise InvalidArgumentError(
            settings.ERR_MSG_BAD_RESOLUTION.format(resolution))
    return tuple(int(c) for c in counts)


def build_rule(n, epsilon, resolution=None):
    """
    Builds the tensor-product rule for B_eps(0) in H^n: Gauss-Legendre in
    rho on (0, eps), in phi on (0, pi) and in theta_1..theta_{2n-2} on
    (0, pi), periodic trapezoid in theta_{2n-1} on [0, 2 pi).
    Rules are cached per (n, eps, resolution).

    :param n: group index
    :type n: int
    :param epsilon: ball radius
    :type epsilon: float
    :param resolution: (n_rho, n_phi, n_theta) or one count per variable
    :type resolution: tuple
    """
    _check_group_index(n)
    _check_positive('epsilon', epsilon)
    return _build_rule(int(n), float(epsilon),
                       normalize_resolution(n, resolution))


@lru_cache(maxsize=32)
def _build_rule(n, epsilon, counts):
    axes = [_gauss_legendre(counts[0], 0.0, epsilon),
            _gauss_legendre(counts[1], 0.0, math.pi)]
    for count in counts[2:-1]:
        axes.append(_gauss_legendre(count, 0.0, math.pi))
    last = counts[-1]
    axes.append((np.arange(last) * (2 * math.pi / last),
                 np.full(last, 2 * math.pi / last)))

    grids = np.meshgrid(*[x for x, _ in axes], indexing='ij')
    wgrids = np.meshgrid(*[w for _, w in axes], indexing='ij')
    flat = [g.ravel() for g in grids]
    rho, phi = flat[0], flat[1]
    thetas = np.stack(flat[2:], axis=-1)
    weights = np.prod([w.ravel() for w in wgrids], axis=0)
    weights = weights * polar_jacobian_array(rho, phi, thetas)
    points = polar_to_array(rho, phi, thetas)
    psi = np.sin(phi)

    if weights.size > settings.HMVP_MAX_RULE_NODES:
        logger.warning('quadrature rule n=%s has %s nodes', n, weights.size)
    logger.debug('built rule n=%s eps=%s counts=%s nodes=%s',
                 n, epsilon, counts, weights.size)
    for array in (rho, phi, thetas, weights, points, psi):
        array.setflags(write=False)
    return QuadratureRule(n, epsilon, counts, rho, phi, thetas, weights,
                          points, psi)


def weighted_ball_average(f, center, rule):
    """
    The psi-weighted mean of ``f`` over B_eps(center):

        sum w psi(z) f(center∘z) / sum w psi(z)

    with z running over the rule nodes. psi is taken at the offset z,
    i.e. at the left-translated coordinate.

    :param f: vectorized function of coordinates (..., 2n+1)
    :type f: callable
    :param center: ball center
    :type center: HPoint
    :param rule: rule built for the same n and eps
    :type rule: QuadratureRule
    """
    c = _as_coords(center)
    values = np.asarray(f(group_mul_array(c, rule.points)), dtype=float)
    return normalized_average(rule.psi_weights, values)


def normalized_average(weights, values):
    """
    sum w v / sum w, summed as increments over the first value so that
    equal values come back unchanged.
    """
    values = np.asarray(values, dtype=float)
    base = values.flat[0]
    return float(base + np.dot(weights, values - base) / np.sum(weights))


def volume_error_estimate(n, epsilon, resolution=None):
    """
    |B_eps| from the rule at ``resolution``, with the change against the
    rule at half resolution (plus a roundoff floor) as error estimate.

    :returns: (estimate, error)
    """
    counts = normalize_resolution(n, resolution)
    half = tuple(max(2, c // 2) for c in counts)
    estimate = build_rule(n, epsilon, counts).weighted_volume
    coarse = build_rule(n, epsilon, half).weighted_volume
    floor = 64 * np.finfo(float).eps * abs(estimate)
    return estimate, abs(estimate - coarse) + floor


def monte_carlo_volume(n, epsilon, samples=10 ** 6, seed=0, weighted=False,
                       threads=1, chunk=10 ** 6):
    """
    Rejection-sampling estimate of the gauge ball volume (psi-weighted
    if ``weighted``) from the box [-eps, eps]^{2n} x [-eps^2, eps^2].
    Every chunk has its own seeded stream, so the result only depends on
    ``seed``, ``samples`` and ``chunk``.
    """
    _check_group_index(n)
    _check_positive('epsilon', epsilon)
    box = (2 * epsilon) ** (2 * n) * 2 * epsilon ** 2
    count = -(-samples // chunk)
    streams = np.random.SeedSequence(seed).spawn(count)
    half_widths = np.array([epsilon] * (2 * n) + [epsilon ** 2])

    def work(start, stop):
        total = 0.0
        for i in range(start, stop):
            size = min(chunk, samples - i * chunk)
            rng = np.random.default_rng(streams[i])
            pts = rng.uniform(-1.0, 1.0, size=(size, 2 * n + 1)) * half_widths
            inside = gauge_array(pts) < epsilon
            total += float(np.sum(psi_array(pts[inside]))) if weighted \
                else float(np.count_nonzero(inside))
        return total

    total = sum(map_chunks(work, count, threads))
    return box * total / samples


##############################
#   Moments
#############################


@dataclass(frozen=True)
class MomentReport:
    """
    The first and second psi-weighted moments over B_eps(0), normalized
    by the weighted volume (and by eps, eps^2 where it makes them
    dimensionless).
    """
    n: int
    epsilon: float
    odd_moments: float
    vertical_moment: float
    cross_moments: float
    diagonal_moments: tuple
    M_estimate: float
    M_exact: float

    @property
    def M_relative_error(self):
        return abs(self.M_estimate - self.M_exact) / self.M_exact

    @property
    def diagonal_spread(self):
        diag = np.asarray(self.diagonal_moments)
        return float((diag.max() - diag.min()) / self.epsilon ** 2)

    def checks(self, moment_tol=None, m_tol=None):
        moment_tol = settings.HMVP_MOMENT_TOLERANCE if moment_tol is None \
            else moment_tol
        m_tol = settings.HMVP_M_TOLERANCE if m_tol is None else m_tol
        return {
            'odd_moments': self.odd_moments <= moment_tol,
            'vertical_moment': self.vertical_moment <= moment_tol,
            'cross_moments': self.cross_moments <= moment_tol,
            'M_estimate': self.M_relative_error <= m_tol,
        }

    def passed(self, moment_tol=None, m_tol=None):
        return all(self.checks(moment_tol, m_tol).values())

    def as_dict(self):
        return {
            'n': self.n,
            'epsilon': self.epsilon,
            'odd_moments': self.odd_moments,
            'vertical_moment': self.vertical_moment,
            'cross_moments': self.cross_moments,
            'diagonal_moments': list(self.diagonal_moments),
            'M_estimate': self.M_estimate,
            'M_exact': self.M_exact,
            'M_relative_error': self.M_relative_error,
            'diagonal_spread': self.diagonal_spread,
        }


def moment_check(n, epsilon, rule=None):
    """
    First moments, the vertical moment, and the second moments of the
    horizontal coordinates over B_eps(0).

    :rtype: MomentReport
    """
    rule = build_rule(n, epsilon) if rule is None else rule
    if rule.n != n or rule.epsilon != epsilon:
        raise InvalidArgumentError(
            settings.ERR_MSG_DIMENSION_MISMATCH.format(rule.n, n))
    w = rule.psi_weights
    total = np.sum(w)
    y = rule.points[:, :2 * n]
    first = (w @ y) / total
    vertical = (w @ rule.points[:, -1]) / total
    second = (y.T * w) @ y / total
    off_diagonal = second - np.diag(np.diag(second))
    diagonal = np.diag(second)
    return MomentReport(
        n=n,
        epsilon=float(epsilon),
        odd_moments=float(np.max(np.abs(first)) / epsilon),
        vertical_moment=float(abs(vertical) / epsilon ** 2),
        cross_moments=float(np.max(np.abs(off_diagonal)) / epsilon ** 2),
        diagonal_moments=tuple(float(d) for d in diagonal),
        M_estimate=float(np.mean(diagonal) / epsilon ** 2),
        M_exact=M_constant(n),
    )


##############################
#   Extremum search
#############################


@dataclass(frozen=True)
class SearchConfig:
    """
    Coarse polar scan counts and the compass-search stop rule.
    """
    n_rho: int = 6
    n_phi: int = 12
    n_theta: int = 16
    tol: float = 1e-10
    max_iters: int = 5000
    scan_budget: int = 200000

    @classmethod
    def default(cls):
        return cls(**settings.HMVP_SEARCH)


def _scan_grid(n, epsilon, search):
    rhos = np.concatenate([[0.0], np.linspace(0, epsilon, search.n_rho + 1)[1:]])
    phis = np.linspace(0, math.pi, search.n_phi + 1)
    angles = 2 * n - 1
    per_angle = (search.scan_budget / (rhos.size * phis.size)) ** (1 / angles)
    n_theta = int(max(4, min(search.n_theta, per_angle)))
    axes = [np.linspace(0, math.pi, n_theta + 1) for _ in range(angles - 1)]
    axes.append(np.arange(n_theta) * (2 * math.pi / n_theta))
    grids = np.meshgrid(rhos, phis, *axes, indexing='ij')
    polar = np.stack([g.ravel() for g in grids], axis=-1)
    steps = np.array([epsilon / search.n_rho, math.pi / search.n_phi]
                     + [math.pi / n_theta] * (angles - 1)
                     + [2 * math.pi / n_theta])
    return polar, steps


def _clamp(polar, epsilon):
    out = polar.copy()
    out[..., 0] = np.clip(out[..., 0], 0.0, epsilon)
    out[..., 1:-1] = np.clip(out[..., 1:-1], 0.0, math.pi)
    out[..., -1] = np.mod(out[..., -1], 2 * math.pi)
    return out


def _polar_points(c, polar):
    return group_mul_array(c, polar_to_array(polar[..., 0], polar[..., 1],
                                             polar[..., 2:]))


def _maximize(f, c, epsilon, search):
    n = (c.shape[0] - 1) // 2
    polar, steps = _scan_grid(n, epsilon, search)
    values = np.asarray(f(_polar_points(c, polar)), dtype=float)
    best = int(np.argmax(values))
    current = polar[best]
    value = float(values[best])

    dim = current.shape[0]
    moves = np.concatenate([np.eye(dim), -np.eye(dim)])
    iters = 0
    while steps.max() >= search.tol and iters < search.max_iters:
        iters += 1
        trials = _clamp(current + moves * steps, epsilon)
        trial_values = np.asarray(f(_polar_points(c, trials)), dtype=float)
        k = int(np.argmax(trial_values))
        if trial_values[k] > value:
            current, value = trials[k], float(trial_values[k])
        else:
            steps = steps / 2
    logger.debug('extremum search: %s scan nodes, %s compass steps',
                 polar.shape[0], iters)
    return current, value


def ball_extremum(f, center, epsilon, mode='max', search=None):
    """
    Approximate extremum of ``f`` over the closed ball of radius eps
    around ``center``: a scan of a polar grid covering the centre, the
    interior and the sphere rho = eps, refined by a compass search in
    polar coordinates until the step drops below ``search.tol``.
    Ties go to the first scanned node. The minimum is computed as minus
    the maximum of -f.

    :param f: vectorized function of coordinates (..., 2n+1)
    :type f: callable
    :param mode: 'max' or 'min'
    :type mode: str
    :returns: (extremizer, value)
    :rtype: tuple
    """
    _check_positive('epsilon', epsilon)
    search = SearchConfig.default() if search is None else search
    c = _as_coords(center)
    if mode == 'max':
        polar, value = _maximize(f, c, epsilon, search)
    elif mode == 'min':
        polar, value = _maximize(lambda y: -np.asarray(f(y)), c, epsilon,
                                 search)
        value = -value
    else:
        raise InvalidArgumentError(f"mode must be 'max' or 'min', not {mode}")
    return HPoint.from_array(_polar_points(c, polar)), value


def vertical_extremes(center, epsilon, search=None):
    """
    Extremes over the closed ball of the vertical coordinate of
    center^-1∘y, i.e. y_T - c_T + 2 sum(y_{n+i} c_i - y_i c_{n+i}).

    :returns: (max, min), (eps^2, -eps^2) up to the search tolerance
    """
    c = _as_coords(center)
    inverse = group_inv_array(c)

    def twisted(y):
        return group_mul_array(inverse, y)[..., -1]

    _, top = ball_extremum(twisted, c, epsilon, 'max', search)
    _, bottom = ball_extremum(twisted, c, epsilon, 'min', search)
    return top, bottom


def angular_error(direction, target):
    """
    Angle in radians between two nonzero vectors.
    """
    a = np.asarray(direction, dtype=float)
    b = np.asarray(target, dtype=float)
    cosine = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.arccos(np.clip(cosine, -1.0, 1.0)))


def extremal_direction_estimate(field, center, eps_ladder, t=0.0,
                                search=None):
    """
    Unit horizontal direction from ``center`` to the minimizer of the
    time-``t`` slice of ``field`` over the closed ball, for every eps of
    the ladder. It tends to -grad0/|grad0| at the centre as eps -> 0.

    :returns: list of (eps, unit 2n-vector)
    :raises DegenerateGradientError: when grad0 vanishes at the centre
    """
    c = _as_coords(center)
    j = jet(field, t, c)
    norm = float(np.linalg.norm(j.grad0))
    threshold = gradient_threshold(j)
    if not norm > threshold:
        raise DegenerateGradientError(
            settings.ERR_MSG_DEGENERATE_GRADIENT.format(norm, threshold),
            grad_norm=norm)
    estimates = []
    for eps in eps_ladder:
        point, _ = ball_extremum(field.spatial(t), c, eps, 'min', search)
        offset = point.as_array()[:-1] - c[:-1]
        estimates.append((float(eps), offset / np.linalg.norm(offset)))
    return estimates
