"""
Horizontal calculus on H^n: the left-invariant frame, jets of scalar
fields and the sub-Laplacians built from them.
"""

import enum
import logging
import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Optional

import numpy as np
from django.conf import settings

from .exceptions import DegenerateGradientError, DomainError, \
    InvalidArgumentError
from .heis_core import HPoint, gauge_array, group_index, group_mul_array

logger = logging.getLogger(__name__)


class Exponent(enum.Enum):
    """
    Distinguished exponent values that are not floats.
    """
    INFINITY = 'inf'

    def __str__(self):
        return self.value


INFINITY = Exponent.INFINITY

_INFINITY_LITERALS = ('inf', '+inf', 'infinity', '+infinity', '∞')


def is_infinite(p):
    return p is INFINITY


def parse_exponent(value):
    """
    Turns 'inf', 'Infinity', '∞', float('inf') or INFINITY into
    INFINITY and anything else into a float > 1.

    :param value: exponent as text or number
    :type value: str, float or Exponent
    """
    if value is INFINITY:
        return INFINITY
    if isinstance(value, str):
        text = value.strip().lower()
        if text in _INFINITY_LITERALS:
            return INFINITY
        try:
            value = float(text)
        except ValueError:
            raise InvalidArgumentError(
                settings.ERR_MSG_BAD_EXPONENT.format(value)) from None
    p = float(value)
    if math.isinf(p) and p > 0:
        return INFINITY
    if not (math.isfinite(p) and p > 1):
        raise InvalidArgumentError(settings.ERR_MSG_BAD_EXPONENT.format(value))
    return p


def format_exponent(p):
    return 'inf' if is_infinite(p) else repr(float(p))


@dataclass(frozen=True)
class HorizontalJet:
    """
    Value, time derivative, horizontal gradient, vertical derivative Tu
    and the symmetrized horizontal Hessian of a field at a point.
    """
    value: float
    dt: float
    grad0: np.ndarray
    vert: float
    hess: np.ndarray

    @property
    def n(self):
        return self.grad0.shape[0] // 2

    def scaled(self, c):
        return HorizontalJet(c * self.value, c * self.dt, c * self.grad0,
                             c * self.vert, c * self.hess)


@dataclass(frozen=True)
class ScalarField:
    """
    A space-time scalar field u(t, x) on H^n. ``expression`` keeps the
    sympy expression of fields built from one.

    ``evaluator(t, coords)`` must accept a coordinate array of shape
    (..., 2n+1) with ``t`` broadcastable against its leading axes, and
    must be safe to call from several threads at once.
    ``analytic_jet(t, coords)``, when given, returns the exact
    :class:`HorizontalJet` at a single point.
    """
    evaluator: Callable
    n: int
    label: str = 'field'
    analytic_jet: Optional[Callable] = dataclass_field(default=None,
                                                       compare=False)
    expression: object = dataclass_field(default=None, compare=False)

    def __call__(self, t, x):
        scalar = isinstance(x, HPoint)
        coords = x.as_array() if scalar else np.asarray(x, dtype=float)
        if coords.shape[-1] != 2 * self.n + 1:
            raise InvalidArgumentError(
                settings.ERR_MSG_DIMENSION_MISMATCH.format(
                    self.n, group_index(coords.shape[-1])))
        values = np.asarray(self.evaluator(t, coords), dtype=float)
        values = np.broadcast_to(
            values, np.broadcast_shapes(values.shape, coords.shape[:-1],
                                        np.shape(t)))
        if not np.all(np.isfinite(values)):
            raise DomainError(settings.ERR_MSG_DOMAIN.format(self.label))
        return float(values) if values.ndim == 0 else values

    def spatial(self, t):
        """
        The time slice x -> u(t, x).
        """
        return lambda coords: self(t, coords)

    def translated(self, z):
        """
        The field (t, y) -> u(t, z∘y). Jets of the translate are the jets
        of ``self`` at z∘y because the frame is left-invariant.
        """
        z = z.as_array() if isinstance(z, HPoint) else np.asarray(z, float)

        def evaluator(t, coords):
            return self.evaluator(t, group_mul_array(z, coords))

        analytic = None
        if self.analytic_jet is not None:
            def analytic(t, coords):
                return self.analytic_jet(t, group_mul_array(z, coords))
        return ScalarField(evaluator, self.n, f'{self.label}∘L', analytic)

    def scaled(self, c, offset=0.0):
        """
        The field c*u + offset.
        """
        def evaluator(t, coords):
            return c * np.asarray(self.evaluator(t, coords)) + offset

        analytic = None
        if self.analytic_jet is not None:
            def analytic(t, coords):
                j = self.analytic_jet(t, coords).scaled(c)
                return HorizontalJet(j.value + offset, j.dt, j.grad0,
                                     j.vert, j.hess)
        return ScalarField(evaluator, self.n, f'{c}*{self.label}+{offset}',
                           analytic)


def constant_field(c, n):
    dim = 2 * n

    def evaluator(t, coords):
        return np.full(np.broadcast_shapes(np.shape(coords)[:-1],
                                           np.shape(t)), float(c))

    def analytic(t, coords):
        return HorizontalJet(float(c), 0.0, np.zeros(dim), 0.0,
                             np.zeros((dim, dim)))
    return ScalarField(evaluator, n, f'const({c})', analytic)


##############################
#          Frame
#############################


def frame_matrix(x):
    """
    Rows are the coefficient vectors of X_1..X_{2n} at x:
    X_i = e_i + 2 x_{n+i} e_T and X_{n+i} = e_{n+i} - 2 x_i e_T.
    """
    x = x.as_array() if isinstance(x, HPoint) else np.asarray(x, float)
    n = group_index(x.shape[-1])
    a = np.zeros((2 * n, 2 * n + 1))
    a[:, :2 * n] = np.eye(2 * n)
    a[:n, -1] = 2.0 * x[n:2 * n]
    a[n:, -1] = -2.0 * x[:n]
    return a


def frame_vector(i, x):
    """
    Coefficients of X_i at x for i in 1..2n, and of T for i = 2n+1.

    :param i: 1-based frame index
    :type i: int
    :param x: point
    :type x: HPoint
    """
    x = x if isinstance(x, HPoint) else HPoint(tuple(x))
    dim = 2 * x.n + 1
    if not 1 <= i <= dim:
        raise InvalidArgumentError(settings.ERR_MSG_BAD_INDEX.format(dim, i))
    if i == dim:
        vec = np.zeros(dim)
        vec[-1] = 1.0
        return vec
    return frame_matrix(x)[i - 1]


def default_step(x):
    return settings.HMVP_FD_STEP * (1.0 + float(gauge_array(x)))


def _evaluate(field, t, coords):
    values = np.asarray(field.evaluator(t, coords), dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError(settings.ERR_MSG_DOMAIN.format(field.label))
    return values


def euclidean_derivatives(field, t, x, h):
    """
    Centered second-order finite differences: value, time derivative,
    Euclidean gradient and Euclidean Hessian at (t, x).
    """
    dim = x.shape[0]
    eye = np.eye(dim) * h
    # stencil: centre, +-e_k, and the four corners of every (k, l) square
    pairs = [(k, l) for k in range(dim) for l in range(k + 1, dim)]
    points = [x]
    points += [x + eye[k] for k in range(dim)]
    points += [x - eye[k] for k in range(dim)]
    for k, l in pairs:
        points += [x + eye[k] + eye[l], x + eye[k] - eye[l],
                   x - eye[k] + eye[l], x - eye[k] - eye[l]]
    values = _evaluate(field, t, np.array(points))
    in_time = _evaluate(field, np.array([t + h, t - h]), np.array([x, x]))

    centre = values[0]
    plus = values[1:1 + dim]
    minus = values[1 + dim:1 + 2 * dim]
    grad = (plus - minus) / (2 * h)
    hess = np.diag((plus - 2 * centre + minus) / (h * h))
    corners = values[1 + 2 * dim:].reshape(-1, 4)
    for (k, l), (pp, pm, mp, mm) in zip(pairs, corners):
        hess[k, l] = hess[l, k] = (pp - pm - mp + mm) / (4 * h * h)
    dt = (in_time[0] - in_time[1]) / (2 * h)
    return float(centre), float(dt), grad, hess


def jet(field, t, x, h=None):
    """
    The horizontal jet of ``field`` at (t, x).

    Uses the field's analytic jet when it has one. Otherwise the
    Euclidean partials are taken on an axis-aligned centered stencil and
    composed with the frame coefficients: grad0 = A g and
    (X^2 u)* = sym(A D A^T), the antisymmetric first-order part of
    X_i X_j u dropping out in the symmetrization.

    :param field: the field
    :type field: ScalarField
    :param t: time
    :type t: float
    :param x: point
    :type x: HPoint
    :param h: step, defaults to HMVP_FD_STEP * (1 + gauge(x))
    :type h: float
    """
    coords = x.as_array() if isinstance(x, HPoint) else np.asarray(x, float)
    if field.analytic_jet is not None:
        return field.analytic_jet(t, coords)
    h = default_step(coords) if h is None else h
    if not h > 0:
        raise InvalidArgumentError(
            settings.ERR_MSG_NON_POSITIVE.format('h', h))
    value, dt, grad, euclid_hess = euclidean_derivatives(field, t, coords, h)
    a = frame_matrix(coords)
    hess = a @ euclid_hess @ a.T
    hess = 0.5 * (hess + hess.T)
    return HorizontalJet(value, dt, a @ grad, float(grad[-1]), hess)


def lie_bracket(field, i, j, t, x, h=None):
    """
    [X_i, X_j]u at (t, x) from nested centered directional differences
    along the frame vectors. Independent of the jet assembly.
    """
    x = x if isinstance(x, HPoint) else HPoint(tuple(x))
    coords = x.as_array()
    h = default_step(coords) * 10 if h is None else h

    def directional(k, points):
        # X_k u at each of ``points``
        vecs = np.array([frame_vector(k, HPoint(tuple(p))) for p in points])
        ahead = _evaluate(field, t, points + h * vecs)
        behind = _evaluate(field, t, points - h * vecs)
        return (ahead - behind) / (2 * h)

    def nested(outer, inner):
        vec = frame_vector(outer, x)
        points = np.array([coords + h * vec, coords - h * vec])
        ahead, behind = directional(inner, points)
        return (ahead - behind) / (2 * h)

    return float(nested(i, j) - nested(j, i))


##############################
#        Operators
#############################


def delta_H(j):
    """
    The sub-Laplacian: trace of the horizontal Hessian.
    """
    return float(np.trace(j.hess))


def gradient_threshold(j):
    return settings.HMVP_GRADIENT_THRESHOLD * (1.0 + np.linalg.norm(j.hess))


def delta_H_inf(j):
    """
    The normalized infinity sub-Laplacian <hess g, g> with g the unit
    horizontal gradient.

    :raises DegenerateGradientError: when |grad0| is below the threshold
    """
    norm = float(np.linalg.norm(j.grad0))
    threshold = gradient_threshold(j)
    if not norm > threshold:
        raise DegenerateGradientError(
            settings.ERR_MSG_DEGENERATE_GRADIENT.format(norm, threshold),
            grad_norm=norm)
    g = j.grad0 / norm
    return float(g @ j.hess @ g)


def p_laplacian_normalized(j, p):
    """
    (p-2) Δ_H^∞ u + Δ_H u for finite p, Δ_H^∞ u for p = INFINITY.
    """
    if is_infinite(p):
        return delta_H_inf(j)
    if p == 2:
        return delta_H(j)
    return (p - 2) * delta_H_inf(j) + delta_H(j)


def viscosity_envelope(j, p):
    """
    Bounds of the normalized p-sub-Laplacian at a point.

    With a nondegenerate gradient both bounds equal
    :func:`p_laplacian_normalized`. At a degenerate gradient the bounds
    are the extreme eigenvalues of (p-2) (X^2 u)* shifted by Δ_H u
    (plain (X^2 u)* for p = INFINITY). Nothing is decided here about
    which bound a viscosity test should use.

    :returns: (lower, upper)
    :rtype: tuple
    """
    try:
        value = p_laplacian_normalized(j, p)
        return value, value
    except DegenerateGradientError:
        logger.debug('degenerate gradient, using eigenvalue envelope')
    eigs = np.linalg.eigvalsh(j.hess)
    if is_infinite(p):
        return float(eigs[0]), float(eigs[-1])
    scaled = (p - 2) * eigs
    trace = delta_H(j)
    return float(scaled.min() + trace), float(scaled.max() + trace)
