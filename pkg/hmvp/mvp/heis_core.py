"""
Arithmetic of the Heisenberg group H^n.

Coordinates are stored in the order (x_1..x_n, x_{n+1}..x_{2n}, x_{2n+1}):
the first n entries pair with the next n through the twist of the group
law, the last entry is the vertical coordinate. Every function comes in
two flavours: one working on a single :class:`HPoint`, and an ``*_array``
one working on numpy arrays whose last axis has length 2n+1. The
quadrature, the extremum search and the solver only use the array forms.
"""

import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from .exceptions import InvalidArgumentError


def homogeneous_dimension(n):
    """
    The scaling exponent of volume under dilations, Q = 2n + 2.
    """
    return 2 * n + 2


def group_index(dim):
    """
    Returns n for a coordinate vector of length 2n+1.

    :param dim: coordinate count
    :type dim: int
    """
    if dim < 3 or dim % 2 == 0:
        raise InvalidArgumentError(settings.ERR_MSG_BAD_COORDS.format(dim))
    return (dim - 1) // 2


@dataclass(frozen=True)
class HPoint:
    """
    A point of H^n. ``coords`` holds 2n+1 finite floats.
    """
    coords: tuple

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        group_index(len(coords))
        if not all(math.isfinite(c) for c in coords):
            raise InvalidArgumentError(
                settings.ERR_MSG_BAD_COORDS.format(coords))
        object.__setattr__(self, 'coords', coords)

    @classmethod
    def origin(cls, n):
        return cls((0.0,) * (2 * n + 1))

    @classmethod
    def from_array(cls, values):
        return cls(tuple(np.asarray(values, dtype=float).ravel()))

    @property
    def n(self):
        return (len(self.coords) - 1) // 2

    @property
    def horizontal(self):
        return np.asarray(self.coords[:-1])

    @property
    def vertical(self):
        return self.coords[-1]

    def as_array(self):
        return np.asarray(self.coords, dtype=float)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)


@dataclass(frozen=True)
class PolarCoord:
    """
    Polar coordinates of a point of H^n: the gauge ``rho``, the angle
    ``phi`` with x_{2n+1} = rho^2 cos(phi), and the 2n-1 hyperspherical
    angles of the horizontal direction. The horizontal radius is
    rho * sin(phi)^(1/2).
    """
    rho: float
    phi: float
    thetas: tuple

    def __post_init__(self):
        if self.rho < 0:
            raise InvalidArgumentError(
                settings.ERR_MSG_NON_POSITIVE.format('rho', self.rho))
        object.__setattr__(self, 'thetas',
                           tuple(float(t) for t in self.thetas))
        angles = [('phi', self.phi, math.pi)]
        for i, theta in enumerate(self.thetas, 1):
            bound = 2 * math.pi if i == len(self.thetas) else math.pi
            angles.append((f'theta_{i}', theta, bound))
        for name, angle, bound in angles:
            if not 0 <= angle < bound:
                raise InvalidArgumentError(settings.ERR_MSG_ANGLE.format(
                    name, angle, 'pi' if bound == math.pi else '2 pi'))

    @property
    def n(self):
        return (len(self.thetas) + 1) // 2


def _check_same_group(a, b):
    if a.shape[-1] != b.shape[-1]:
        raise InvalidArgumentError(settings.ERR_MSG_DIMENSION_MISMATCH.format(
            group_index(a.shape[-1]), group_index(b.shape[-1])))


##############################
#        Array forms
#############################


def group_mul_array(a, b):
    """
    The group law a∘b on stacked points (broadcasting over leading axes).
    The first 2n coordinates add, the vertical one picks up the twist
    2 * sum_i (b_i a_{n+i} - a_i b_{n+i}).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_same_group(a, b)
    n = group_index(a.shape[-1])
    twist = 2.0 * np.sum(b[..., :n] * a[..., n:2 * n]
                         - a[..., :n] * b[..., n:2 * n], axis=-1)
    out = np.broadcast_to(a + b, np.broadcast_shapes(a.shape, b.shape)).copy()
    out[..., -1] += twist
    return out


def group_inv_array(a):
    return -np.asarray(a, dtype=float)


def dilate_array(lam, a):
    if not lam > 0:
        raise InvalidArgumentError(
            settings.ERR_MSG_NON_POSITIVE.format('lambda', lam))
    out = np.array(a, dtype=float)
    out[..., :-1] *= lam
    out[..., -1] *= lam * lam
    return out


def gauge_array(a):
    a = np.asarray(a, dtype=float)
    r2 = np.sum(a[..., :-1] ** 2, axis=-1)
    return (r2 * r2 + a[..., -1] ** 2) ** 0.25


def psi_array(a):
    """
    The weight |x̄|^2 / gauge(x)^2, set to 0 at the origin.
    """
    a = np.asarray(a, dtype=float)
    r2 = np.sum(a[..., :-1] ** 2, axis=-1)
    rho2 = np.sqrt(r2 * r2 + a[..., -1] ** 2)
    safe = np.where(rho2 > 0, rho2, 1.0)
    return np.where(rho2 > 0, r2 / safe, 0.0)


def left_distance_array(a, b):
    return gauge_array(group_mul_array(group_inv_array(a), b))


def sphere_directions(thetas):
    """
    Unit vectors of R^{2n} from 2n-1 hyperspherical angles, already
    permuted into the coordinate layout of H^n.

    u_1 = cos t_1, u_2 = sin t_1 cos t_2, ..., u_2n = sin t_1 ... sin t_{2n-1};
    x_k takes u_{2n-2k+2} and x_{n+k} takes u_{2n-2k+1} (1-based), so for
    n = 1 the direction is (sin t, cos t).
    """
    thetas = np.asarray(thetas, dtype=float)
    m = thetas.shape[-1]
    dim = m + 1
    n = dim // 2
    u = np.empty(thetas.shape[:-1] + (dim,))
    running = np.ones(thetas.shape[:-1])
    for i in range(m):
        u[..., i] = running * np.cos(thetas[..., i])
        running = running * np.sin(thetas[..., i])
    u[..., m] = running
    out = np.empty_like(u)
    for k in range(1, n + 1):
        out[..., k - 1] = u[..., 2 * n - 2 * k + 1]
        out[..., n + k - 1] = u[..., 2 * n - 2 * k]
    return out


def polar_to_array(rho, phi, thetas):
    """
    Cartesian points for stacked polar coordinates. ``thetas`` carries the
    2n-1 angles on its last axis.
    """
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    direction = sphere_directions(thetas)
    radius = rho * np.sqrt(np.abs(np.sin(phi)))
    vertical = rho * rho * np.cos(phi)
    return np.concatenate(
        [radius[..., None] * direction, vertical[..., None]], axis=-1)


def polar_jacobian_array(rho, phi, thetas):
    """
    rho^(2n+1) sin(phi)^(n-1) prod_k sin(theta_k)^(2n-1-k), k = 1..2n-2.
    """
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    n = (thetas.shape[-1] + 1) // 2
    jac = rho ** (2 * n + 1) * np.abs(np.sin(phi)) ** (n - 1)
    for k in range(1, 2 * n - 1):
        jac = jac * np.abs(np.sin(thetas[..., k - 1])) ** (2 * n - 1 - k)
    return jac


##############################
#        Point forms
#############################


def _point(a):
    return a if isinstance(a, HPoint) else HPoint(tuple(a))


def group_mul(a, b):
    """
    Returns a∘b, ``a`` playing the role of the base point x⁰.

    :param a: left factor
    :type a: HPoint
    :param b: right factor
    :type b: HPoint
    """
    a, b = _point(a), _point(b)
    if a.n != b.n:
        raise InvalidArgumentError(
            settings.ERR_MSG_DIMENSION_MISMATCH.format(a.n, b.n))
    return HPoint.from_array(group_mul_array(a.as_array(), b.as_array()))


def group_inv(a):
    return HPoint.from_array(group_inv_array(_point(a).as_array()))


def dilate(lam, a):
    return HPoint.from_array(dilate_array(lam, _point(a).as_array()))


def gauge(a):
    return float(gauge_array(_point(a).as_array()))


def psi(a):
    return float(psi_array(_point(a).as_array()))


def left_distance(a, b):
    """
    gauge(a⁻¹∘b); b lies in the open ball B_eps(a) iff this is < eps.
    """
    return gauge(group_mul(group_inv(a), b))


def polar_to_point(p, n=None):
    """
    :param p: polar coordinates
    :type p: PolarCoord
    :param n: group index, checked against the angle count when given
    :type n: int
    """
    if n is not None and p.n != n:
        raise InvalidArgumentError(
            settings.ERR_MSG_DIMENSION_MISMATCH.format(p.n, n))
    return HPoint.from_array(polar_to_array(p.rho, p.phi, p.thetas))


def polar_jacobian(p, n=None):
    if n is not None and p.n != n:
        raise InvalidArgumentError(
            settings.ERR_MSG_DIMENSION_MISMATCH.format(p.n, n))
    return float(polar_jacobian_array(p.rho, p.phi, p.thetas))
