"""
Catalogue of named space-time fields and the polynomial expression
language of the command line.

Fields are sympy expressions in ``t`` and ``x1 .. x{2n+1}``; their jets
are obtained by symbolic differentiation along the frame and compiled
to numpy with ``lambdify``.
"""

import logging
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy
from django.conf import settings
from sympy.parsing.sympy_parser import convert_xor, parse_expr, \
    rationalize, standard_transformations

from .ball_quadrature import M_constant_exact
from .exceptions import InvalidArgumentError
from .horizontal_calculus import HorizontalJet, ScalarField

logger = logging.getLogger(__name__)

T = sympy.Symbol('t', real=True)
S = sympy.Symbol('s', real=True)
EPS = sympy.Symbol('eps', positive=True)

_TRANSFORMATIONS = standard_transformations + (convert_xor, rationalize)
_COORDINATE = re.compile(r'^x(\d+)$')


def coordinate_symbols(n):
    return sympy.symbols(f'x1:{2 * n + 2}', real=True)


def frame_derivative(expr, i, xs):
    """
    X_{i+1} applied to ``expr`` (0-based ``i``).
    """
    n = (len(xs) - 1) // 2
    vertical = sympy.diff(expr, xs[-1])
    if i < n:
        return sympy.diff(expr, xs[i]) + 2 * xs[n + i] * vertical
    return sympy.diff(expr, xs[i]) - 2 * xs[i - n] * vertical


def field_from_sympy(expr, n, label=None):
    """
    Compiles a sympy expression in ``t`` and ``x1 .. x{2n+1}`` into a
    :class:`ScalarField` with an exact jet.
    """
    xs = coordinate_symbols(n)
    args = (T,) + tuple(xs)
    dim = 2 * n
    first = [frame_derivative(expr, i, xs) for i in range(dim)]
    second = [[frame_derivative(first[j], i, xs) for j in range(dim)]
              for i in range(dim)]
    value_fn = sympy.lambdify(args, expr, 'numpy')
    jet_fn = sympy.lambdify(
        args, [expr, sympy.diff(expr, T), first, sympy.diff(expr, xs[-1]),
               second], 'numpy')

    def evaluator(time, coords):
        coords = np.asarray(coords, dtype=float)
        out = np.asarray(value_fn(time, *np.moveaxis(coords, -1, 0)),
                         dtype=float)
        shape = np.broadcast_shapes(np.shape(time), coords.shape[:-1],
                                    out.shape)
        return np.broadcast_to(out, shape)

    def analytic(time, coords):
        value, dt, grad0, vert, hess = jet_fn(
            float(time), *np.asarray(coords, dtype=float))
        hess = np.array(hess, dtype=float)
        return HorizontalJet(float(value), float(dt),
                             np.array(grad0, dtype=float), float(vert),
                             0.5 * (hess + hess.T))

    return ScalarField(evaluator, n, label or str(expr), analytic, expr)


##############################
#        Catalogue
#############################


@dataclass(frozen=True)
class BuiltinField:
    """
    A named field. ``builder(n, xs)`` returns the sympy expression; in the
    builders ``x1`` is xs[0], its partner x_{n+1} is xs[n] and the
    vertical coordinate is xs[-1]. For n = 1 these are x1, x2, x3.
    """
    name: str
    description: str
    builder: object

    def expression(self, n):
        return self.builder(n, coordinate_symbols(n))


def _caloric_quartic(n, xs):
    return 12 * T ** 2 + 12 * xs[0] ** 2 * T + xs[0] ** 4


def _caloric_quartic_rescaled(n, xs):
    return _caloric_quartic(n, xs).subs(T, M_constant_exact(n) * T)


_FIELDS = [
    BuiltinField('caloric-quartic', 'u = 12t^2 + 12x1^2 t + x1^4, solves '
                 'u_t = Δ_H u', _caloric_quartic),
    BuiltinField('caloric-quartic-rescaled', 'w(t, x) = u(M(n) t, x) for the '
                 'field above, solves w_t = M(n) Δ_H w',
                 _caloric_quartic_rescaled),
    BuiltinField('xT', 'the vertical coordinate', lambda n, xs: xs[-1]),
    BuiltinField('x1sq', 'x1^2', lambda n, xs: xs[0] ** 2),
    BuiltinField('x1x2', 'x1 x2', lambda n, xs: xs[0] * xs[1]),
    BuiltinField('x1+x2', 'x1 + x2', lambda n, xs: xs[0] + xs[1]),
    BuiltinField('affine', '1 + 2x1 - 3x2 + t/2',
                 lambda n, xs: 1 + 2 * xs[0] - 3 * xs[1] + T / 2),
    BuiltinField('horizontal-norm-sq', '|x̄|^2',
                 lambda n, xs: sum(x ** 2 for x in xs[:-1])),
    # Δ_H-harmonic polynomials
    BuiltinField('harm-x1y1', 'x1 x_{n+1}', lambda n, xs: xs[0] * xs[n]),
    BuiltinField('harm-quad', 'x1^2 - x2^2',
                 lambda n, xs: xs[0] ** 2 - xs[1] ** 2),
    BuiltinField('harm-cubic', 'x1^3 - 3 x1 x2^2',
                 lambda n, xs: xs[0] ** 3 - 3 * xs[0] * xs[1] ** 2),
    # smooth suite
    BuiltinField('smooth-exp', 'exp(x1 - x_{n+1}/2 + t/4)',
                 lambda n, xs: sympy.exp(xs[0] - xs[n] / 2 + T / 4)),
    BuiltinField('smooth-trig', 'sin(x1 + 3/10) cos(x_{n+1}) + xT/2',
                 lambda n, xs: sympy.sin(xs[0] + sympy.Rational(3, 10))
                 * sympy.cos(xs[n]) + xs[-1] / 2),
    BuiltinField('smooth-poly', 'x1^3 - x1 x_{n+1}^2 + xT x1 + t x_{n+1}',
                 lambda n, xs: xs[0] ** 3 - xs[0] * xs[n] ** 2
                 + xs[-1] * xs[0] + T * xs[n]),
    BuiltinField('smooth-rational', 'x1 + 1/(2 + x1^2 + x_{n+1}^2 + xT^2)',
                 lambda n, xs: xs[0] + 1 / (2 + xs[0] ** 2 + xs[n] ** 2
                                            + xs[-1] ** 2)),
    BuiltinField('smooth-vertical', 'xT^2 + x1 + t x_{n+1}',
                 lambda n, xs: xs[-1] ** 2 + xs[0] + T * xs[n]),
    # quadratic fields for the minimizing direction
    BuiltinField('quadratic-a', 'x1 + x_{n+1}/2 + (x1^2 - x1 x_{n+1} '
                 '+ x_{n+1}^2/2)/10',
                 lambda n, xs: xs[0] + xs[n] / 2 + (
                     xs[0] ** 2 - xs[0] * xs[n] + xs[n] ** 2 / 2) / 10),
    BuiltinField('quadratic-b', '-7x1/10 + x_{n+1} + (x1 x_{n+1} '
                 '+ x_{n+1}^2)/10',
                 lambda n, xs: -sympy.Rational(7, 10) * xs[0] + xs[n] + (
                     xs[0] * xs[n] + xs[n] ** 2) / 10),
]

CATALOGUE = {f.name: f for f in _FIELDS}

# alternative names accepted by resolve_field
ALIASES = {'paper-sec4': 'caloric-quartic'}

HARMONIC_FIELDS = ('x1', 'x2', 'xT', 'harm-x1y1', 'harm-quad', 'harm-cubic')

# (name, t, point for n = 1); every field has a nonvanishing horizontal
# gradient at its point
SMOOTH_SUITE = (
    ('caloric-quartic', 0.5, (0.3, -0.2, 0.1)),
    ('x1sq', 0.5, (0.3, -0.2, 0.1)),
    ('smooth-exp', 0.5, (0.3, -0.2, 0.1)),
    ('smooth-trig', 0.5, (0.3, -0.2, 0.1)),
    ('smooth-poly', 0.5, (0.3, -0.2, 0.1)),
    ('smooth-rational', 0.5, (0.3, -0.2, 0.1)),
    ('smooth-vertical', 0.5, (0.3, -0.2, 0.1)),
)

EXTREMAL_FIELDS = ('quadratic-a', 'quadratic-b')


def harmonic_fields(n):
    """
    Names of the built-in Δ_H-harmonic polynomials on H^n: every
    coordinate plus the polynomials above.
    """
    names = [f'x{k}' for k in range(1, 2 * n + 1)] + ['xT']
    return names + ['harm-x1y1', 'harm-quad', 'harm-cubic']


def field_names():
    return sorted(CATALOGUE)


##############################
#   Expressions
#############################


def parse_polynomial(text, n):
    """
    Parses a polynomial in t, x1 .. x{2n+1} (``xT`` is an alias of the
    vertical coordinate) with rational coefficients. Decimal literals are
    read as exact rationals and ``^`` is a power.

    :raises InvalidArgumentError: for anything that is not such a polynomial
    """
    xs = coordinate_symbols(n)
    names = {str(x): x for x in xs}
    names.update({'t': T, 'xT': xs[-1]})
    try:
        expr = parse_expr(text, local_dict=names,
                          transformations=_TRANSFORMATIONS)
    except Exception as exc:
        raise InvalidArgumentError(
            f"Can not parse expression '{text}': {exc}") from None
    expr = sympy.sympify(expr)
    allowed = set(names.values())
    unknown = expr.free_symbols - allowed
    if unknown:
        raise InvalidArgumentError(
            f"Unknown symbols {sorted(map(str, unknown))} in '{text}'!")
    if not expr.is_polynomial(T, *xs):
        raise InvalidArgumentError(f"'{text}' is not a polynomial!")
    if not all(c.is_Rational for c in sympy.Poly(expr, T, *xs).coeffs()):
        raise InvalidArgumentError(
            f"'{text}' must have rational coefficients!")
    return sympy.expand(expr)


def field_from_expression(text, n):
    return field_from_sympy(parse_polynomial(text, n), n, text)


@lru_cache(maxsize=128)
def resolve_field(identifier, n):
    """
    A built-in field by name, a coordinate ``xk``, or a polynomial
    expression.

    :param identifier: field name or expression
    :type identifier: str
    :param n: group index
    :type n: int
    :rtype: ScalarField
    """
    identifier = identifier.strip()
    identifier = ALIASES.get(identifier, identifier)
    if identifier in CATALOGUE:
        builtin = CATALOGUE[identifier]
        return field_from_sympy(builtin.expression(n), n, identifier)
    match = _COORDINATE.match(identifier)
    if match:
        k = int(match.group(1))
        if not 1 <= k <= 2 * n + 1:
            raise InvalidArgumentError(
                settings.ERR_MSG_UNKNOWN_FIELD.format(identifier))
        return field_from_sympy(coordinate_symbols(n)[k - 1], n, identifier)
    try:
        return field_from_expression(identifier, n)
    except InvalidArgumentError as exc:
        logger.debug('not an expression: %s', exc)
        raise InvalidArgumentError(
            settings.ERR_MSG_UNKNOWN_FIELD.format(identifier)) from exc


##############################
#   Exact means (n = 1)
#############################


@lru_cache(maxsize=None)
def _monomial_mean(a, b, c):
    # int over B_eps of psi z1^a z2^b z3^c, with z1 = r sin(th),
    # z2 = r cos(th), r = rho sin(phi)^(1/2), z3 = rho^2 cos(phi)
    theta, phi, rho = sympy.symbols('theta phi rho', positive=True)
    if (a + b) % 2 or c % 2:
        return sympy.Integer(0)
    angular = sympy.integrate(sympy.sin(theta) ** a * sympy.cos(theta) ** b,
                              (theta, 0, 2 * sympy.pi))
    if angular == 0:
        return sympy.Integer(0)
    polar = sympy.integrate(
        sympy.sin(phi) ** (1 + (a + b) // 2) * sympy.cos(phi) ** c,
        (phi, 0, sympy.pi))
    radial = sympy.integrate(rho ** (3 + a + b + 2 * c), (rho, 0, EPS))
    return sympy.simplify(angular * polar * radial)


def symbolic_weighted_mean(expr, center=(0, 0, 0)):
    """
    Exact psi-weighted mean over the gauge ball B_eps(center) of H^1 of a
    polynomial in x1, x2, x3 (other symbols, like s or t, are carried
    along). Returns a sympy expression in ``EPS``.
    """
    x1, x2, x3 = coordinate_symbols(1)
    z1, z2, z3 = sympy.symbols('z1 z2 z3', real=True)
    c1, c2, c3 = (sympy.nsimplify(v) for v in center)
    translated = sympy.expand(sympy.sympify(expr).subs(
        {x1: c1 + z1, x2: c2 + z2,
         x3: c3 + z3 + 2 * (z1 * c2 - c1 * z2)}, simultaneous=True))
    poly = sympy.Poly(translated, z1, z2, z3)
    total = sum(coeff * _monomial_mean(*powers)
                for powers, coeff in poly.terms())
    return sympy.expand(total / (sympy.pi * EPS ** 4))


def symbolic_time_average(expr, t, window):
    """
    (1/window) * int_{t - window}^{t} expr ds, ``expr`` being in S.
    """
    return sympy.expand(sympy.integrate(expr, (S, t - window, t)) / window)
