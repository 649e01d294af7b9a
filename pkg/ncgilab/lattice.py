"""Analytic continuation of lattice sums.

The sums handled here have the form

    sum_k sum_c coefficient(k)_c * omega_{k,c} ** -w,
    omega_{k,c} = C_c + |k + shift| ** beta,

over the full or the half lattice, with ``w`` complex. They converge only
for ``Re(w)`` large, but as functions of ``w`` they continue to the whole
plane minus a discrete set of poles, provided the coefficient is a
polynomial in ``k`` outside a finite window. The continuation is computed
as a direct head sum plus, on each tail, a binomial expansion of
``(C + z**beta) ** -w`` in ``C / z**beta`` and an order-4 Euler-Maclaurin
formula for the resulting Hurwitz-type sums ``sum_z z**-s``.
"""
import collections
import logging
import math

import numpy as np
from numpy.polynomial import Polynomial

from ncgilab.exceptions import ContinuationError


logger = logging.getLogger(__name__)

LatticeSymbol = collections.namedtuple('LatticeSymbol', 'shift beta constants')
LatticeSymbol.__doc__ = """Eigenvalue rule ``omega_{k,c} = constants[c] + |k + shift| ** beta``
of a diagonal operator such as ``1 + D**2``; ``constants`` holds one
value per column (fiber component or path)."""

LatticeSum = collections.namedtuple('LatticeSum', 'value error head')

MAX_DEGREE = 6
POLE_GUARD = 1e-12
DIFF_TOL = 1e-12
FAR_RTOL = 1e-6


def symbol_values(symbol, k):
    """``omega_{k,c}`` for an array of lattice points, shape ``(n, c)``."""
    k = np.asarray(k, dtype=float)
    constants = np.atleast_1d(np.asarray(symbol.constants, dtype=complex))
    base = np.abs(k + symbol.shift) ** symbol.beta if symbol.beta else np.zeros_like(k)
    return constants[None, :] + base[:, None]


def hurwitz_em(s, a):
    """``sum_{n >= 0} (n + a) ** -s`` for ``a`` well inside the asymptotic
    regime, by Euler-Maclaurin to order 4, continued to all ``s != 1``.

    :return: (tuple) value, error estimate (ten times the last correction)
    """
    if abs(s - 1) < POLE_GUARD:
        raise ContinuationError(
            "Expected an exponent away from the pole at 1, but got {}".format(s)
        )
    log_a = math.log(a)
    a_s = np.exp(-s * log_a)
    last = s * (s + 1) * (s + 2) / 720.0 * a_s / a ** 3
    value = a * a_s / (s - 1) + a_s / 2.0 + s * a_s / (12.0 * a) - last
    return value, 10.0 * abs(last)


def _falling(i):
    if i == 0:
        return Polynomial([1.0])
    return Polynomial.fromroots(np.arange(i)) / math.factorial(i)


def tail_polynomials(coefficient, start, sign, shift, columns, max_degree=MAX_DEGREE):
    """Extract the coefficient's tail as polynomials in ``z = sign * (k + shift)``.

    The tail starts at ``k = start`` and runs in direction ``sign``. Forward
    differences at the start give the Newton form; the difference one past
    ``max_degree`` must vanish relative to the samples, and the polynomial
    must reproduce far samples to ``FAR_RTOL`` whatever its degree.

    :return: (list) one numpy Polynomial per column
    :raises ContinuationError: if the tail is not a polynomial of degree at
        most ``max_degree``
    """
    j = np.arange(max_degree + 2)
    samples = _columns(coefficient(start + sign * j), columns)
    polys = []
    for c in range(columns):
        scale = max(np.abs(samples[:, c]).max(), 1e-300)
        diffs = [np.diff(samples[:, c], n=i)[0] if i else samples[0, c]
                 for i in range(max_degree + 2)]
        if abs(diffs[-1]) > DIFF_TOL * scale:
            raise ContinuationError(
                "Expected a polynomial coefficient tail of degree at most {}, "
                "but the differences do not vanish".format(max_degree)
            )
        p = sum((d * _falling(i) for i, d in enumerate(diffs[:-1])), Polynomial([0.0]))
        polys.append(p(Polynomial([-sign * (start + shift), 1.0])))

    far = start + sign * np.array([2 * max_degree + 5, 97, 1009, 10007])
    z = sign * (far + shift)
    expected = np.stack([p(z) for p in polys], axis=1)
    actual = _columns(coefficient(far), columns)
    floor = DIFF_TOL * np.abs(samples).max(axis=0)[None, :]
    tol = FAR_RTOL * np.maximum(np.abs(actual), np.abs(expected)) + floor
    if np.any(np.abs(expected - actual) > tol):
        raise ContinuationError(
            "Expected a polynomial coefficient tail, but far samples disagree "
            "with the polynomial extracted at k = {}".format(start)
        )
    return polys


def _columns(values, columns):
    arr = np.asarray(values, dtype=complex)
    return arr.reshape(arr.shape[0], -1) * np.ones((1, columns))


def _binomial_terms(w, ratio_bound, tol=1e-18, limit=400):
    """Coefficients ``binom(-w, n)`` until ``|binom| * ratio_bound**n < tol``."""
    terms = [1.0 + 0j]
    n = 0
    while abs(terms[-1]) * ratio_bound ** n > tol and n < limit:
        n += 1
        terms.append(terms[-1] * (-w - n + 1) / n)
    return terms


def _tail_sum(poly, constant, beta, w, z0):
    """``sum_{z = z0, z0 + 1, ...} poly(z) (constant + z**beta) ** -w``."""
    coefs = poly.coef
    if np.all(coefs == 0):
        return 0j, 0.0
    if beta == 0:
        raise ContinuationError(
            "Expected a vanishing coefficient tail for a constant symbol, "
            "but the tail is a nonzero polynomial"
        )
    ratio = abs(constant) / z0 ** beta
    value, error = 0j, 0.0
    for n, binom in enumerate(_binomial_terms(w, ratio)):
        if binom == 0:
            continue
        weight = binom * constant ** n if n else binom
        for i, a in enumerate(coefs):
            if a == 0:
                continue
            h, e = hurwitz_em(beta * (w + n) - i, z0)
            value += a * weight * h
            error += abs(a * weight) * e
    return value, error


def start_radius(symbol, head):
    """Smallest head radius at which the binomial tail expansion converges
    fast, and at least ``head``."""
    constants = np.abs(np.atleast_1d(symbol.constants)).max()
    radius = head
    if symbol.beta:
        radius = max(radius, int(math.ceil((4.0 * constants) ** (1.0 / symbol.beta))) + 1)
    return radius + int(math.ceil(abs(symbol.shift)))


def lattice_sum(coefficient, symbol, exponent, kind='full', head=256,
                tails_only=False, max_degree=MAX_DEGREE, radius=None):
    """Continued value of ``sum_k sum_c coefficient(k)_c omega_{k,c} ** -w``.

    :param coefficient: callable, ``coefficient(k)`` has shape ``(n, c)``
        (or ``(n,)`` for a single column)
    :param symbol: (LatticeSymbol)
    :param exponent: (complex) ``w``
    :param kind: (str) 'full' or 'half'
    :param head: (int) minimal radius of the direct head sum
    :param tails_only: (bool) omit the head, e.g. when the caller sums the
        head by other means
    :param radius: (int) head radius shared with such a caller; by default
        :func:`start_radius`
    :return: (LatticeSum) value, error estimate, head radius
    """
    w = complex(exponent)
    constants = np.atleast_1d(np.asarray(symbol.constants, dtype=complex))
    columns = len(constants)
    if radius is None:
        radius = start_radius(symbol, head)

    value, error = 0j, 0.0
    if not tails_only:
        lo = -radius + 1 if kind == 'full' else 0
        k = np.arange(lo, radius, dtype=np.int64)
        coefs = _columns(coefficient(k), columns)
        live = coefs != 0
        if live.any():
            omega = symbol_values(symbol, k)[live]
            if np.any(omega.real <= 0):
                raise ContinuationError(
                    "Expected a positive symbol wherever the coefficient lives, "
                    "but found {}".format(omega[omega.real <= 0][:3])
                )
            terms = coefs[live] * np.exp(-w * np.log(omega))
            value += complex(math.fsum(terms.real), math.fsum(terms.imag))

    sides = [(radius, 1)]
    if kind == 'full':
        sides.append((-radius, -1))
    for start, sign in sides:
        polys = tail_polynomials(coefficient, start, sign, symbol.shift,
                                 columns, max_degree)
        z0 = sign * (start + symbol.shift)
        for c, poly in enumerate(polys):
            v, e = _tail_sum(poly, constants[c], symbol.beta, w, z0)
            value += v
            error += e
    logger.debug('lattice sum at w=%s: radius %d, error %g', w, radius, error)
    return LatticeSum(value, error, radius)
