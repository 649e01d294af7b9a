"""Independent reference values for the test suite.

Nothing here goes through the package's summation or continuation code:
direct sums are plain numpy over large windows closed by a tail integral,
continued values come from mpmath Hurwitz zeta functions.
"""
import math

import mpmath
import numpy as np
from scipy.integrate import quad


def direct_sum(values, radius=10 ** 6, kind='full'):
    """``sum_k values(k)`` over ``|k| <= radius`` (or ``0 <= k <= radius``),
    plus the midpoint-rule integral of ``values`` beyond the window."""
    lo = -radius if kind == 'full' else 0
    k = np.arange(lo, radius + 1, dtype=float)
    v = np.asarray(values(k), dtype=complex)
    total = complex(math.fsum(v.real), math.fsum(v.imag))
    total += _tail_integral(values, radius + 0.5, 1)
    if kind == 'full':
        total += _tail_integral(values, radius + 0.5, -1)
    return total


def _tail_integral(values, start, sign):
    def f(x):
        return complex(np.asarray(values(np.array([sign * x])), dtype=complex)[0])
    re, _ = quad(lambda x: f(x).real, start, np.inf, epsabs=1e-18, epsrel=1e-12, limit=200)
    im, _ = quad(lambda x: f(x).imag, start, np.inf, epsabs=1e-18, epsrel=1e-12, limit=200)
    return complex(re, im)


def shifted_circle_zeta(p, c=1.0, terms=120):
    """``sum_{k in Z} (c + (k + 1/2)**2) ** -p`` continued in ``p``.

    The two modes with ``|k + 1/2| = 1/2`` are summed directly; the rest is
    the convergent binomial series in ``c / x**2`` over Hurwitz zeta values
    starting at ``3/2``.
    """
    p = mpmath.mpc(p)
    head = 2 * (c + mpmath.mpf(0.25)) ** -p
    tail = mpmath.mpf(0)
    binom = mpmath.mpf(1)
    for n in range(terms):
        if n:
            binom *= (-p - n + 1) / n
        tail += binom * c ** n * 2 * mpmath.zeta(2 * p + 2 * n, 1.5)
    return complex(head + tail)


def hurwitz_zeta(s, a):
    """``sum_{n >= 0} (n + a) ** -s`` continued in ``s``."""
    return complex(mpmath.zeta(s, a))
