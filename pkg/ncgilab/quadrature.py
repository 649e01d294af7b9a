"""Quadrature and divided-difference helpers for resolvent expectations.

Every expectation reduces, mode by mode, to a contour integral

    (1 / 2 pi i) int_l lam**-p  prod_j (lam - w_j)**-1  dlam

over the vertical line ``l = {a + iv}``. By the Cauchy formula this is
the divided difference ``g[w_0, ..., w_m]`` of ``g(x) = x**-p``, which is
what :func:`power_divided_difference` evaluates exactly;
:func:`contour_integral` evaluates the same quantity by honest numerical
quadrature along ``l`` and is the independent cross-check. The line is
traversed upwards and closes clockwise around the points, so the raw
integral is ``-g[w]``; ``ORIENTATION`` restores the sign.
"""
import logging
import math

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import gamma, roots_jacobi


logger = logging.getLogger(__name__)

ORIENTATION = -1
CONFLUENCE = 1e-6
# sinh overflows near 710
X_MAX = 600.0


def rising(sigma, n):
    """Pochhammer symbol ``(sigma)_n`` for complex ``sigma``."""
    out = 1.0 + 0j
    for i in range(n):
        out *= sigma + i
    return out


def _derivative_term(x, sigma, n):
    """``g^(n)(x) / n!`` for ``g(x) = x**-sigma``."""
    return (-1) ** n * rising(sigma, n) / math.factorial(n) * np.exp((-sigma - n) * np.log(x))


def power_divided_difference(points, sigma):
    """Divided differences ``g[x_0, ..., x_m]`` of ``g(x) = x**-sigma``.

    Rows of ``points`` are independent problems. Coincident or nearly
    coincident points (relative spread below ``CONFLUENCE``) are treated
    as confluent, using the derivative at their mean.

    :param points: (array-like) shape ``(n, m + 1)``, points off the
        negative real axis
    :param sigma: (complex) exponent
    :return: (numpy.ndarray) complex, shape ``(n,)``
    """
    x = np.atleast_2d(np.asarray(points, dtype=complex))
    x = np.take_along_axis(x, np.argsort(x.real, axis=1), axis=1)
    n, width = x.shape
    table = np.exp(-sigma * np.log(x))
    for level in range(1, width):
        lo = x[:, :width - level]
        hi = x[:, level:]
        span = hi - lo
        confluent = np.abs(span) <= CONFLUENCE * np.abs(hi)
        new = np.empty((n, width - level), dtype=complex)
        safe_span = np.where(confluent, 1.0, span)
        if level == 1:
            h_over = safe_span / lo
            new[:] = table[:, :-1] * np.expm1(-sigma * np.log1p(h_over)) / safe_span
        else:
            new[:] = (table[:, 1:] - table[:, :-1]) / safe_span
        if confluent.any():
            centre = np.stack([x[:, i:i + level + 1].mean(axis=1)
                               for i in range(width - level)], axis=1)
            new[confluent] = _derivative_term(centre[confluent], sigma, level)
        table = new
    return table[:, 0]


def simplex_rule(m, order=8):
    """Gauss rule on the standard ``m``-simplex in barycentric coordinates.

    Collapsed (Duffy) coordinates with Gauss-Jacobi factors; the weights
    sum to the simplex volume ``1 / m!``.

    :return: (tuple) nodes of shape ``(Q, m + 1)``, weights of shape ``(Q,)``
    """
    if m == 0:
        return np.ones((1, 1)), np.ones(1)
    axes = []
    for i in range(1, m + 1):
        x, w = roots_jacobi(order, m - i, 0)
        axes.append(((1 + x) / 2, w / 2.0 ** (m - i + 1)))
    grids = np.meshgrid(*[u for u, _ in axes], indexing='ij')
    wgrids = np.meshgrid(*[w for _, w in axes], indexing='ij')
    u = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    nodes = np.empty((len(u), m + 1))
    remaining = np.ones(len(u))
    for i in range(m):
        nodes[:, i] = remaining * u[:, i]
        remaining = remaining * (1 - u[:, i])
    nodes[:, m] = remaining
    return nodes, weights


def beta_s_factor(alpha, p):
    """Constant ``K`` with ``int_0^inf s**alpha (s**2 + c)**-p ds = K c**-sigma``,
    ``sigma = p - (alpha + 1) / 2``."""
    half = (alpha + 1) / 2.0
    return 0.5 * gamma(half) * gamma(p - half) / gamma(p)


def _split_complex(func):
    def wrapped(x):
        v = np.atleast_1d(np.asarray(func(x), dtype=complex))
        return np.concatenate((v.real, v.imag))
    return wrapped


def _join_complex(v):
    half = len(v) // 2
    return v[:half] + 1j * v[half:]


def s_integral(func, power, epsabs=1e-12, epsrel=1e-10, limit=200):
    """``int_0^inf s**power func(s) ds`` after the substitution ``x = s**2``,
    split at ``x = 1``.

    :param func: callable of ``s`` returning a complex scalar or array
    :return: (tuple) complex value (array if ``func`` returns one), error
    """
    def integrand(x):
        s = math.sqrt(x)
        return 0.5 * x ** ((power - 1) / 2.0) * np.asarray(func(s))

    wrapped = _split_complex(integrand)
    head, err_head = quad_vec(wrapped, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel, limit=limit)
    tail, err_tail = quad_vec(wrapped, 1.0, np.inf, epsabs=epsabs, epsrel=epsrel, limit=limit)
    value = _join_complex(head + tail)
    return (value[0] if len(value) == 1 else value), err_head + err_tail


def contour_integral(points, p, abscissa=0.25, epsabs=1e-13, epsrel=1e-10,
                     limit=400):
    """Numerical ``(1 / 2 pi i) int_l lam**-p prod_j (lam - w_j)**-1 dlam``,
    oriented so that it equals ``g[w_0, ..., w_m]``.

    The line is parametrized by ``v = a sinh(x)``, which resolves both the
    scale ``a`` of ``lam**-p`` and the scale of the points; the neglected
    ends are bounded by the power-law decay of the integrand.

    :param points: (array-like) shape ``(n, m + 1)``, real parts above ``a``
    :return: (tuple) complex values of shape ``(n,)``, error bound
    """
    w = np.asarray(points, dtype=complex)
    width = w.shape[1]
    a = float(abscissa)
    decay = complex(p).real + width - 1
    scale = max(np.abs(w).max(), 1.0)
    x_max = min(math.log(2.0 * scale / a) + 40.0 / decay, X_MAX)

    def integrand(x):
        v = a * math.sinh(x)
        lam = a + 1j * v
        vals = np.exp(-p * np.log(lam)) / np.prod(lam - w, axis=1)
        return vals * a * math.cosh(x) / (2.0 * math.pi)

    raw, err = quad_vec(_split_complex(integrand), -x_max, x_max,
                        epsabs=epsabs, epsrel=epsrel, limit=limit)
    v_end = a * math.sinh(x_max)
    branch = math.exp(math.pi / 2 * abs(complex(p).imag))
    tail = 2.0 ** width * branch * v_end ** (-decay) / (decay * math.pi)
    logger.debug('contour quadrature over %d modes: err %g, tail %g', len(w), err, tail)
    return ORIENTATION * _join_complex(raw), err + tail
