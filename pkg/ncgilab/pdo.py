"""Pseudodifferential calculus on band operators.

With ``|D|_1 = (1 + D**2)**(1/2)`` and ``w_k`` its eigenvalues,

- ``delta1(T) = [|D|_1, T]`` has entries ``e(i, j) (w_i - w_j)``,
- ``nabla(T) = [D**2, T]`` has entries ``e(i, j) (w_i**2 - w_j**2)``,
- ``sigma1(T) = |D|_1 T |D|_1**-1`` has entries ``e(i, j) w_i / w_j``.

The differences are formed from the squares, as
``(x_i - x_j) / (sqrt(1 + x_i) + sqrt(1 + x_j))`` for ``x = D**2``, so that
nothing is lost to cancellation far out on the lattice. The verifiers
compare both sides of each identity entrywise on a probe set, building
the right-hand sides through the operator algebra rather than from the
closed forms.
"""
import collections
import logging
from math import comb

import numpy as np

from ncgilab.bandop import compose, entrywise_scaled
from ncgilab.iteration import doubling_radii, probe_points


logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 10 ** 4
DEFAULT_CAP = 10 ** 6
NOISE_FLOOR = 1e-13

VerifierReport = collections.namedtuple('VerifierReport', 'residual window probes')
FactorizationReport = collections.namedtuple('FactorizationReport', 'sups bounded')
OpOrderEstimate = collections.namedtuple('OpOrderEstimate', 'order probes')
OpOrderEstimate.__doc__ = """Estimated order ``r`` of ``T`` in ``OP^r`` and the
``(w_k, max |entry|)`` samples it was fitted on."""


def _square_pair(model, d, k):
    """``(x_row, x_col)``: ``D**2`` at rows ``k + d`` and columns ``k``,
    shaped to broadcast against ``(n, f, f)`` blocks."""
    sq = model.Dsq
    return sq.values(k + d)[:, :, None].real, sq.values(k)[:, None, :].real


def _delta_factor(model, power=1):
    def factor(d, k):
        xr, xc = _square_pair(model, d, k)
        return ((xr - xc) / (np.sqrt(1 + xr) + np.sqrt(1 + xc))) ** power
    return factor


def _nabla_factor(model, power=1):
    def factor(d, k):
        xr, xc = _square_pair(model, d, k)
        return (xr - xc) ** power
    return factor


def _sigma_factor(model, power=1):
    def factor(d, k):
        xr, xc = _square_pair(model, d, k)
        return np.sqrt((1 + xr) / (1 + xc)) ** power
    return factor


def abs_d1(model, power=1.0):
    """``|D|_1 ** power`` as a diagonal function."""
    return model.Dsq.apply(lambda x: (1.0 + x) ** (power / 2.0),
                           growth_order=power * model.D.growth_order,
                           name='|D|_1^{:g}'.format(power))


def delta1(model, T, n=1):
    """``delta1**n(T)``."""
    if n == 0:
        return T
    return entrywise_scaled(T, _delta_factor(model, n),
                            name='delta1^{}({})'.format(n, T.name))


def nabla(model, T):
    return iterate(model, T, 1)


def iterate(model, T, n):
    """``T^(n) = nabla**n(T)``, with entries ``e(i, j) (d_i**2 - d_j**2)**n``."""
    if n == 0:
        return T
    return entrywise_scaled(
        T, _nabla_factor(model, n),
        growth_order=T.growth_order + n * model.D.growth_order,
        name='{}^({})'.format(T.name, n),
    )


def sigma1(model, T, n=1):
    """``sigma1**n(T) = |D|_1**n T |D|_1**-n``."""
    return entrywise_scaled(T, _sigma_factor(model, n),
                            name='sigma1^{}({})'.format(n, T.name))


def _max_relative(lhs, rhs, k):
    residual = 0.0
    for d in sorted(set(lhs.offsets) | set(rhs.offsets)):
        left = lhs.band(d, k)
        right = rhs.band(d, k)
        residual = max(residual, float(np.max(np.abs(left - right) / (1.0 + np.abs(left)))))
    return residual


def _probes(model, window, seed=0):
    return probe_points(model.basis.kind, window, seed=seed)


def verify_sigma_expansion(model, b, n=1, window=DEFAULT_WINDOW):
    """Check ``sigma1(b) = b + delta1(b) |D|_1**-1`` and the expansion
    ``sigma1**n(b) = sum_k C(n, k) delta1**k(b) |D|_1**-k``.

    :return: (VerifierReport) the larger of the two maximal relative residuals
    """
    k = _probes(model, window)
    first = _max_relative(sigma1(model, b), b + compose(delta1(model, b), abs_d1(model, -1)), k)
    expansion = b
    for j in range(1, n + 1):
        expansion = expansion + comb(n, j) * compose(delta1(model, b, j), abs_d1(model, -j))
    second = _max_relative(sigma1(model, b, n), expansion, k)
    logger.debug('sigma1 identities for %s, n=%d: %g, %g', b.name, n, first, second)
    return VerifierReport(max(first, second), window, len(k))


def gamma1(model, b):
    """``gamma1(b) = 2 delta1(b) |D|_1``."""
    return 2.0 * compose(delta1(model, b), abs_d1(model, 1))


def verify_nabla_expansion(model, b, n=1, window=DEFAULT_WINDOW):
    """Check ``nabla(b) = delta1**2(b) + gamma1(b)`` and the expansion
    ``nabla**n(b) = (sum_k 2**k C(n, k) delta1**(2n-k)(b) |D|_1**(k-n)) |D|_1**n``.
    """
    k = _probes(model, window)
    first = _max_relative(nabla(model, b), delta1(model, b, 2) + gamma1(model, b), k)
    expansion = None
    for j in range(n + 1):
        term = (2 ** j * comb(n, j)) * compose(
            compose(delta1(model, b, 2 * n - j), abs_d1(model, j - n)), abs_d1(model, n))
        expansion = term if expansion is None else expansion + term
    second = _max_relative(iterate(model, b, n), expansion, k)
    logger.debug('nabla identities for %s, n=%d: %g, %g', b.name, n, first, second)
    return VerifierReport(max(first, second), window, len(k))


def probe_sup(op, window, seed=0):
    """Largest entry modulus of ``op`` on the probe set of a window."""
    k = probe_points(op.basis.kind, window, seed=seed)
    return max((float(np.abs(op.band(d, k)).max()) for d in op.offsets), default=0.0)


def boundedness_trend(op, window=DEFAULT_WINDOW, cap=DEFAULT_CAP):
    """Probe sups over doubling windows; bounded when two consecutive sups
    agree within 1%.

    :return: (FactorizationReport)
    """
    sups = []
    for radius in doubling_radii(window, cap):
        sups.append(probe_sup(op, radius))
        if len(sups) >= 2 and sups[-1] <= 1.01 * sups[-2] + 1e-12:
            return FactorizationReport(sups, True)
    return FactorizationReport(sups, False)


def factorization_check(model, b_list, n_list, interpose=False,
                        window=DEFAULT_WINDOW, cap=DEFAULT_CAP):
    """Boundedness of ``b_0^(n_0) ... b_m^(n_m) |D|_1**-|n|``.

    With ``interpose`` one ``D`` is placed after the first factor and the
    weight becomes ``|D|_1**-(|n| + 1)``.
    """
    factors = [iterate(model, b, n) for b, n in zip(b_list, n_list)]
    total = sum(n_list)
    if interpose:
        factors.insert(1, model.D)
        total += 1
    product = factors[0]
    for f in factors[1:]:
        product = compose(product, f)
    if total:
        product = compose(product, abs_d1(model, -total))
    return boundedness_trend(product, window, cap)


def operator_norm_bound(op, window):
    """Schur-test bound ``sqrt(max row sum * max column sum)`` of ``|entries|``
    restricted to the probe set of a window."""
    k = probe_points(op.basis.kind, window)
    f = op.fiber
    rows = np.zeros((len(k), f))
    cols = np.zeros((len(k), f))
    for d in op.offsets:
        rows += np.abs(op.band(d, k - d)).sum(axis=2)
        cols += np.abs(op.band(d, k)).sum(axis=1)
    return float(np.sqrt(rows.max() * cols.max()))


def _stable_norm(op, window, cap):
    previous = None
    for radius in doubling_radii(window, cap):
        current = operator_norm_bound(op, radius)
        if previous is not None and abs(current - previous) <= 0.01 * max(previous, 1e-300):
            return current
        previous = current
    return previous


def delta_norm(model, b, k, window=DEFAULT_WINDOW, cap=DEFAULT_CAP):
    """``||b||_k = sum_{j <= k} ||delta1**j(b)||`` with each norm replaced by
    its probed Schur bound, windows doubling until two agree within 1%."""
    return sum(_stable_norm(delta1(model, b, j), window, cap) for j in range(k + 1))


def estimate_order(model, T, window=DEFAULT_WINDOW):
    """Log-log fit of the largest entry modulus against ``w_k = (1 + d_k**2)**(1/2)``
    at dyadic lattice points.

    Entries at or below ``NOISE_FLOOR`` times the largest one count as zero.

    :return: (OpOrderEstimate) ``-inf`` if the entries vanish far out
    """
    radii = 2 ** np.arange(4, int(np.log2(window)) + 1)
    points = radii if model.basis.kind == 'half' else np.concatenate((radii, -radii))
    w = np.sqrt(1.0 + model.Dsq.values(points).real.max(axis=1))
    sizes = np.zeros(len(points))
    for d in T.offsets:
        sizes = np.maximum(sizes, np.abs(T.band(d, points)).max(axis=(1, 2)))
    probes = list(zip(w, sizes))
    live = sizes > NOISE_FLOOR * sizes.max()
    if live.sum() < 2:
        return OpOrderEstimate(-np.inf, probes)
    slope = np.polyfit(np.log(w[live]), np.log(sizes[live]), 1)[0]
    return OpOrderEstimate(float(slope), probes)
