"""The residue cocycle and the zeta functions it is made of.

A recipe ``b = gamma a_0 [D, a_1]^(k_1) ... [D, a_m]^(k_m) (1 + D**2)**(-m/2 - |k|)``
is kept as its operator word and the exponent of its weight, so that

    zeta_b(z - z0) = trace(b (1 + D**2)**(-z + z0)),    z0 = (1 - q) / 2,

is a lattice sum of the word's diagonal against ``(1 + D**2)`` raised to
``-(m/2 + |k| + z - z0)``, which the lattice engine continues to the whole
plane. Residues come from Laurent fits on rings around ``z0``.
"""
import cmath
import collections
import itertools
import logging
import math
from fractions import Fraction

import numpy as np
from scipy.special import gamma as gamma_fn

from ncgilab.bandop import compose, graded_commutator, trace
from ncgilab.exceptions import LaurentFitError, NcgiValueError, PreconditionError
from ncgilab.laurent import HOLOMORPHIC_TOL, POINTS, RADII, laurent_fit
from ncgilab.lattice import lattice_sum
from ncgilab.pdo import iterate
from ncgilab.resolvent import ContourSpec, continuation, relative_residual


logger = logging.getLogger(__name__)

SQRT_2PI_I = cmath.sqrt(2j * math.pi)

ZetaValue = collections.namedtuple('ZetaValue', 'value error')
ResidueComparison = collections.namedtuple(
    'ResidueComparison', 'resolvent_residue residue_cocycle residual fit'
)


def multi_indices(m, total):
    """All ``(k_1, ..., k_m)`` of non-negative integers with ``|k| = total``."""
    if m == 0:
        return [()] if total == 0 else []
    return [k for k in itertools.product(range(total + 1), repeat=m) if sum(k) == total]


def alpha(k):
    """``alpha(k) = 1 / (k_1! ... k_m! (k_1 + 1)(k_1 + k_2 + 2) ... (|k| + m))``, exactly."""
    denominator = 1
    partial = 0
    for i, ki in enumerate(k):
        if ki < 0:
            raise NcgiValueError("Expected a multi-index of non-negative entries, but got {}".format(k))
        partial += ki
        denominator *= math.factorial(ki) * (partial + i + 1)
    return Fraction(1, denominator)


def sigma_coeffs(n):
    """``sigma_{n,j}`` with ``prod_{j<n} (z + j + 1/2) = sum_j sigma_{n,j} z**j``, exactly.

    :return: (list) of Fraction, index ``j``
    """
    if n < 0:
        raise NcgiValueError("Expected n >= 0, but got {}".format(n))
    coefs = [Fraction(1)]
    for j in range(n):
        root = Fraction(2 * j + 1, 2)
        shifted = [Fraction(0)] + coefs
        coefs = [shifted[i] + (coefs[i] * root if i < len(coefs) else 0)
                 for i in range(len(shifted))]
    return coefs


class ZetaSpec(collections.namedtuple('ZetaSpec', 'model word weight name')):
    """A recipe: ``word`` (a BandOperator including ``gamma``) times
    ``(1 + D**2)**-weight``."""
    __slots__ = ()

    @property
    def base_point(self):
        return (1.0 - self.model.q) / 2.0

    def coefficient(self, k):
        """Fiber diagonal of the word, shape ``(n, f)``."""
        block = self.word.band(0, k)
        return np.diagonal(block, axis1=1, axis2=2)

    def to_record(self):
        return self.name


def zeta_recipe(model, a, ks):
    """The recipe of ``gamma a_0 [D, a_1]^(k_1) ... [D, a_m]^(k_m) (1 + D**2)**(-m/2 - |k|)``.

    :param a: (tuple) ``a_0, ..., a_m``
    :param ks: (tuple) ``k_1, ..., k_m``
    """
    m = len(a) - 1
    if len(ks) != m:
        raise NcgiValueError(
            "Expected a multi-index of length {}, but got {}".format(m, len(ks))
        )
    word = compose(model.gamma, a[0])
    parts = ['a0={}'.format(a[0].name)]
    for j, (aj, kj) in enumerate(zip(a[1:], ks), 1):
        word = compose(word, iterate(model, graded_commutator(model.D, aj), kj))
        parts.append('d{}=[D,{}]^({})'.format(j, aj.name, kj))
    weight = m / 2.0 + sum(ks)
    parts.append('weight=(1+D^2)^{{-{:g}}}'.format(weight))
    return ZetaSpec(model, word, weight, '; '.join(parts))


def zeta_eval(spec, z, head=256):
    """``zeta_b(z - z0) = trace(b (1 + D**2)**(-z + z0))`` continued in ``z``.

    :return: (ZetaValue)
    :raises ContinuationError: when the word's diagonal is not polynomial
        outside a window, or ``z`` sits on a pole
    """
    model = spec.model
    if 0 not in spec.word.offsets:
        return ZetaValue(0j, 0.0)
    symbol = model.one_plus_square_symbol()
    if symbol is None:
        raise PreconditionError(
            "Expected Dirac data with a lattice symbol, but {} has none".format(model.name)
        )
    exponent = spec.weight + complex(z) - spec.base_point
    result = lattice_sum(spec.coefficient, symbol, exponent, kind=model.basis.kind, head=head)
    return ZetaValue(result.value, result.error)


def zeta_direct(spec, z, tol=1e-12):
    """The same zeta value by a certified trace, for ``Re z`` in the half-plane
    of convergence."""
    model = spec.model
    exponent = spec.weight + complex(z) - spec.base_point
    weight = model.Dsq.apply(lambda x: (1.0 + x) ** -exponent,
                             growth_order=-2 * model.D.growth_order * exponent.real)
    product = compose(spec.word, weight)
    return trace(product, tol=tol,
                 growth_order=spec.word.growth_order + weight.growth_order).value


def tau_j(spec, j, radii=RADII, points=POINTS, fit_tol=HOLOMORPHIC_TOL):
    """``tau_j(b) = res_{z=z0} (z - z0)**j zeta_b(z - z0)``; ``j = -1`` gives
    the holomorphic part of ``zeta_b`` at ``z0``.

    :raises LaurentFitError: if the fit residual exceeds ``fit_tol`` (the
        recipe does not behave like an isolated singularity)
    """
    if 0 not in spec.word.offsets:
        return 0j
    z0 = spec.base_point
    fit = laurent_fit(lambda z: (z - z0) ** j * zeta_eval(spec, z).value, z0,
                      radii=radii, points=points)
    if fit.residual > fit_tol:
        raise LaurentFitError(
            "Expected an isolated singularity of zeta_b at {}, but the fit residual "
            "for {} is {:g}".format(z0, spec.name, fit.residual)
        )
    logger.debug('tau_%d(%s) = %s', j, spec.name, fit.residue)
    return fit.residue


def _check_degree(model, m):
    if m % 2 != model.parity or not model.parity <= m <= model.M:
        raise NcgiValueError(
            "Expected a degree m = {} (mod 2) in [{}, {}], but got {}".format(
                model.parity, model.parity, model.M, m
            )
        )


def residue_cocycle_component(model, m, a, radii=RADII, points=POINTS):
    """``phi_m(a) = sqrt(2 pi i) sum_{|k|<=M-m} (-1)**|k| alpha(k)
    sum_{j=A}^{h} sigma_{h,j} tau_{j-A}(gamma a_0 [D, a_1]^(k_1) ... (1 + D**2)**(-|k| - m/2))``
    with ``h = |k| + (m - P)/2``. The even bottom ``m = 0`` keeps ``j = 0``,
    i.e. ``tau_{-1}``.
    """
    _check_degree(model, m)
    A = model.anti_parity
    total = 0j
    for size in range(model.M - m + 1):
        for ks in multi_indices(m, size):
            spec = zeta_recipe(model, a, ks)
            if 0 not in spec.word.offsets:
                continue
            h = size + (m - model.parity) // 2
            sigma = sigma_coeffs(h)
            lo = 0 if m == 0 else A
            inner = sum(float(sigma[j]) * tau_j(spec, j - A, radii, points)
                        for j in range(lo, h + 1) if sigma[j])
            total += (-1) ** size * float(alpha(ks)) * inner
    return SQRT_2PI_I * total


def compare_residue_vs_resolvent(model, m, a, spec=None, radii=RADII, points=POINTS):
    """Residue at ``r0 = (1 - q)/2`` of the continued resolvent component
    against the residue-cocycle value.

    :return: (ResidueComparison)
    """
    r0 = (1.0 - model.q) / 2.0
    fit = laurent_fit(lambda r: continuation(model, m, r, a, spec=spec), r0,
                      radii=radii, points=points)
    value = residue_cocycle_component(model, m, a, radii, points)
    return ResidueComparison(fit.residue, value, relative_residual(fit.residue, value), fit)


def zeta_sum_index(model, u, radii=RADII, points=POINTS):
    """The summed zeta functions of the odd index formula, residue taken once.

    For odd ``m <= M`` the word is ``u* [D, u]^(k_1) [D, u*]^(k_2) ... [D, u]^(k_m)``;
    terms carry ``(-1)**(|k| + m) alpha(k) Gamma((m + 1)/2) sigma_{h,j} (r - r0)**j``,
    ``h = |k| + (m - 1)/2``. The sum carries the factor ``sqrt(2 pi i)`` of the
    residue cocycle, so the result is directly comparable with the index.

    :return: (complex) ``res / sqrt(2 pi i)`` of that sum
    """
    if model.parity != 1:
        raise PreconditionError("Expected an odd model, but {} is even".format(model.name))
    us = u.adjoint()
    us.name = '{}*'.format(u.name)
    r0 = (1.0 - model.q) / 2.0
    terms = []
    for m in range(1, model.M + 1, 2):
        a = (us, u) * ((m + 1) // 2)
        for size in range(model.M - m + 1):
            h = size + (m - 1) // 2
            sigma = sigma_coeffs(h)
            for ks in multi_indices(m, size):
                spec = zeta_recipe(model, a, ks)
                if 0 not in spec.word.offsets:
                    continue
                const = (-1) ** (size + m) * float(alpha(ks)) * gamma_fn((m + 1) / 2.0)
                for j in range(h + 1):
                    terms.append((const * float(sigma[j]), j, spec))

    def summed(r):
        return SQRT_2PI_I * sum(c * (r - r0) ** j * zeta_eval(spec, r).value
                                for c, j, spec in terms)
    if not terms:
        return 0j
    fit = laurent_fit(summed, r0, radii=radii, points=points)
    if not fit.simple_pole():
        raise LaurentFitError(
            "Expected at worst a simple pole at r = {}, but c_-2 = {}".format(r0, fit.coefficient(-2))
        )
    return fit.residue / SQRT_2PI_I
