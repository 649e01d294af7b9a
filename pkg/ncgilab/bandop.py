"""Lazily evaluated banded operators on integer-lattice bases.

An operator is stored as a small dictionary of bands. The band at offset
``d`` is a rule ``k -> e(k + d, k)`` that is evaluated on whole numpy
arrays of column indices at once, so that nothing is ever truncated until
a caller explicitly asks for a finite section. Each entry is an
``f x f`` block, ``f`` being the fiber dimension of the basis; on
fiber-1 bases a rule may simply return a 1-d array.

Entries outside the lattice (negative indices on the half lattice) and
outside an optional finite support are exactly zero, and the rules are
never evaluated there.
"""
import collections
import logging
import math

import numpy as np
from cached_property import cached_property
from scipy.integrate import quad

from ncgilab.decorators import memoize_per_instance
from ncgilab.exceptions import (
    BasisMismatchError,
    NcgiValueError,
    NonSummableError,
    SpectrumProximityError,
    ToleranceNotReachedError,
)
from ncgilab.iteration import chunked, doubling_shells


logger = logging.getLogger(__name__)

EPS_SPEC = 1e-9
CHUNK_SIZE = 1 << 16
# trace tail certificates
TAIL_SAFETY = 2.0
COHERENT = 0.5
FINITE_ORDER = -2.0


class BasisIndexSet(collections.namedtuple('BasisIndexSet', 'kind fiber')):
    """The lattice an operator acts on: ``kind`` is 'full' or 'half',
    ``fiber`` the number of components per lattice point."""
    __slots__ = ()

    def __new__(cls, kind='full', fiber=1):
        if kind not in ('full', 'half'):
            raise NcgiValueError(
                "Expected basis kind 'full' or 'half', but got {!r}".format(kind)
            )
        if fiber not in (1, 2, 4):
            raise NcgiValueError(
                "Expected fiber dimension 1, 2 or 4, but got {!r}".format(fiber)
            )
        return super(BasisIndexSet, cls).__new__(cls, kind, fiber)

    def valid(self, k):
        """Boolean mask of the points of ``k`` that lie on the lattice."""
        if self.kind == 'half':
            return k >= 0
        return np.ones(k.shape, dtype=bool)

    def doubled(self):
        return BasisIndexSet(self.kind, 2 * self.fiber)


TraceResult = collections.namedtuple('TraceResult', 'value tail_bound terms_used')


def _as_blocks(values, n, fiber):
    """Coerce the output of a band rule to complex blocks of shape
    ``(n, fiber, fiber)``."""
    arr = np.asarray(values, dtype=complex)
    if arr.ndim == 1 and fiber == 1:
        arr = arr.reshape(n, 1, 1)
    return np.broadcast_to(arr, (n, fiber, fiber))


def _check_same_basis(a, b):
    if a.basis != b.basis:
        raise BasisMismatchError(
            "Expected operators on the same basis, but got {} and {}".format(
                a.basis, b.basis
            )
        )


def _intersect(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a[0], b[0]), min(a[1], b[1])


def _hull(a, b):
    if a is None or b is None:
        return None
    return min(a[0], b[0]), max(a[1], b[1])


def _widen(support, width):
    if support is None:
        return None
    return support[0] - width, support[1] + width


class BandOperator(object):
    """A banded operator ``T`` with entries ``e(i, j)`` on a lattice basis.

    :param basis: (BasisIndexSet) the lattice
    :param bands: (dict) offset ``d`` -> rule; ``rule(k)`` returns
        ``e(k + d, k)`` for an int64 array ``k`` of column indices
    :param growth_order: (float) ``rho`` with ``|e(i, j)| <= C (1 + |i|)**rho``
    :param degree: (int) grading degree, 0 or 1
    :param support: (tuple) optional inclusive column window ``(lo, hi)``
        outside which every entry vanishes
    :param name: (str) word used in reports
    """

    def __init__(self, basis, bands, growth_order=0.0, degree=0,
                 support=None, name=None):
        if degree not in (0, 1):
            raise NcgiValueError(
                "Expected grading degree 0 or 1, but got {!r}".format(degree)
            )
        self.basis = basis
        self._bands = dict(bands)
        self.growth_order = float(growth_order)
        self.degree = degree
        self.support = support
        self.name = name or 'T'

    def __repr__(self):
        return '<{} {} on {}>'.format(type(self).__name__, self.name, self.basis)

    @cached_property
    def offsets(self):
        """Sorted band offsets."""
        return tuple(sorted(self._bands))

    @cached_property
    def half_bandwidth(self):
        return max((abs(d) for d in self._bands), default=0)

    @property
    def fiber(self):
        return self.basis.fiber

    def _valid(self, d, k):
        valid = self.basis.valid(k) & self.basis.valid(k + d)
        if self.support is not None:
            lo, hi = self.support
            valid &= (k >= lo) & (k <= hi)
        return valid

    def band(self, d, k):
        """Evaluate the band at offset ``d``: the blocks ``e(k + d, k)``.

        :param d: (int) offset
        :param k: (array-like) column indices
        :return: (numpy.ndarray) complex, shape ``(len(k), f, f)``
        """
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        f = self.fiber
        out = np.zeros((len(k), f, f), dtype=complex)
        rule = self._bands.get(d)
        if rule is None:
            return out
        valid = self._valid(d, k)
        if valid.all():
            out[...] = _as_blocks(rule(k), len(k), f)
        elif valid.any():
            kv = k[valid]
            out[valid] = _as_blocks(rule(kv), len(kv), f)
        return out

    @memoize_per_instance
    def entry(self, i, j):
        """A single entry ``e(i, j)``: a complex scalar on fiber-1 bases,
        an ``f x f`` block otherwise."""
        block = self.band(i - j, [j])[0]
        if self.fiber == 1:
            return complex(block[0, 0])
        return block

    def adjoint(self):
        """``T*``, with entries ``conj(e(j, i))``."""
        def adjoint_rule(d):
            return lambda k: np.conj(np.swapaxes(self.band(-d, k + d), 1, 2))
        return BandOperator(
            self.basis,
            {-d: adjoint_rule(-d) for d in self.offsets},
            growth_order=self.growth_order,
            degree=self.degree,
            support=_widen(self.support, self.half_bandwidth),
            name='({})*'.format(self.name),
        )

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        return _linear_combination(self, other, 1.0)

    def __sub__(self, other):
        return _linear_combination(self, other, -1.0)

    def __neg__(self):
        return -1.0 * self

    def __mul__(self, scalar):
        if isinstance(scalar, BandOperator):
            return NotImplemented
        scalar = complex(scalar)

        def scaled_rule(d):
            return lambda k: scalar * self.band(d, k)
        return BandOperator(
            self.basis,
            {d: scaled_rule(d) for d in self.offsets},
            growth_order=self.growth_order,
            degree=self.degree,
            support=self.support,
            name='{}*{}'.format(_format_scalar(scalar), self.name),
        )

    __rmul__ = __mul__


def _format_scalar(c):
    if c.imag == 0:
        return '{:g}'.format(c.real)
    return '({:g})'.format(c)


def _linear_combination(a, b, sign):
    _check_same_basis(a, b)
    if a.offsets and b.offsets and a.degree != b.degree:
        raise NcgiValueError(
            "Expected summands of equal grading degree, but got {} and {}".format(
                a.degree, b.degree
            )
        )

    def summed_rule(d):
        return lambda k: a.band(d, k) + sign * b.band(d, k)
    offsets = set(a.offsets) | set(b.offsets)
    degree = a.degree if a.offsets else b.degree
    return BandOperator(
        a.basis,
        {d: summed_rule(d) for d in offsets},
        growth_order=max(a.growth_order, b.growth_order),
        degree=degree,
        support=_hull(a.support, b.support),
        name='({} {} {})'.format(a.name, '+' if sign > 0 else '-', b.name),
    )


def compose(a, b):
    """Composition ``A B``.

    The band of ``A B`` at offset ``dA + dB`` collects
    ``A.band(dA)(k + dB) @ B.band(dB)(k)`` over all pairs of offsets.
    """
    _check_same_basis(a, b)
    pairs = collections.defaultdict(list)
    for da in a.offsets:
        for db in b.offsets:
            pairs[da + db].append((da, db))

    def composed_rule(terms):
        def rule(k):
            total = 0
            for da, db in terms:
                total = total + a.band(da, k + db) @ b.band(db, k)
            return total
        return rule

    support = _intersect(b.support, _widen(a.support, b.half_bandwidth))
    return BandOperator(
        a.basis,
        {d: composed_rule(terms) for d, terms in pairs.items()},
        growth_order=a.growth_order + b.growth_order,
        degree=(a.degree + b.degree) % 2,
        support=support,
        name='{}{}'.format(a.name, b.name),
    )


def graded_commutator(a, b):
    """``[A, B]_+- = A B - (-1)**(deg A deg B) B A``."""
    sign = (-1) ** (a.degree * b.degree)
    c = compose(a, b) - sign * compose(b, a)
    c.name = '[{},{}]'.format(a.name, b.name)
    return c


def entrywise_scaled(a, factor, growth_order=None, degree=None, name=None):
    """Multiply every block of ``A`` entrywise by ``factor(d, k)``, an array
    broadcastable to ``(len(k), f, f)``.

    This is how differences like ``d_i**2 - d_j**2`` are applied to a
    band without forming the two products separately.
    """
    def scaled_rule(d):
        return lambda k: a.band(d, k) * factor(d, k)
    return BandOperator(
        a.basis,
        {d: scaled_rule(d) for d in a.offsets},
        growth_order=a.growth_order if growth_order is None else growth_order,
        degree=a.degree if degree is None else degree,
        support=a.support,
        name=name or a.name,
    )


class DiagonalFunction(BandOperator):
    """A diagonal operator ``diag(v(k))``; on fiber bases ``v(k)`` is a
    vector of ``f`` values per lattice point.

    :param rule: callable, ``rule(k)`` returns shape ``(n,)`` or ``(n, f)``
    :param lower_bound: (float) optional lower bound of the real values,
        used by :func:`resolvent_diag` to rule out the spectrum eagerly
    """

    def __init__(self, basis, rule, growth_order=0.0, degree=0,
                 support=None, name=None, lower_bound=None):
        self._rule = rule
        self.lower_bound = lower_bound
        super(DiagonalFunction, self).__init__(
            basis, {0: self._blocks}, growth_order=growth_order,
            degree=degree, support=support, name=name or 'diag',
        )

    def _raw(self, k):
        vals = np.asarray(self._rule(k))
        return vals.reshape(len(k), -1) * np.ones((1, self.fiber))

    def _blocks(self, k):
        vals = self._raw(k)
        return vals[:, :, None] * np.eye(self.fiber)

    def values(self, k):
        """Diagonal values at the lattice points ``k``, shape ``(n, f)``;
        zero off the lattice and off the support."""
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        valid = self._valid(0, k)
        raw = np.zeros((len(k), self.fiber), dtype=complex)
        if valid.any():
            raw[valid] = self._raw(k[valid])
        return raw

    def adjoint(self):
        return DiagonalFunction(
            self.basis, lambda k: np.conj(self._raw(k)),
            growth_order=self.growth_order, degree=self.degree,
            support=self.support, name='({})*'.format(self.name),
            lower_bound=self.lower_bound,
        )

    def apply(self, func, growth_order=None, name=None, lower_bound=None):
        """The diagonal operator ``func(T)``."""
        return DiagonalFunction(
            self.basis,
            lambda k: func(self._raw(k)),
            growth_order=self.growth_order if growth_order is None else growth_order,
            degree=0,
            support=self.support,
            name=name or 'f({})'.format(self.name),
            lower_bound=lower_bound,
        )

    def __matmul__(self, other):
        if isinstance(other, DiagonalFunction):
            _check_same_basis(self, other)
            return DiagonalFunction(
                self.basis,
                lambda k: self._raw(k) * other._raw(k),
                growth_order=self.growth_order + other.growth_order,
                degree=(self.degree + other.degree) % 2,
                support=_intersect(self.support, other.support),
                name='{}{}'.format(self.name, other.name),
            )
        return compose(self, other)


def identity(basis):
    return DiagonalFunction(basis, lambda k: np.ones(len(k)), name='1',
                            lower_bound=1.0)


def zero(basis):
    return BandOperator(basis, {}, growth_order=-np.inf, name='0')


def shift(basis, n=1):
    """The shift ``S**n`` with ``e(k + n, k) = 1``; unilateral on the half
    lattice."""
    f = basis.fiber
    return BandOperator(
        basis,
        {n: lambda k: np.broadcast_to(np.eye(f), (len(k), f, f))},
        name='S^{}'.format(n) if n != 1 else 'S',
    )


def diagonal(basis, rule, **kwargs):
    return DiagonalFunction(basis, rule, **kwargs)


def resolvent_diag(dsq, lam, s=0.0, t=0.0, eps_spec=EPS_SPEC):
    """``R_{s,t}(lam) = (lam - (t + s**2 + D**2))**-1`` for diagonal ``D**2``.

    :param dsq: (DiagonalFunction) the diagonal ``D**2``
    :param lam: (complex) spectral parameter
    :raises SpectrumProximityError: when ``lam`` comes within ``eps_spec``
        of ``t + s**2 + d_k**2`` at an evaluated point
    """
    shift_ = t + s * s
    if (dsq.lower_bound is not None and abs(lam.imag) < eps_spec
            and abs(lam.real - shift_ - dsq.lower_bound) < eps_spec):
        raise SpectrumProximityError(
            "Expected lambda at least {} away from the spectrum, but "
            "lambda = {} touches its lower edge".format(eps_spec, lam)
        )

    def rule(vals):
        gap = lam - (shift_ + vals)
        if np.any(np.abs(gap) < eps_spec):
            raise SpectrumProximityError(
                "Expected lambda at least {} away from the spectrum, but "
                "lambda = {} is closer".format(eps_spec, lam)
            )
        return 1.0 / gap
    return dsq.apply(rule, growth_order=-dsq.growth_order,
                     name='R({:g})'.format(lam))


def finite_section(a, radius):
    """Materialize the compression of ``A`` to the window of radius
    ``radius`` as a dense matrix indexed by ``(k, fiber component)``.

    :param a: (BandOperator)
    :param radius: (int) window radius, at least the half bandwidth
    :return: (numpy.ndarray) complex square matrix
    """
    if radius < a.half_bandwidth:
        raise NcgiValueError(
            "Expected a window radius of at least {}, but got {}".format(
                a.half_bandwidth, radius
            )
        )
    points = np.arange(-radius, radius + 1, dtype=np.int64)
    k = points[a.basis.valid(points)]
    n, f = len(k), a.fiber
    lo = k[0]
    out = np.zeros((n, f, n, f), dtype=complex)
    for d in a.offsets:
        rows = k + d
        inside = (rows >= lo) & (rows <= k[-1])
        cols = np.nonzero(inside)[0]
        out[cols + d, :, cols, :] = a.band(d, k[inside])
    return out.reshape(n * f, n * f)


def _fsum(values):
    values = np.asarray(values, dtype=complex).ravel()
    return complex(math.fsum(values.real), math.fsum(values.imag))


def diagonal_terms(a, k):
    """The fiber-traced diagonal ``sum_f e(k, k)_ff`` at points ``k``."""
    return np.trace(a.band(0, k), axis1=1, axis2=2)


def _shell_sum(a, points):
    return _fsum([_fsum(diagonal_terms(a, chunk))
                  for chunk in chunked(points, CHUNK_SIZE)])


def _shell_scan(a, points, rho):
    """Sum of the diagonal over a shell, the sum of its moduli and the
    constant ``C = max |tr e(k, k)| |k|**-rho`` over the shell."""
    total, size, constant = 0j, 0.0, 0.0
    for chunk in chunked(points, CHUNK_SIZE):
        terms = diagonal_terms(a, chunk)
        modulus = np.abs(terms)
        total += _fsum(terms)
        size += math.fsum(modulus)
        live = chunk != 0
        if live.any():
            scaled = modulus[live] * np.abs(chunk[live]).astype(float) ** -rho
            constant = max(constant, float(scaled.max()))
    return total, size, constant


def _coherent_tail(a, edge, rho):
    """Estimate and bound of ``sum_{|k| > |edge|}`` on the side of ``edge``.

    ``C(k) = tr e(k, k) |k|**-rho`` is measured at ``edge / 2`` and
    ``edge``; beyond the edge it is assumed to move no further than it did
    across the last shell. The tail is ``C`` times the midpoint integral of
    ``|k|**rho``.

    :return: (tuple) estimate, bound; None if ``C`` changes phase
    """
    radius = abs(edge)
    if radius < 2:
        return None
    near, far = diagonal_terms(a, [int(math.copysign(radius // 2, edge)), edge])
    c1 = near * float(radius // 2) ** -rho
    c2 = far * float(radius) ** -rho
    if (c1 * np.conj(c2)).real <= 0:
        return None
    spread = c2 - c1
    integral = (radius + 0.5) ** (rho + 1) / (-rho - 1)
    estimate = (c2 + spread / 2.0) * integral
    bound = TAIL_SAFETY * (abs(spread) / 2.0 * integral + abs(rho * c2) * radius ** (rho - 1))
    return estimate, bound


def _envelope_tail(envelope, radius, sides):
    tail, _ = quad(envelope, radius, np.inf)
    return sides * tail


def trace(a, tol=1e-10, envelope=None, growth_order=None, start=64,
          budget=1 << 22):
    """Certified trace ``sum_k tr e(k, k)``.

    The diagonal is summed over doubling windows. Without an envelope, the
    tail beyond a window of radius ``R`` is bounded by integral comparison
    with ``C |k|**rho``, ``rho`` being the declared growth order and ``C``
    the largest ``|tr e(k, k)| |k|**-rho`` on the last shell::

        TAIL_SAFETY * sides * C * R**(rho + 1) / (-rho - 1)

    When the last shell sums coherently (no sign cancellation) and ``C(k)``
    keeps its phase, the tail is instead estimated from the measured
    ``C(k)`` and added to the value, and the bound is the spread of ``C``
    times the same integral, whichever bound is smaller. With an envelope
    (a decreasing bound on ``|tr e(k, k)|`` as a function of ``|k|``), the
    tail bound is its integral.

    :param a: (BandOperator)
    :param tol: (float) required tail bound
    :param envelope: callable or None
    :param growth_order: (float) overrides ``a.growth_order`` as the
        summability hint, e.g. a measured order
    :param start: (int) first window radius
    :param budget: (int) largest window radius
    :return: (TraceResult)
    """
    basis = a.basis
    if 0 not in a.offsets:
        return TraceResult(0j, 0.0, 0)
    if a.support is not None:
        lo, hi = a.support
        points = np.arange(lo, hi + 1, dtype=np.int64)
        points = points[basis.valid(points)]
        return TraceResult(_shell_sum(a, points), 0.0, len(points))

    declared = a.growth_order if growth_order is None else growth_order
    if declared >= -1 and envelope is None:
        raise NonSummableError(
            "Expected a diagonal growth order below -1 or an envelope, but "
            "{} has growth order {}".format(a.name, declared)
        )
    # measured orders are -inf for terms that vanish past the window
    rho = max(declared, FINITE_ORDER)
    sides = 2 if basis.kind == 'full' else 1
    edges = [1, -1] if sides == 2 else [1]
    total = 0j
    terms = 0
    for radius, points in doubling_shells(basis.kind, start, budget):
        if envelope is not None:
            total += _shell_sum(a, points)
            terms += len(points)
            bound = _envelope_tail(envelope, radius, sides)
            logger.debug('trace %s: radius %d, envelope tail %g', a.name, radius, bound)
            if bound <= tol:
                return TraceResult(total, bound, terms)
            continue
        shell_total, shell_size, constant = _shell_scan(a, points, rho)
        total += shell_total
        terms += len(points)
        value = total
        bound = TAIL_SAFETY * sides * constant * radius ** (rho + 1) / (-rho - 1)
        if shell_size > 0 and abs(shell_total) >= COHERENT * shell_size:
            tails = [_coherent_tail(a, e * radius, rho) for e in edges]
            if all(tail is not None for tail in tails):
                coherent = sum(tail[1] for tail in tails)
                if coherent < bound:
                    value = total + sum(tail[0] for tail in tails)
                    bound = coherent
        logger.debug('trace %s: radius %d, tail bound %g', a.name, radius, bound)
        if bound <= tol:
            return TraceResult(value, bound, terms)
    raise ToleranceNotReachedError(
        "Expected the trace of {} to reach tolerance {} within radius {}, "
        "but it did not".format(a.name, tol, budget)
    )
