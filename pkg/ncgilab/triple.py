"""Concrete spectral-triple models.

A model bundles a lattice basis, Dirac data, a few named algebra
generators, an optional grading, and the bookkeeping numbers that the
index formulas depend on: the spectral dimension ``q``, the parity ``P``
(1 for odd models), ``N = floor((q + 1 + P) / 2)`` and ``M = 2N - P``.

Dirac data always carry ``D**2`` as an explicit diagonal function, which
is all the resolvent and pseudodifferential machinery ever needs, and,
when the eigenvalues of ``D**2`` follow a power law on the lattice, a
:class:`ncgilab.lattice.LatticeSymbol` that lets lattice sums be
continued analytically.

Catalogue names: ``circle``, ``circle-shifted``, ``oscillator``,
``power:<p>`` and ``double:<model>:<mu>``.
"""
import collections
import logging
import math

import numpy as np
from cached_property import cached_property
from scipy.optimize import least_squares

from ncgilab.bandop import (
    BandOperator,
    BasisIndexSet,
    DiagonalFunction,
    compose,
    diagonal_terms,
    entrywise_scaled,
    graded_commutator,
    identity,
    shift,
    trace,
)
from ncgilab.exceptions import (
    ConvergenceError,
    NcgiValueError,
    PreconditionError,
    ToleranceNotReachedError,
)
from ncgilab.iteration import probe_points
from ncgilab.lattice import LatticeSymbol, lattice_sum


logger = logging.getLogger(__name__)

DiracData = collections.namedtuple('DiracData', 'dirac square symbol')
DiracData.__doc__ = """A Dirac-type operator (degree 1), its square as a
DiagonalFunction, and the LatticeSymbol of the square (or None)."""

PhaseModule = collections.namedtuple('PhaseModule', 'F squares_to_one source')

SpectralDimensionEstimate = collections.namedtuple(
    'SpectralDimensionEstimate', 'value residual samples'
)

InvariantCheck = collections.namedtuple('InvariantCheck', 'name residual passed')

DIMENSION_FIT_THRESHOLD = 1e-3


def regraded(a, degree):
    """The same operator carrying another grading degree."""
    return entrywise_scaled(a, lambda d, k: 1.0, degree=degree)


class SpectralTripleModel(object):
    """A concrete spectral triple on a lattice basis.

    :param name: (str) catalogue name
    :param basis: (BasisIndexSet)
    :param dirac: (DiracData)
    :param generators: (OrderedDict) name -> BandOperator
    :param grading: (DiagonalFunction) values +-1, or None for odd models
    :param q: (float) spectral dimension
    :param parity: (int) P, 1 for odd and 0 for even models
    """

    def __init__(self, name, basis, dirac, generators, grading, q, parity,
                 unitary_rule=None):
        self.name = name
        self.basis = basis
        self.dirac = dirac
        self.generators = collections.OrderedDict(generators)
        self.grading = grading
        self.q = float(q)
        self.parity = parity
        self._unitary_rule = unitary_rule

    def __repr__(self):
        return '<SpectralTripleModel {} q={:g} P={}>'.format(self.name, self.q, self.parity)

    @property
    def D(self):
        return self.dirac.dirac

    @property
    def Dsq(self):
        return self.dirac.square

    @cached_property
    def anti_parity(self):
        return 1 - self.parity

    @cached_property
    def N(self):
        return int(math.floor((self.q + 1 + self.parity) / 2.0))

    @cached_property
    def M(self):
        return 2 * self.N - self.parity

    @cached_property
    def spectral_gap(self):
        return float(self.Dsq.lower_bound or 0.0)

    @cached_property
    def identity(self):
        return identity(self.basis)

    @cached_property
    def gamma(self):
        """The grading, or the identity for odd models."""
        return self.grading if self.grading is not None else self.identity

    def unitary(self, n):
        """The unitary word ``u**n`` of the model (``u* ** |n|`` for negative
        ``n``, the identity for 0)."""
        if self._unitary_rule is None:
            raise PreconditionError(
                "Expected a model with a unitary generator, but {} has none".format(self.name)
            )
        return self._unitary_rule(n)

    def with_dirac(self, dirac, name=None):
        """The same algebra and grading with other Dirac data."""
        return SpectralTripleModel(
            name or self.name, self.basis, dirac, self.generators, self.grading,
            self.q, self.parity, self._unitary_rule,
        )

    def one_plus_square_symbol(self):
        symbol = self.dirac.symbol
        if symbol is None:
            return None
        return LatticeSymbol(symbol.shift, symbol.beta,
                             tuple(np.asarray(symbol.constants) + 1.0))


def _diagonal_dirac(basis, values, square, growth, lower_bound, symbol):
    dirac = DiagonalFunction(basis, values, growth_order=growth, degree=1, name='D')
    sq = DiagonalFunction(basis, square, growth_order=2 * growth, name='D^2',
                          lower_bound=lower_bound)
    return DiracData(dirac, sq, symbol)


def _lattice_unitary(basis):
    def rule(n):
        if n == 0:
            return identity(basis)
        u = shift(basis, n)
        u.name = 'u^{}'.format(n) if n > 0 else 'u*^{}'.format(-n)
        return u
    return rule


def _circle_generators(basis):
    u = shift(basis, 1)
    u.name = 'u'
    v = shift(basis, -1)
    v.name = 'u*'
    return [('u', u), ('u*', v)]


def make_circle_triple(shifted=False):
    """The circle: ``D = diag(k)``, or ``diag(k + 1/2)`` when shifted."""
    basis = BasisIndexSet('full')
    offset = 0.5 if shifted else 0.0
    dirac = _diagonal_dirac(
        basis,
        lambda k: k + offset,
        lambda k: (k + offset) ** 2,
        1.0,
        offset ** 2,
        LatticeSymbol(offset, 2.0, (0.0,)),
    )
    return SpectralTripleModel(
        'circle-shifted' if shifted else 'circle', basis, dirac,
        _circle_generators(basis), None, 1.0, 1, _lattice_unitary(basis),
    )


def make_power_triple(p):
    """``d_k = sign(k + 1/2) |k + 1/2| ** (1/p)`` with spectral dimension ``p``."""
    if p < 1:
        raise NcgiValueError("Expected p >= 1, but got {}".format(p))
    basis = BasisIndexSet('full')
    dirac = _diagonal_dirac(
        basis,
        lambda k: np.sign(k + 0.5) * np.abs(k + 0.5) ** (1.0 / p),
        lambda k: np.abs(k + 0.5) ** (2.0 / p),
        1.0 / p,
        0.5 ** (2.0 / p),
        LatticeSymbol(0.5, 2.0 / p, (0.0,)),
    )
    return SpectralTripleModel(
        'power:{:g}'.format(p), basis, dirac, _circle_generators(basis),
        None, p, 1, _lattice_unitary(basis),
    )


def make_oscillator_triple():
    """Even model on the half lattice with two fiber components.

    ``D`` raises from the odd to the even component with weight
    ``sqrt(k + 1)``, so ``D**2 = diag(k, k + 1)``; the grading is
    ``diag(1, -1)``. Generators: the rank-one ground projection ``p0`` on
    the even component and the isometry ``v`` with its adjoint.
    """
    basis = BasisIndexSet('half', 2)

    def up(k):
        out = np.zeros((len(k), 2, 2))
        out[:, 0, 1] = np.sqrt(k + 1.0)
        return out

    def down(k):
        out = np.zeros((len(k), 2, 2))
        out[:, 1, 0] = np.sqrt(k.astype(float))
        return out

    D = BandOperator(basis, {1: up, -1: down}, growth_order=0.5, degree=1, name='D')
    square = DiagonalFunction(basis, lambda k: np.stack([k, k + 1.0], axis=1),
                              growth_order=1.0, name='D^2', lower_bound=0.0)
    dirac = DiracData(D, square, LatticeSymbol(0.0, 1.0, (0.0, 1.0)))
    gamma = DiagonalFunction(basis, lambda k: np.tile([1.0, -1.0], (len(k), 1)),
                             name='gamma')
    p0 = DiagonalFunction(basis, lambda k: np.tile([1.0, 0.0], (len(k), 1)),
                          support=(0, 0), name='p0')
    v = shift(basis, 1)
    v.name = 'v'
    vs = shift(basis, -1)
    vs.name = 'v*'
    return SpectralTripleModel(
        'oscillator', basis, dirac, [('p0', p0), ('v', v), ('v*', vs)],
        gamma, 2.0, 0,
    )


def block_embed(grid, degree=0, name=None):
    """Assemble a 2 x 2 grid of operators (``None`` for zero blocks) on a
    fiber-``f`` basis into one operator on the fiber-``2f`` basis."""
    ops = [op for row in grid for op in row if op is not None]
    basis = ops[0].basis
    f = basis.fiber
    offsets = sorted({d for op in ops for d in op.offsets})

    def rule(d):
        def evaluate(k):
            out = np.zeros((len(k), 2 * f, 2 * f), dtype=complex)
            for i, row in enumerate(grid):
                for j, op in enumerate(row):
                    if op is not None:
                        out[:, i * f:(i + 1) * f, j * f:(j + 1) * f] = op.band(d, k)
            return out
        return evaluate

    return BandOperator(
        basis.doubled(), {d: rule(d) for d in offsets},
        growth_order=max(op.growth_order for op in ops), degree=degree,
        name=name or 'diag({})'.format(','.join(op.name for op in ops)),
    )


def _diagonal_embed(first, second, **kwargs):
    return DiagonalFunction(
        first.basis.doubled(),
        lambda k: np.concatenate((first.values(k), second.values(k)), axis=1),
        **kwargs
    )


def double(model, mu):
    """The double: per mode ``D_mu = ((D, mu), (mu, -D))``, representation
    ``a -> diag(a, 0)``, unitaries ``u -> diag(u, 1)`` and grading
    ``diag(gamma, -gamma)``. ``D_mu**2 = (D**2 + mu**2) (+) (D**2 + mu**2)``."""
    if mu == 0:
        raise NcgiValueError("Expected a nonzero doubling parameter, but got mu = 0")
    mu = float(mu)
    base = model.identity
    D = model.D
    D_mu = block_embed([[D, mu * base], [mu * base, -D]], degree=1, name='D_mu')
    shifted_square = model.Dsq.apply(lambda x: x + mu * mu,
                                     lower_bound=model.spectral_gap + mu * mu)
    square = _diagonal_embed(shifted_square, shifted_square, growth_order=model.Dsq.growth_order,
                             name='D_mu^2', lower_bound=model.spectral_gap + mu * mu)
    symbol = model.dirac.symbol
    if symbol is not None:
        constants = np.asarray(symbol.constants) + mu * mu
        symbol = LatticeSymbol(symbol.shift, symbol.beta, tuple(np.tile(constants, 2)))
    grading = None
    if model.grading is not None:
        grading = _diagonal_embed(model.grading, model.grading.apply(lambda x: -x),
                                  name='gamma_mu')
    generators = [(name, block_embed([[a, None], [None, None]], name='diag({},0)'.format(name)))
                  for name, a in model.generators.items()]

    unitary_rule = None
    if model._unitary_rule is not None:
        def unitary_rule(n):
            return block_embed([[model.unitary(n), None], [None, base]],
                               name='diag(u^{},1)'.format(n))
    return SpectralTripleModel(
        'double:{}:{:g}'.format(model.name, mu), model.basis.doubled(),
        DiracData(D_mu, square, symbol), generators, grading,
        model.q, model.parity, unitary_rule,
    )


def get_model(name):
    """Look a model up by catalogue name."""
    if name == 'circle':
        return make_circle_triple(False)
    if name == 'circle-shifted':
        return make_circle_triple(True)
    if name == 'oscillator':
        return make_oscillator_triple()
    if name.startswith('power:'):
        return make_power_triple(_parse_float(name[len('power:'):], name))
    if name.startswith('double:'):
        base, _, mu = name[len('double:'):].rpartition(':')
        return double(get_model(base), _parse_float(mu, name))
    raise NcgiValueError("Expected a catalogue model name, but got {!r}".format(name))


def _parse_float(text, name):
    try:
        return float(text)
    except ValueError:
        raise NcgiValueError(
            "Expected a number in model name {!r}, but got {!r}".format(name, text)
        )


def phase(model, bounded_transform=False):
    """``F = D |D|**-1`` (needs a spectral gap) or ``F = D (1 + D**2)**-1/2``.

    For a diagonal Dirac operator ``D |D|**-1`` is the sign of its
    eigenvalues, taken exactly so that ``[F, a]`` keeps the band support
    of ``a`` without rounding residue.
    """
    if bounded_transform:
        weight = model.Dsq.apply(lambda x: (1.0 + x) ** -0.5, growth_order=-model.D.growth_order)
        source = 'D(1+D^2)^(-1/2)'
    else:
        if model.spectral_gap <= 0:
            raise PreconditionError(
                "Expected an invertible Dirac operator for D|D|^-1, but {} "
                "has no spectral gap".format(model.name)
            )
        source = 'D|D|^(-1)'
        if isinstance(model.D, DiagonalFunction):
            F = model.D.apply(lambda x: np.sign(x.real), growth_order=0.0, name='F')
            F.degree = model.D.degree
            return PhaseModule(F, True, source)
        weight = model.Dsq.apply(lambda x: x ** -0.5, growth_order=-model.D.growth_order)
    F = model.D @ weight
    F.growth_order = 0.0
    F.name = 'F'
    return PhaseModule(F, not bounded_transform, source)


def phase_dirac(model):
    """Dirac data of ``F = D |D|**-1``, whose square is the identity."""
    F = phase(model).F
    one = DiagonalFunction(model.basis, lambda k: np.ones(len(k)), name='1',
                           lower_bound=1.0)
    columns = model.basis.fiber
    return DiracData(F, one, LatticeSymbol(0.0, 0.0, (1.0,) * columns))


def deformed_dirac(model, u):
    """``D_u = D |D|**-u`` as Dirac data, with ``dD_u/du = -D_u log|D|``."""
    if model.spectral_gap <= 0:
        raise PreconditionError(
            "Expected an invertible Dirac operator for D|D|^-u, but {} has "
            "no spectral gap".format(model.name)
        )
    D_u = model.D @ model.Dsq.apply(lambda x: x ** (-u / 2.0))
    D_u.growth_order = model.D.growth_order * (1 - u)
    D_u.name = 'D_u'
    square = model.Dsq.apply(lambda x: x ** (1.0 - u),
                             growth_order=model.Dsq.growth_order * (1 - u),
                             lower_bound=model.spectral_gap ** (1.0 - u))
    symbol = model.dirac.symbol
    if symbol is not None and np.all(np.asarray(symbol.constants) == 0):
        symbol = LatticeSymbol(symbol.shift, symbol.beta * (1.0 - u), symbol.constants)
    else:
        symbol = None
    dot = -1.0 * (D_u @ model.Dsq.apply(lambda x: 0.5 * np.log(x), growth_order=0.0))
    dot.name = 'dD_u'
    return DiracData(D_u, square, symbol), dot


def positive_projection(model):
    """Spectral projection ``Q`` of ``D`` onto ``[0, inf)``:
    ``Q = (1 + D |D|^+) / 2 + (kernel projection) / 2``."""
    pinv = model.Dsq.apply(lambda x: np.where(x > 0, np.abs(x) ** -0.5, 0.0))
    kernel = model.Dsq.apply(lambda x: np.where(x == 0, 1.0, 0.0))
    sign = regraded(model.D @ pinv, 0)
    Q = 0.5 * (model.identity + sign) + 0.5 * kernel
    Q.growth_order = 0.0
    Q.name = 'Q'
    return Q


def _zeta_of_dirac(model, s):
    symbol = model.one_plus_square_symbol()
    if symbol is None:
        raise PreconditionError(
            "Expected Dirac data with a lattice symbol, but {} has none".format(model.name)
        )
    columns = model.basis.fiber
    result = lattice_sum(lambda k: np.ones((len(k), columns)), symbol, s / 2.0,
                         kind=model.basis.kind)
    return result.value.real


def estimate_spectral_dimension(model, samples=8):
    """Fit ``c / (s - q) + a0 + a1 x + a2 x**2`` to ``trace((1 + D**2)**(-s/2))``
    at ``s = q + 2**-j``, ``j = 1..samples``, and return the fitted ``q``.

    :raises ConvergenceError: if the relative fit residual exceeds the
        threshold
    """
    s = model.q + 2.0 ** -np.arange(1, samples + 1)
    values = np.array([_zeta_of_dirac(model, si) for si in s])
    x = s - s[-1]
    q0 = (values[-1] * s[-1] - values[-2] * s[-2]) / (values[-1] - values[-2])

    def residuals(params):
        c, q, a0, a1, a2 = params
        return (c / (s - q) + a0 + a1 * x + a2 * x ** 2 - values) / values

    c0 = values[-1] * (s[-1] - q0)
    fit = least_squares(residuals, [c0, q0, 0.0, 0.0, 0.0], method='lm')
    residual = float(np.sqrt(np.mean(fit.fun ** 2)))
    logger.info('spectral dimension of %s: %.6f (residual %g)', model.name, fit.x[1], residual)
    if residual > DIMENSION_FIT_THRESHOLD:
        raise ConvergenceError(
            "Expected a spectral-dimension fit residual below {}, but got {}".format(
                DIMENSION_FIT_THRESHOLD, residual
            )
        )
    return SpectralDimensionEstimate(float(fit.x[1]), residual, list(zip(s, values)))


def divergent_trend(model, s, start=256, doublings=3):
    """True if the partial sums of ``trace((1 + D**2)**(-s/2))`` grow by
    non-shrinking increments over doubling windows."""
    weight = model.Dsq.apply(lambda x: (1.0 + x) ** (-s / 2.0))
    sums = []
    for j in range(doublings + 2):
        radius = start * 2 ** j
        k = np.arange(-radius if model.basis.kind == 'full' else 0, radius + 1)
        sums.append(diagonal_terms(weight, k).real.sum())
    increments = np.diff(sums)
    return bool(np.all(increments[1:] / increments[:-1] >= 1.0))


def _bounded_on_probes(op, radius=1 << 10):
    sups = []
    for r in (radius, 2 * radius):
        k = probe_points(op.basis.kind, r)
        sups.append(max((np.abs(op.band(d, k)).max() for d in op.offsets), default=0.0))
    return sups[1] <= 1.01 * sups[0] + 1e-12, sups[1]


def _finite_trace_check(model, order):
    """``trace((1 + D**2)**(-(q + 1/2)/2))`` is finite: its diagonal stays
    below ``C (1 + |k|)**order`` with a stable ``C``, and the sum with
    that envelope converges."""
    weight = model.Dsq.apply(lambda x: (1.0 + x) ** (-(model.q + 0.5) / 2.0),
                             growth_order=order)
    rescaled = DiagonalFunction(
        model.basis, lambda k: weight.values(k).real * (1.0 + np.abs(k))[:, None] ** -order)
    bounded, scale = _bounded_on_probes(rescaled)
    name = 'trace((1+D^2)^(-(q+1/2)/2)) finite'
    if not bounded:
        return InvariantCheck(name, scale, False)
    fiber = model.basis.fiber
    try:
        result = trace(weight, tol=1.0, envelope=lambda x: fiber * scale * x ** order)
    except ToleranceNotReachedError:
        return InvariantCheck(name, float('inf'), False)
    return InvariantCheck(name, result.tail_bound, True)


def check_invariants(model):
    """Numerically check the declared invariants of a model.

    :return: (list) of InvariantCheck
    """
    checks = []
    k = probe_points(model.basis.kind, 1 << 10)
    if model.grading is not None:
        g = model.grading
        square = compose(g, g) - model.identity
        checks.append(_residual_check('gamma^2 = 1', square, k, 1e-14))
        anti = compose(g, model.D) + compose(model.D, g)
        checks.append(_residual_check('gamma D + D gamma = 0', anti, k, 1e-14))
        for name, a in model.generators.items():
            checks.append(_residual_check(
                '[gamma, {}] = 0'.format(name), graded_commutator(g, a), k, 1e-14))
    for name, a in model.generators.items():
        bounded, sup = _bounded_on_probes(graded_commutator(model.D, a))
        checks.append(InvariantCheck('[D, {}] bounded'.format(name), sup, bounded))

    order = -(model.q + 0.5) / model.q
    checks.append(_finite_trace_check(model, order))
    checks.append(InvariantCheck('trace((1+D^2)^(-(q-1/4)/2)) divergent',
                                 0.0, divergent_trend(model, model.q - 0.25)))
    checks.append(InvariantCheck(
        'M of parity P in q + 1', 0.0,
        model.M % 2 == model.parity and model.q + 1 - 2 < model.M <= model.q + 1))
    return checks


def _residual_check(name, op, k, tol):
    residual = max((np.abs(op.band(d, k)).max() for d in op.offsets), default=0.0)
    return InvariantCheck(name, float(residual), residual <= tol)
