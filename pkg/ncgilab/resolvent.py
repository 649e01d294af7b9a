"""Resolvent expectations and the cochains built from them.

An expectation

    <A_0, ..., A_m>_{m,s,r,t} = tau(gamma (1 / 2 pi i) int_l lam**-p A_0 R A_1 R ... A_m R dlam),

with ``p = q/2 + r`` and ``R = (lam - (t + s**2 + D**2))**-1``, is expanded
over lattice modes. Following a basis vector ``e_k`` backwards through the
product, every band offset pattern ``(d_0, ..., d_m)`` with ``sum d = 0``
and every fiber path contributes

    coefficient(k) * g[w_0, ..., w_m],    g(x) = x**-p,

where ``w_j`` are the eigenvalues of ``t + s**2 + D**2`` at the visited
states. The divided difference is the Cauchy formula applied to the
contour integral; ``s``-moments ``int s**alpha (...) ds`` are exact Beta
integrals of the same divided differences. The 'quadrature' method
evaluates both integrals numerically instead.

Mode sums are either certified traces of the per-mode values
(``continued=False``), or a direct head plus tails continued through the
lattice engine at Hermite-Genocchi simplex nodes (``continued=True``),
which is how cochains are evaluated left of their half-plane of
convergence.
"""
import cmath
import collections
import itertools
import logging
import math

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import rgamma

from ncgilab.bandop import DiagonalFunction, compose, graded_commutator, trace
from ncgilab.cyclic import B_coboundary, Cochain, b_coboundary
from ncgilab.exceptions import (
    ContinuationError,
    ConvergenceError,
    NcgiValueError,
    PreconditionError,
    SpectrumProximityError,
)
from ncgilab.iteration import chunked, window
from ncgilab.lattice import LatticeSymbol, lattice_sum, start_radius
from ncgilab.pdo import estimate_order, nabla
from ncgilab.quadrature import (
    contour_integral,
    power_divided_difference,
    rising,
    s_integral,
    simplex_rule,
)
from ncgilab.triple import deformed_dirac, phase_dirac


logger = logging.getLogger(__name__)

SQRT_2I = cmath.sqrt(2j)
METHODS = ('residues', 'quadrature')
EPS_SPEC = 1e-9
CHUNK_SIZE = 1 << 14

Expectation = collections.namedtuple('Expectation', 'value error modes')
Residual = collections.namedtuple('Residual', 'name residual lhs rhs')
Endpoint = collections.namedtuple('Endpoint', 'closed_form quadrature relative_difference trace')
DtLaw = collections.namedtuple('DtLaw', 'residual defects order')


class ContourSpec(collections.namedtuple(
        'ContourSpec', 'abscissa method epsabs epsrel limit tol head simplex_order')):
    """Contour and summation settings.

    :param abscissa: (float) ``a`` of the line ``l = a + iR``, ``0 < a < 1/2``
    :param method: (str) 'residues' or 'quadrature'
    :param epsabs, epsrel, limit: adaptive quadrature settings
    :param tol: (float) tail tolerance of mode sums
    :param head: (int) minimal head radius of continued mode sums
    :param simplex_order: (int) Gauss points per simplex axis
    """
    __slots__ = ()

    def __new__(cls, abscissa=0.25, method='residues', epsabs=1e-12, epsrel=1e-10,
                limit=200, tol=1e-10, head=256, simplex_order=6):
        if not 0 < abscissa < 0.5:
            raise NcgiValueError(
                "Expected a contour abscissa in (0, 1/2), but got {}".format(abscissa)
            )
        if method not in METHODS:
            raise NcgiValueError(
                "Expected a method in {}, but got {!r}".format(METHODS, method)
            )
        if min(epsabs, epsrel, tol) <= 0:
            raise NcgiValueError("Expected positive tolerances")
        return super(ContourSpec, cls).__new__(
            cls, abscissa, method, epsabs, epsrel, limit, tol, head, simplex_order
        )

    def deformed(self, gap):
        """The abscissa ``min(a, gap / 8)`` used once ``t < 1``."""
        return self._replace(abscissa=min(self.abscissa, gap / 8.0))

    def refined(self, factor=0.5):
        return self._replace(epsabs=self.epsabs * factor, epsrel=self.epsrel * factor,
                             tol=self.tol * factor)


class ExpectationRequest(collections.namedtuple(
        'ExpectationRequest',
        'operators s r t alpha graded double_bracket dirac continued spec')):
    """One ``<...>`` or ``<<...>>`` evaluation.

    ``alpha=None`` evaluates at the given ``s``; otherwise the result is
    ``int_0^inf s**alpha <...> ds``. ``dirac`` replaces the model's Dirac
    data (e.g. ``D_u`` or ``F``).
    """
    __slots__ = ()

    def __new__(cls, operators, s=0.0, r=2.0, t=1.0, alpha=None, graded=True,
                double_bracket=False, dirac=None, continued=False, spec=None):
        if not 0 <= t <= 1:
            raise NcgiValueError("Expected t in [0, 1], but got {}".format(t))
        if s < 0:
            raise NcgiValueError("Expected s >= 0, but got {}".format(s))
        return super(ExpectationRequest, cls).__new__(
            cls, tuple(operators), float(s), complex(r), float(t), alpha, graded,
            double_bracket, dirac, continued, spec or ContourSpec(),
        )

    @property
    def m(self):
        return len(self.operators) - 1


_Kernel = collections.namedtuple('_Kernel', 'kind p nu m alpha base scale_dd scale_hg')


def _gamma_pole(z):
    z = complex(z)
    return abs(z.imag) < 1e-12 and z.real < 0.5 and abs(z.real - round(z.real)) < 1e-12


def _kernel(kind, p, m, s=0.0, t=1.0, alpha=None, parity=0):
    """Per-mode kernel: the divided difference exponent ``nu``, the constant
    added to ``D**2``, and prefactors in divided-difference and simplex form."""
    if kind == 'fixed':
        return _Kernel(kind, p, p, m, None, t + s * s, 1.0, (-1) ** m * rising(p, m))
    if kind == 'moment':
        half = (alpha + 1) / 2.0
        sigma = p - half
        if _gamma_pole(sigma + m):
            raise ContinuationError(
                "Expected the s-moment away from its poles, but sigma + m = {}".format(sigma + m)
            )
        common = 0.5 * gamma_fn(half) * rgamma(p)
        scale_dd = None if _gamma_pole(sigma) else common * gamma_fn(sigma)
        return _Kernel(kind, p, sigma, m, alpha, t, scale_dd,
                       common * (-1) ** m * gamma_fn(sigma + m))
    if kind == 'reduced':
        sigma = p - (m + 1) / 2.0
        if _gamma_pole(sigma + m):
            raise ContinuationError(
                "Expected the reduced cocycle away from its poles, but got {}".format(sigma + m)
            )
        common = (-SQRT_2I) ** parity * math.sqrt(math.pi) * rgamma(p)
        scale_dd = None if _gamma_pole(sigma) else common * gamma_fn(sigma)
        return _Kernel(kind, p, sigma, m, None, 1.0, scale_dd,
                       common * (-1) ** m * gamma_fn(sigma + m))
    raise NcgiValueError("Expected a kernel kind, but got {!r}".format(kind))


def _state_shifts(offsets):
    """``e_j`` with states ``x_j = k + e_j``: ``e_m = 0``, ``e_{j-1} = e_j + d_j``."""
    e = [0] * len(offsets)
    for j in range(len(offsets) - 1, 0, -1):
        e[j - 1] = e[j] + offsets[j]
    return tuple(e)


def _fiber_paths(g, blocks, fiber):
    """Fiber paths ``(phi_0, ..., phi_m)`` with nonzero coefficient
    ``gamma[phi_m] A_0[phi_m, phi_0] A_1[phi_0, phi_1] ... A_m[phi_{m-1}, phi_m]``,
    pruned depth first."""
    m = len(blocks) - 1
    for last in range(fiber):
        start = g[:, last]
        if not start.any():
            continue
        stack = [((), last, start)]
        while stack:
            fibers, row, coef = stack.pop()
            j = len(fibers)
            if j == m:
                closed = coef * blocks[m][:, row, last]
                if closed.any():
                    yield fibers + (last,), closed
                continue
            for col in range(fiber - 1, -1, -1):
                c = coef * blocks[j][:, row, col]
                if c.any():
                    stack.append((fibers + (col,), col, c))


class _ModeExpansion(object):
    """The per-mode values of one expectation."""

    def __init__(self, model, dirac, ops, kernel, spec, graded):
        self.model = model
        self.dirac = dirac
        self.ops = ops
        self.kernel = kernel
        self.spec = spec
        self.gamma = model.gamma if graded else model.identity
        self.patterns = [(offsets, _state_shifts(offsets))
                         for offsets in itertools.product(*[op.offsets for op in ops])
                         if sum(offsets) == 0]
        m = len(ops) - 1
        order = spec.simplex_order if m <= 2 else min(spec.simplex_order, 4)
        self.nodes, self.weights = simplex_rule(m, order)
        self.error = 0.0

    @property
    def growth_order(self):
        """Decay order of the per-mode values in the lattice index."""
        coefficient = sum(op.growth_order for op in self.ops)
        nu = complex(self.kernel.nu).real
        return coefficient - self.dirac.square.growth_order * (nu + self.kernel.m)

    def _evaluate(self, points):
        kernel = self.kernel
        if self.spec.method == 'residues':
            if kernel.scale_dd is not None:
                return kernel.scale_dd * power_divided_difference(points, kernel.nu)
            combos = points @ self.nodes.T
            return kernel.scale_hg * (np.exp(-(kernel.nu + kernel.m) * np.log(combos)) @ self.weights)
        if np.min(points.real) - self.spec.abscissa <= EPS_SPEC:
            raise SpectrumProximityError(
                "Expected the contour abscissa {} left of the spectrum, but it reaches {}".format(
                    self.spec.abscissa, np.min(points.real)
                )
            )
        quad = dict(abscissa=self.spec.abscissa, epsabs=self.spec.epsabs,
                    epsrel=self.spec.epsrel, limit=self.spec.limit)
        if kernel.kind == 'fixed':
            values, err = contour_integral(points, kernel.p, **quad)
        elif kernel.kind == 'moment':
            values, err = s_integral(
                lambda s: contour_integral(points + s * s, kernel.p, **quad)[0],
                kernel.alpha, self.spec.epsabs, self.spec.epsrel, self.spec.limit,
            )
            values = np.atleast_1d(values)
        else:
            if kernel.scale_dd is None:
                raise ConvergenceError(
                    "Expected a finite reduced-cocycle prefactor, but Gamma has a pole"
                )
            values, err = contour_integral(points, kernel.nu, **quad)
            values = kernel.scale_dd * values
            err = abs(kernel.scale_dd) * err
        self.error += float(err)
        return values

    def values(self, k):
        """Per-mode values at lattice points ``k``, shape ``(n,)``."""
        k = np.asarray(k, dtype=np.int64)
        total = np.zeros(len(k), dtype=complex)
        g = self.gamma.values(k)
        square = self.dirac.square
        for offsets, shifts in self.patterns:
            blocks = [op.band(d, k + e) for op, d, e in zip(self.ops, offsets, shifts)]
            squares = [square.values(k + e).real for e in shifts]
            for fibers, coef in _fiber_paths(g, blocks, self.model.basis.fiber):
                live = np.nonzero(coef)[0]
                points = np.stack([squares[j][live, phi] for j, phi in enumerate(fibers)],
                                  axis=1) + self.kernel.base
                total[live] += coef[live] * self._evaluate(points)
        return total

    def coefficient(self, offsets, shifts, fibers):
        """The coefficient of one offset pattern and fiber path as a function of ``k``."""
        def rule(k):
            k = np.asarray(k, dtype=np.int64)
            out = self.gamma.values(k)[:, fibers[-1]]
            row = fibers[-1]
            for op, d, e, col in zip(self.ops, offsets, shifts, fibers):
                out = out * op.band(d, k + e)[:, row, col]
                row = col
            return out
        return rule

    def node_symbol(self, shifts, fibers, theta):
        """Symbol of ``sum_j theta_j w_j`` as a function of ``k``."""
        symbol = self.dirac.symbol
        constants = np.asarray(symbol.constants, dtype=complex)
        const = self.kernel.base + np.dot(theta, constants[list(fibers)])
        e = np.asarray(shifts, dtype=float)
        ebar = float(np.dot(theta, e))
        if symbol.beta == 2:
            spread = float(np.dot(theta, e * e)) - ebar * ebar
            return LatticeSymbol(symbol.shift + ebar, 2.0, (const + spread,))
        if symbol.beta == 0:
            return LatticeSymbol(0.0, 0.0, (const,))
        if not np.any(e):
            return LatticeSymbol(symbol.shift, symbol.beta, (const,))
        if symbol.beta == 1 and self.model.basis.kind == 'half':
            return LatticeSymbol(symbol.shift, 1.0, (const + ebar,))
        raise ContinuationError(
            "Expected a symbol exponent of 0 or 2 for shifted states, but got {}".format(symbol.beta)
        )


def _structure(expansion):
    """Offset patterns and fiber paths that carry a coefficient in the tails."""
    f = expansion.model.basis.fiber
    for offsets, shifts in expansion.patterns:
        for fibers in itertools.product(range(f), repeat=len(offsets)):
            yield offsets, shifts, fibers


def _tail_live(rule, radius, kind):
    j = np.concatenate((np.arange(8), [25, 97, 1009, 10007]))
    points = radius + j
    if kind == 'full':
        points = np.concatenate((points, -points))
    return bool(np.any(rule(points) != 0))


def _trace_sum(expansion, name):
    growth = expansion.growth_order
    if growth >= -1:
        raise ConvergenceError(
            "Expected a summable mode expansion (decay order below -1), but "
            "{} decays with order {:.3f}".format(name, growth)
        )
    f = expansion.model.basis.fiber

    def rule(k):
        out = np.zeros((len(k), f), dtype=complex)
        out[:, 0] = expansion.values(k)
        return out
    modes = DiagonalFunction(expansion.model.basis, rule, growth_order=growth, name=name)
    result = trace(modes, tol=expansion.spec.tol, growth_order=growth)
    return Expectation(result.value, result.tail_bound + expansion.error, result.terms_used)


def _continued_sum(expansion, name):
    if expansion.spec.method != 'residues':
        raise ContinuationError("Expected the 'residues' method for a continued mode sum")
    if expansion.dirac.symbol is None:
        raise ContinuationError(
            "Expected Dirac data with a lattice symbol to continue {}".format(name)
        )
    kernel = expansion.kernel
    kind = expansion.model.basis.kind
    radius = expansion.spec.head
    live = []
    for offsets, shifts, fibers in _structure(expansion):
        symbols = [expansion.node_symbol(shifts, fibers, theta) for theta in expansion.nodes]
        live.append((offsets, shifts, fibers, symbols))
        radius = max([radius] + [start_radius(sym, expansion.spec.head) for sym in symbols])

    head = 0j
    for chunk in chunked(window(kind, radius - 1), CHUNK_SIZE):
        values = expansion.values(chunk)
        head += complex(math.fsum(values.real), math.fsum(values.imag))

    tails, error = 0j, expansion.error
    for offsets, shifts, fibers, symbols in live:
        rule = expansion.coefficient(offsets, shifts, fibers)
        if not _tail_live(rule, radius, kind):
            continue
        for weight, symbol in zip(expansion.weights, symbols):
            part = lattice_sum(rule, symbol, kernel.nu + kernel.m, kind=kind,
                               tails_only=True, radius=radius)
            tails += weight * part.value
            error += abs(weight * kernel.scale_hg) * part.error
    logger.debug('continued %s: head radius %d, tails %s', name, radius, tails)
    return Expectation(head + kernel.scale_hg * tails, error, None)


def _check_t(model, t, spec):
    if t < 1:
        if model.spectral_gap <= 0:
            raise PreconditionError(
                "Expected an invertible Dirac operator for t = {} < 1, but {} has "
                "no spectral gap".format(t, model.name)
            )
        return spec.deformed(model.spectral_gap)
    return spec


def _sum_modes(model, ops, kernel, request, name):
    if any(not op.offsets for op in ops):
        return Expectation(0j, 0.0, 0)
    dirac = request.dirac or model.dirac
    spec = _check_t(model, request.t, request.spec)
    expansion = _ModeExpansion(model, dirac, ops, kernel, spec, request.graded)
    if request.continued:
        return _continued_sum(expansion, name)
    return _trace_sum(expansion, name)


def _p(model, r):
    return model.q / 2.0 + complex(r)


def expectation(model, request):
    """``<A_0, ..., A_m>_{m,s,r,t}``, or its ``s``-moment, with an error bound.

    :param model: (SpectralTripleModel)
    :param request: (ExpectationRequest)
    :return: (Expectation)
    :raises ConvergenceError: if the mode sum is not summable and no
        continuation was requested
    """
    if request.double_bracket:
        return double_expectation(model, request)
    ops = request.operators
    p = _p(model, request.r)
    if request.alpha is None:
        kernel = _kernel('fixed', p, request.m, s=request.s, t=request.t)
    else:
        kernel = _kernel('moment', p, request.m, t=request.t, alpha=request.alpha)
    return _sum_modes(model, ops, kernel, request, '<{}>'.format(','.join(op.name for op in ops)))


def double_expectation(model, request):
    """``<<A_0, ..., A_m>> = sum_j (-1)**deg_j <A_0, ..., A_j, D, A_{j+1}, ..., A_m>_{m+1}``."""
    ops = request.operators
    D = (request.dirac or model.dirac).dirac
    single = request._replace(double_bracket=False)
    value, error, modes = 0j, 0.0, 0
    degree = 0
    for j in range(len(ops)):
        degree += ops[j].degree
        inserted = ops[:j + 1] + (D,) + ops[j + 1:]
        part = expectation(model, single._replace(operators=inserted))
        value += (-1) ** degree * part.value
        error += part.error
        modes = max(modes, part.modes or 0)
    return Expectation(value, error, modes)


def reduced_expectation(model, ops, r, spec=None, continued=False, graded=True):
    """The reduced-cocycle expectation, prefactor included: a single power
    ``lam**-(q/2 + r - (m + 1)/2)`` against ``R_0(lam) = (lam - (1 + D**2))**-1``."""
    request = ExpectationRequest(ops, r=r, t=1.0, graded=graded, continued=continued,
                                 spec=spec)
    kernel = _kernel('reduced', _p(model, r), request.m, parity=model.parity)
    return _sum_modes(model, request.operators, kernel, request, 'psi')


def bracket(model, ops, **kwargs):
    """Shorthand: the value of ``<ops>`` (or ``<<ops>>``) for keyword
    arguments of :class:`ExpectationRequest`."""
    return expectation(model, ExpectationRequest(ops, **kwargs)).value


def eta(m, parity):
    """``eta_m = (-sqrt(2i))**P 2**(m+1) Gamma(m/2 + 1) / Gamma(m + 1)``."""
    return (-SQRT_2I) ** parity * 2 ** (m + 1) * gamma_fn(m / 2.0 + 1) / gamma_fn(m + 1.0)


def eta_recursion_residual(max_m=6, parity=1):
    """Largest ``|eta_{m+2} (m + 1) / 2 - eta_m|`` for ``m <= max_m``."""
    return max(abs(eta(m + 2, parity) * (m + 1) / 2.0 - eta(m, parity))
               for m in range(max_m + 1))


def _derivations(model, dirac, a):
    """``[D, a]`` for each ``a``; with the phase as Dirac operator the
    commutators carry their measured order."""
    out = []
    for aj in a:
        c = graded_commutator(dirac.dirac, aj)
        if dirac.square.growth_order == 0:
            c.growth_order = estimate_order(model, c).order
        c.name = 'd{}'.format(aj.name)
        out.append(c)
    return out


def _check_half_plane(m, r, continued):
    if not continued and complex(r).real <= (1 - m) / 2.0:
        raise ConvergenceError(
            "Expected Re(r) > (1 - m)/2 = {}, but got r = {}".format((1 - m) / 2.0, r)
        )


def phi_component(model, m, r, t, a, spec=None, continued=False, dirac=None):
    """``phi_{m,t}^r(a_0, ..., a_m) = eta_m int s**m <a_0, da_1, ..., da_m>_{m,s,r,t} ds``."""
    _check_half_plane(m, r, continued)
    dirac = dirac or model.dirac
    ops = [a[0]] + _derivations(model, dirac, a[1:])
    request = ExpectationRequest(ops, r=r, t=t, alpha=m, dirac=dirac,
                                 continued=continued, spec=spec)
    return eta(m, model.parity) * expectation(model, request).value


def transgression_component(model, m, r, t, a, spec=None, continued=False, dirac=None):
    """``Phi_{m,t}^r(a_0, ..., a_m) = eta_{m+1} / 2 int s**(m+1) <<a_0, da_1, ..., da_m>> ds``."""
    _check_half_plane(m, r, continued)
    dirac = dirac or model.dirac
    ops = [a[0]] + _derivations(model, dirac, a[1:])
    request = ExpectationRequest(ops, r=r, t=t, alpha=m + 1, double_bracket=True,
                                 dirac=dirac, continued=continued, spec=spec)
    return eta(m + 1, model.parity) / 2.0 * expectation(model, request).value


def continuation(model, m, r, a, t=1.0, spec=None):
    """``phi_{m,t}^r`` continued to any ``r`` off its poles."""
    return phi_component(model, m, r, t, a, spec=spec, continued=True)


class ResolventCocycle(object):
    """The resolvent cocycle ``(phi_{m,t}^r)`` at a fixed ``r``, as cochains."""

    def __init__(self, model, r, t=1.0, spec=None, continued=False, dirac=None):
        self.model = model
        self.r = r
        self.t = t
        self.spec = spec
        self.continued = continued
        self.dirac = dirac

    def component(self, m):
        def rule(a):
            return phi_component(self.model, m, self.r, self.t, a, self.spec,
                                 self.continued, self.dirac)
        return Cochain(m, rule, True, 'phi_{}^r'.format(m))

    def family(self, top=None):
        top = self.model.M if top is None else top
        return {m: self.component(m) for m in range(self.model.parity, top + 1, 2)}


class TransgressionCochain(ResolventCocycle):
    """The transgression cochain ``(Phi_{m,t}^r)``."""

    def component(self, m):
        def rule(a):
            return transgression_component(self.model, m, self.r, self.t, a, self.spec,
                                           self.continued, self.dirac)
        return Cochain(m, rule, True, 'Phi_{}^r'.format(m))


def relative_residual(lhs, rhs):
    return float(abs(lhs - rhs) / (1.0 + abs(lhs)))


def _insert(ops, j, op):
    ops = tuple(ops)
    return ops[:j + 1] + (op,) + ops[j + 1:]


def _moment(model, ops, alpha, r, t, spec, double=False):
    return bracket(model, ops, r=r, t=t, alpha=alpha, double_bracket=double, spec=spec)


def verify_s_trick(model, ops, alpha, r, t=1.0, double=False, spec=None):
    """``alpha int s**(alpha-1) <A> = -2 sum_j int s**(alpha+1) <.., A_j, 1, A_{j+1}, ..>``."""
    one = model.identity
    lhs = alpha * _moment(model, ops, alpha - 1, r, t, spec, double)
    rhs = -2.0 * sum(_moment(model, _insert(ops, j, one), alpha + 1, r, t, spec, double)
                     for j in range(len(ops)))
    return Residual('s-trick', relative_residual(lhs, rhs), lhs, rhs)


def verify_lambda_trick(model, ops, r, s=0.0, t=1.0, spec=None):
    """``-(q/2 + r) <A>_{r+1} = sum_j <.., A_j, 1, A_{j+1}, ..>_r``."""
    one = model.identity
    lhs = -(_p(model, r)) * bracket(model, ops, s=s, r=r + 1, t=t, spec=spec)
    rhs = sum(bracket(model, _insert(ops, j, one), s=s, r=r, t=t, spec=spec)
              for j in range(len(ops)))
    return Residual('lambda-trick', relative_residual(lhs, rhs), lhs, rhs)


def verify_square_reduction(model, ops, alpha, r, t=1.0, spec=None):
    """Resolvent reduction of a ``D**2`` insertion, including the factor ``t``
    on the final sum."""
    m = len(ops) - 1
    one = model.identity
    lhs = sum(_moment(model, _insert(ops, j, model.Dsq), alpha, r, t, spec)
              for j in range(m + 1))
    base = _moment(model, ops, alpha, r, t, spec)
    ones = sum(_moment(model, _insert(ops, j, one), alpha, r, t, spec) for j in range(m + 1))
    factor = -(m + 1) + (1 - _p(model, r)) + (alpha + 1) / 2.0
    rhs = factor * base - t * ones
    return Residual('D^2 reduction', relative_residual(lhs, rhs), lhs, rhs)


def verify_commutator_identity(model, ops, j, s=0.5, r=2.0, t=1.0, spec=None):
    """``-<.., [D**2, A_j], ..>_m`` against the two contracted ``(m-1)``-expectations;
    for ``j = m`` the wrap-around term carries ``(-1)**(A deg A_m)``."""
    ops = tuple(ops)
    m = len(ops) - 1
    if not 1 <= j <= m:
        raise NcgiValueError("Expected 1 <= j <= m, but got j = {}".format(j))
    replaced = ops[:j] + (nabla(model, ops[j]),) + ops[j + 1:]
    lhs = -bracket(model, replaced, s=s, r=r, t=t, spec=spec)
    first = ops[:j - 1] + (compose(ops[j - 1], ops[j]),) + ops[j + 1:]
    if j < m:
        second = ops[:j] + (compose(ops[j], ops[j + 1]),) + ops[j + 2:]
        sign = 1
    else:
        second = (compose(ops[m], ops[0]),) + ops[1:m]
        sign = (-1) ** (model.anti_parity * ops[m].degree)
    rhs = (bracket(model, first, s=s, r=r, t=t, spec=spec)
           - sign * bracket(model, second, s=s, r=r, t=t, spec=spec))
    return Residual('[D^2, A_{}] contraction'.format(j), relative_residual(lhs, rhs), lhs, rhs)


def verify_d_migration(model, ops, k=1, r=2.0, t=1.0, spec=None):
    """``int s**k <D A_0, ..> = (-1)**A int s**k <A_0, .., A_m D>``."""
    ops = tuple(ops)
    D = model.D
    lhs = _moment(model, (compose(D, ops[0]),) + ops[1:], k, r, t, spec)
    rhs = (-1) ** model.anti_parity * _moment(model, ops[:-1] + (compose(ops[-1], D),), k, r, t, spec)
    return Residual('D migration', relative_residual(lhs, rhs), lhs, rhs)


def _check_total_degree(model, ops, parity, what):
    total = sum(op.degree for op in ops) % 2
    if total != parity:
        raise PreconditionError(
            "Expected a total degree of parity {} for {}, but got {}".format(parity, what, total)
        )


def verify_cyclic_property(model, ops, k=1, r=2.0, t=1.0, double=False, spec=None):
    """Cyclic property of ``s``-moments of ``<...>`` (sign ``(-1)**(A deg A_m)``)
    or of ``<<...>>`` (sign ``(-1)**(P deg A_m)``, total degree ``A``)."""
    ops = tuple(ops)
    if double:
        _check_total_degree(model, ops, model.anti_parity, 'the cyclic property of <<...>>')
    lhs = _moment(model, ops, k, r, t, spec, double)
    exponent = model.parity if double else model.anti_parity
    rhs = (-1) ** (exponent * ops[-1].degree) * _moment(model, (ops[-1],) + ops[:-1], k, r, t, spec, double)
    return Residual('cyclic property', relative_residual(lhs, rhs), lhs, rhs)


def _graded_prefix_signs(ops):
    signs, degree = [], 0
    for op in ops:
        signs.append((-1) ** degree)
        degree += op.degree
    return signs


def verify_telescoping(model, ops, k=1, r=2.0, t=1.0, spec=None):
    """``0 = sum_j (-1)**deg_{j-1} int s**k <.., [D, A_j], ..>``."""
    ops = tuple(ops)
    terms = []
    for j, sign in enumerate(_graded_prefix_signs(ops)):
        replaced = ops[:j] + (graded_commutator(model.D, ops[j]),) + ops[j + 1:]
        terms.append(sign * _moment(model, replaced, k, r, t, spec))
    total = sum(terms)
    scale = max([1.0] + [abs(x) for x in terms])
    return Residual('telescoping', float(abs(total) / scale), total, 0j)


def verify_double_commutator_identity(model, ops, alpha=1, r=2.0, t=1.0, spec=None):
    """``sum_k (-1)**deg_{k-1} int s**alpha <<.., [D, A_k], ..>> = 2 sum_i int s**alpha <.., A_i, D**2, ..>``."""
    ops = tuple(ops)
    _check_total_degree(model, ops, model.parity, 'the double-bracket commutator identity')
    lhs = 0j
    for j, sign in enumerate(_graded_prefix_signs(ops)):
        replaced = ops[:j] + (graded_commutator(model.D, ops[j]),) + ops[j + 1:]
        lhs += sign * _moment(model, replaced, alpha, r, t, spec, double=True)
    rhs = 2.0 * sum(_moment(model, _insert(ops, i, model.Dsq), alpha, r, t, spec)
                    for i in range(len(ops)))
    return Residual('double-bracket commutators', relative_residual(lhs, rhs), lhs, rhs)


def verify_transgression(model, m, r, t, a, spec=None):
    """``(B Phi_{m+1,t} + b Phi_{m-1,t})(a) = ((q-1)/2 + r) phi_{m,t}^r(a) - t (q + 2r)/2 phi_{m,t}^{r+1}(a)``."""
    if m % 2 != model.parity:
        raise PreconditionError(
            "Expected m of parity {}, but got {}".format(model.parity, m)
        )
    cochain = TransgressionCochain(model, r, t, spec)
    lhs = B_coboundary(cochain.component(m + 1))(*a)
    if m >= 1:
        lhs += b_coboundary(cochain.component(m - 1))(*a)
    rhs = ((model.q - 1) / 2.0 + r) * phi_component(model, m, r, t, a, spec)
    if t:
        rhs -= t * (model.q + 2 * r) / 2.0 * phi_component(model, m, r + 1, t, a, spec)
    return Residual('transgression', relative_residual(lhs, rhs), lhs, rhs)


def verify_dt_law(model, m, r, a, t=0.5, h=1e-3, spec=None):
    """Central differences of ``phi_{m,t}^r`` in ``t`` against
    ``-(q/2 + r) phi_{m,t}^{r+1}``, at ``h``, ``h/2`` and ``h/4``.

    :return: (DtLaw) residual at ``h``, defects per step, observed order
    """
    if not (0 <= t - h and t + h <= 1):
        raise NcgiValueError(
            "Expected t +- h inside [0, 1], but got t = {}, h = {}".format(t, h)
        )
    rhs = -_p(model, r) * phi_component(model, m, r + 1, t, a, spec)
    defects = []
    for step in (h, h / 2.0, h / 4.0):
        forward = phi_component(model, m, r, t + step, a, spec)
        backward = phi_component(model, m, r, t - step, a, spec)
        defects.append((forward - backward) / (2 * step) - rhs)
    ratios = [abs(defects[i]) / abs(defects[i + 1]) for i in range(2) if defects[i + 1] != 0]
    order = float(np.mean(np.log2(ratios))) if ratios else float('inf')
    residual = float(abs(defects[0]) / (1.0 + abs(rhs)))
    return DtLaw(residual, [abs(d) for d in defects], order)


def psi_cochain(model, u, M, r, a, spec=None):
    """``Psi_{u,M}^r(a) = -(eta_M / 2) int s**M <<a_0 dD_u, [D_u, a_1], ..., [D_u, a_M]>> ds``
    at ``t = 0``, with ``D_u = D |D|**-u``."""
    if model.spectral_gap <= 0:
        raise PreconditionError(
            "Expected an invertible Dirac operator for log|D|, but {} has none".format(model.name)
        )
    _check_half_plane(M, r, False)
    dirac, dot = deformed_dirac(model, u)
    ops = [compose(a[0], dot)] + _derivations(model, dirac, a[1:])
    request = ExpectationRequest(ops, r=r, t=0.0, alpha=M, double_bracket=True,
                                 dirac=dirac, spec=spec)
    return -eta(M, model.parity) / 2.0 * expectation(model, request).value


def endpoint_s_integral(M, q, r):
    """``int_0^inf s**M (s**2 + 1)**(-M - 1 - q/2 - r) ds`` in closed form."""
    p = q / 2.0 + r
    return gamma_fn((M + 1) / 2.0) * gamma_fn(p + M / 2.0 + 0.5) / (2.0 * gamma_fn(M + 1 + p))


def duplication_residual(M):
    """``|Gamma((M+1)/2) Gamma(M/2+1) 2**M - sqrt(pi) Gamma(M+1)|``, relative."""
    lhs = gamma_fn((M + 1) / 2.0) * gamma_fn(M / 2.0 + 1) * 2.0 ** M
    rhs = math.sqrt(math.pi) * gamma_fn(M + 1.0)
    return abs(lhs - rhs) / rhs


def chern_endpoint(model, r, a, spec=None):
    """``B Phi_{M+1}^r(a)`` at ``u = 1`` (Dirac operator ``F``, ``t = 0``), in
    closed form and by honest evaluation of the transgression cochain.

    :return: (Endpoint)
    :raises PreconditionError: without a spectral gap
    """
    if model.spectral_gap <= 0:
        raise PreconditionError(
            "Expected an invertible Dirac operator for F = D|D|^-1, but {} has none".format(model.name)
        )
    M = model.M
    fdata = phase_dirac(model)
    F = fdata.dirac
    product = compose(model.gamma, F)
    for c in _derivations(model, fdata, a):
        product = compose(product, c)
    order = estimate_order(model, product).order
    tau = trace(product, tol=(spec or ContourSpec()).tol, growth_order=order).value
    p = _p(model, r)
    closed = (math.sqrt(math.pi) * SQRT_2I ** model.parity
              * gamma_fn((model.q - 1) / 2.0 + r + M / 2.0 + 1)
              / (gamma_fn(p) * 2.0 * math.factorial(M))) * tau
    cochain = TransgressionCochain(model, r, 0.0, spec, dirac=fdata).component(M + 1)
    honest = B_coboundary(cochain)(*a)
    return Endpoint(closed, honest, relative_residual(closed, honest), tau)


def reduced_phi(model, m, r, a, spec=None, continued=False):
    """The reduced resolvent cocycle ``psi_m^r(a_0, ..., a_m)``."""
    _check_half_plane(m, r, continued)
    ops = [a[0]] + _derivations(model, model.dirac, a[1:])
    return reduced_expectation(model, ops, r, spec, continued).value


def higson_factor(z):
    """``sqrt(pi) / Gamma(z + 1/2)`` relating the reduced cocycle to Higson's."""
    return math.sqrt(math.pi) * rgamma(z + 0.5)


def decay_in_r(model, m, a, r0s=(1.0, 2.0, 4.0, 8.0), t=1.0, spec=None):
    """``|phi_{m,t}^r(a)|`` along real ``r``; the trend should be decreasing.

    :return: (tuple) values, bool
    """
    values = [abs(phi_component(model, m, r0, t, a, spec)) for r0 in r0s]
    return values, all(x >= y for x, y in zip(values, values[1:]))


def refinement_check(evaluate, spec=None):
    """Evaluate ``evaluate(spec)`` (an :class:`Expectation`) at the given and at
    halved tolerances; stable when the change is within the reported error.

    :return: (tuple) stable, change, error
    """
    spec = spec or ContourSpec()
    coarse = evaluate(spec)
    fine = evaluate(spec.refined())
    change = abs(coarse.value - fine.value)
    bound = max(coarse.error, 1e-14 * max(1.0, abs(coarse.value)))
    return change <= bound, change, coarse.error
