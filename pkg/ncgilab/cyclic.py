"""The (b, B) bicomplex over a model algebra.

Cochains are evaluation rules on tuples of band operators; they are never
stored as tensors. Chains are formal sums of elementary tensors
``a_0 (x) ... (x) a_m`` with complex coefficients. A (b, B)-family of
either kind is a plain dict ``degree -> Cochain`` or ``degree -> Chain``.

Sign conventions::

    (b phi)(a_0, ..., a_{m+1}) = sum_{j=0}^{m} (-1)**j phi(a_0, ..., a_j a_{j+1}, ..., a_{m+1})
                                 + (-1)**(m+1) phi(a_{m+1} a_0, a_1, ..., a_m)
    (B phi)(a_0, ..., a_{m-1}) = sum_{j=0}^{m-1} (-1)**((m-1) j) phi(1, a_j, ..., a_{m-1}, a_0, ..., a_{j-1})

and the boundaries on chains are their transposes, so that
``<(b + B) phi, c> = <phi, (b^T + B^T) c>``.
"""
import collections
import logging
import math

import numpy as np

from ncgilab.bandop import compose, graded_commutator, identity, trace
from ncgilab.exceptions import NcgiValueError
from ncgilab.iteration import probe_points


logger = logging.getLogger(__name__)

PairingValue = collections.namedtuple('PairingValue', 'value terms')
CheckResult = collections.namedtuple('CheckResult', 'passed residual')

IDEMPOTENCY_TOL = 1e-10
CYCLE_TOL = 1e-9


class Cochain(object):
    """A degree-``m`` multilinear functional given by an evaluation rule.

    :param degree: (int) ``m``
    :param rule: callable taking a tuple of ``m + 1`` band operators and
        returning a complex number (or an array of samples, e.g. over ``r``)
    :param normalized: (bool) whether the rule vanishes when ``a_j = 1``
        for some ``j >= 1``
    :param name: (str)
    """

    def __init__(self, degree, rule, normalized=False, name=None):
        if degree < 0:
            raise NcgiValueError("Expected a non-negative degree, but got {}".format(degree))
        self.degree = degree
        self._rule = rule
        self.normalized = normalized
        self.name = name or 'phi_{}'.format(degree)

    def __repr__(self):
        return '<Cochain {} of degree {}>'.format(self.name, self.degree)

    def __call__(self, *ops):
        if len(ops) != self.degree + 1:
            raise NcgiValueError(
                "Expected {} arguments for a degree-{} cochain, but got {}".format(
                    self.degree + 1, self.degree, len(ops)
                )
            )
        return self._rule(tuple(ops))

    def __add__(self, other):
        _check_degrees(self, other)
        return Cochain(self.degree, lambda a: self._rule(a) + other._rule(a),
                       self.normalized and other.normalized,
                       '({} + {})'.format(self.name, other.name))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return Cochain(self.degree, lambda a: scalar * self._rule(a), self.normalized,
                       '{}*{}'.format(scalar, self.name))

    __rmul__ = __mul__


def _check_degrees(a, b):
    if a.degree != b.degree:
        raise NcgiValueError(
            "Expected equal degrees, but got {} and {}".format(a.degree, b.degree)
        )


class Chain(object):
    """A formal sum of elementary tensors of one degree.

    :param terms: iterable of ``(coefficient, (a_0, ..., a_m))``
    :param degree: (int) required when ``terms`` is empty
    :param normalization: (complex) constant the chain was built with, kept
        for reports
    """

    def __init__(self, terms, degree=None, normalization=None):
        self.terms = [(complex(c), tuple(t)) for c, t in terms]
        degrees = {len(t) - 1 for _, t in self.terms}
        if len(degrees) > 1:
            raise NcgiValueError(
                "Expected tensors of a single degree, but got degrees {}".format(sorted(degrees))
            )
        if degrees:
            found = degrees.pop()
            if degree is not None and degree != found:
                raise NcgiValueError(
                    "Expected tensors of degree {}, but got {}".format(degree, found)
                )
            degree = found
        if degree is None:
            raise NcgiValueError("Expected a degree for an empty chain")
        self.degree = degree
        self.normalization = normalization

    def __repr__(self):
        return '<Chain of degree {} with {} terms>'.format(self.degree, len(self.terms))

    def __add__(self, other):
        if self.degree != other.degree:
            raise NcgiValueError(
                "Expected chains of equal degree, but got {} and {}".format(
                    self.degree, other.degree
                )
            )
        return Chain(self.terms + other.terms, self.degree)

    def __mul__(self, scalar):
        return Chain([(scalar * c, t) for c, t in self.terms], self.degree,
                     self.normalization)

    __rmul__ = __mul__

    def to_records(self):
        """``[(coefficient, [generator words])]`` as written to reports."""
        return [([c.real, c.imag], [a.name for a in t]) for c, t in self.terms]


def b_coboundary(phi):
    """Hochschild coboundary ``b phi`` of degree ``m + 1``."""
    m = phi.degree

    def rule(a):
        total = 0
        for j in range(m + 1):
            merged = a[:j] + (compose(a[j], a[j + 1]),) + a[j + 2:]
            total = total + (-1) ** j * phi(*merged)
        return total + (-1) ** (m + 1) * phi(compose(a[m + 1], a[0]), *a[1:m + 1])
    return Cochain(m + 1, rule, phi.normalized, 'b{}'.format(phi.name))


def B_coboundary(phi):
    """Connes' coboundary ``B phi`` of degree ``m - 1``."""
    m = phi.degree
    if m < 1:
        raise NcgiValueError("Expected a cochain of degree >= 1 for B, but got 0")

    def rule(a):
        one = identity(a[0].basis)
        total = 0
        for j in range(m):
            total = total + (-1) ** ((m - 1) * j) * phi(one, *(a[j:] + a[:j]))
        return total
    return Cochain(m - 1, rule, True, 'B{}'.format(phi.name))


def boundary_b(c):
    """Transpose of ``b``: degree ``n`` to degree ``n - 1``."""
    n = c.degree
    if n < 1:
        raise NcgiValueError("Expected a chain of degree >= 1 for b^T, but got 0")
    terms = []
    for coef, a in c.terms:
        for j in range(n):
            terms.append(((-1) ** j * coef, a[:j] + (compose(a[j], a[j + 1]),) + a[j + 2:]))
        terms.append(((-1) ** n * coef, (compose(a[n], a[0]),) + a[1:n]))
    return Chain(terms, n - 1)


def boundary_B(c):
    """Transpose of ``B``: degree ``n`` to degree ``n + 1``."""
    n = c.degree
    terms = []
    for coef, a in c.terms:
        one = identity(a[0].basis)
        for j in range(n + 1):
            terms.append(((-1) ** (n * j) * coef, (one,) + a[j:] + a[:j]))
    return Chain(terms, n + 1)


def _as_family(x):
    if isinstance(x, (Cochain, Chain)):
        return {x.degree: x}
    return dict(x)


def pair(cochains, chains):
    """``<phi, c> = sum_m phi_m(c_m)``, extended linearly over chain terms.

    :param cochains: (dict or Cochain) degree -> Cochain
    :param chains: (dict or Chain) degree -> Chain
    :return: (PairingValue)
    :raises NcgiValueError: if a chain degree with a nonzero coefficient has
        no cochain counterpart, or parities differ
    """
    cochains = _as_family(cochains)
    chains = _as_family(chains)
    parities = {d % 2 for d in cochains} | {d % 2 for d, c in chains.items() if c.terms}
    if len(parities) > 1:
        raise NcgiValueError("Expected cochains and chains of one parity, but got both")
    value = 0
    count = 0
    for degree in sorted(chains):
        chain = chains[degree]
        live = [(coef, t) for coef, t in chain.terms if coef != 0]
        if not live:
            continue
        if degree not in cochains:
            raise NcgiValueError(
                "Expected a cochain of degree {} to pair with, but got none".format(degree)
            )
        for coef, t in live:
            value = value + coef * cochains[degree](*t)
            count += 1
    return PairingValue(value, count)


def bB_coboundary(family):
    """``(b + B) phi`` on a whole family: degree ``n`` collects
    ``b phi_{n-1} + B phi_{n+1}``."""
    out = {}
    for degree, phi in family.items():
        bphi = b_coboundary(phi)
        out[bphi.degree] = out[bphi.degree] + bphi if bphi.degree in out else bphi
        if degree >= 1:
            Bphi = B_coboundary(phi)
            out[Bphi.degree] = out[Bphi.degree] + Bphi if Bphi.degree in out else Bphi
    return out


def bB_boundary(family):
    """``(b^T + B^T) c`` on a whole family of chains."""
    out = {}
    for degree, c in family.items():
        images = [boundary_B(c)]
        if degree >= 1:
            images.append(boundary_b(c))
        for image in images:
            out[image.degree] = out[image.degree] + image if image.degree in out else image
    return out


def unitary_normalization(m, c1=1.0):
    """Constant of ``Ch_m(u)``: ``c_m = c_1 (-1)**k k!`` for ``m = 2k + 1``."""
    k = (m - 1) // 2
    return c1 * (-1) ** k * math.factorial(k)


def projection_normalization(m):
    """Constant of ``Ch_m(p)``: 1 for ``m = 0``, ``(-1)**k (2k)! / k!`` for ``m = 2k``."""
    k = m // 2
    if k == 0:
        return 1.0
    return (-1) ** k * math.factorial(2 * k) / math.factorial(k)


def ch_unitary(u, m, c1=1.0):
    """``Ch_m(u) = c_m u* (x) u (x) u* (x) ... (x) u`` with ``m + 1`` entries.

    :raises NcgiValueError: for even ``m``
    """
    if m % 2 == 0 or m < 1:
        raise NcgiValueError("Expected an odd degree for Ch_m(u), but got {}".format(m))
    us = u.adjoint()
    if u.name:
        us.name = '{}*'.format(u.name)
    const = unitary_normalization(m, c1)
    return Chain([(const, (us, u) * ((m + 1) // 2))], m, normalization=const)


def ch_unitary_cycle(u, top, c1=1.0):
    """The (b, B)-cycle ``{Ch_1(u), Ch_3(u), ..., Ch_top(u)}``."""
    return {m: ch_unitary(u, m, c1) for m in range(1, top + 1, 2)}


def _check_projection(p, window=1 << 10):
    k = probe_points(p.basis.kind, window)
    residual = 0.0
    for op in (compose(p, p) - p, p.adjoint() - p):
        for d in op.offsets:
            residual = max(residual, float(np.abs(op.band(d, k)).max()))
    if residual > IDEMPOTENCY_TOL:
        raise NcgiValueError(
            "Expected a self-adjoint idempotent, but p^2 - p or p* - p reaches {}".format(residual)
        )


def ch_projection(p, m):
    """``Ch_0(p) = p``; ``Ch_2k(p) = (-1)**k (2k)! / k! (p - 1/2) (x) p (x) ... (x) p``.

    :raises NcgiValueError: for odd ``m`` or a non-idempotent ``p``
    """
    if m % 2 or m < 0:
        raise NcgiValueError("Expected an even degree for Ch_m(p), but got {}".format(m))
    _check_projection(p)
    const = projection_normalization(m)
    if m == 0:
        return Chain([(const, (p,))], 0, normalization=const)
    head = p - 0.5 * identity(p.basis)
    head.name = '({}-1/2)'.format(p.name)
    return Chain([(const, (head,) + (p,) * m)], m, normalization=const)


def ch_projection_cycle(p, top):
    return {m: ch_projection(p, m) for m in range(0, top + 1, 2)}


def commutator_cochain(weight, X, degree, tol=1e-12, growth_order=None):
    """Probe cochain ``a -> trace(weight a_0 [X, a_1] ... [X, a_m])``.

    Normalized since ``[X, 1] = 0``. With ``weight`` trace class and ``X``
    of bounded commutators it is finite on every tuple of generators.
    """
    def rule(a):
        product = compose(weight, a[0])
        for aj in a[1:]:
            product = compose(product, graded_commutator(X, aj))
        order = weight.growth_order if growth_order is None else growth_order
        return trace(product, tol=tol, growth_order=order).value
    return Cochain(degree, rule, True, 'tau(w a0 [{}, a]^{})'.format(X.name, degree))


def probe_panel(model, degree, exponents=(3.0, 4.0)):
    """A panel of normalized probe cochains of a given degree on a model."""
    panel = []
    for s in exponents:
        order = -s * model.q
        weight = model.Dsq.apply(lambda x, s=s: (1.0 + x) ** (-s * model.q / 2.0),
                                 growth_order=order)
        panel.append(commutator_cochain(model.gamma @ weight, model.D, degree,
                                        growth_order=order))
    return panel


def random_tuples(generators, degree, count=20, seed=0):
    """``count`` seeded tuples of ``degree + 1`` generators."""
    ops = list(generators)
    rng = np.random.RandomState(seed)
    return [tuple(ops[i] for i in rng.randint(len(ops), size=degree + 1))
            for _ in range(count)]


def _residual(x):
    return float(np.max(np.abs(x)))


def is_cyclic(psi, samples, tol=CYCLE_TOL):
    """Maximal residual of ``psi(a_0..a_m) = (-1)**m psi(a_m, a_0..a_{m-1})``.

    :return: (CheckResult)
    """
    m = psi.degree
    residual = 0.0
    for a in samples:
        rotated = (a[-1],) + tuple(a[:-1])
        residual = max(residual, _residual(psi(*a) - (-1) ** m * psi(*rotated)))
    logger.debug('cyclicity of %s: residual %g', psi.name, residual)
    return CheckResult(residual <= tol, residual)


def is_hochschild_cycle(c, panel, tol=CYCLE_TOL):
    """Evaluate ``b^T c`` against a panel of probe cochains of degree
    ``c.degree - 1``; a degree-0 chain is a cycle vacuously.

    :return: (CheckResult)
    """
    if c.degree == 0:
        return CheckResult(True, 0.0)
    image = boundary_b(c)
    residual = max((_residual(pair(phi, image).value) for phi in panel), default=0.0)
    return CheckResult(residual <= tol, residual)


def is_bB_cycle(family, panels, tol=CYCLE_TOL):
    """``(b^T + B^T) c`` paired with probe cochains, degree by degree.

    The top component's ``B^T`` image is dropped, as for the bottom-degree
    representatives computed throughout.

    :param panels: (dict) degree -> list of normalized cochains
    """
    top = max(family)
    image = bB_boundary(family)
    residual = 0.0
    for degree, chain in image.items():
        if degree > top:
            continue
        for phi in panels.get(degree, []):
            residual = max(residual, _residual(pair(phi, chain).value))
    return CheckResult(residual <= tol, residual)
