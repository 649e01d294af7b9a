"""Fredholm indices from finite sections and the local index formula.

The index of a compression ``T = P_rows A P_cols`` is counted on
rectangular sections: columns in the window of radius ``K`` and rows in
the window of radius ``K + w``, ``w`` the half bandwidth of ``A``, so that
no column is ever cut off at the window edge. Then

    index = dim ker T - dim ker T*,

each kernel counted from singular values below a threshold, and trusted
only when the next singular value clears a gap. Windows double until two
consecutive verdicts agree.
"""
import cmath
import collections
import logging
import math

import numpy as np
from scipy.linalg import eigh, svd

from ncgilab.bandop import compose, finite_section
from ncgilab.chern import FredholmModule, chern_character
from ncgilab.cyclic import ch_unitary, ch_unitary_cycle, pair
from ncgilab.exceptions import IndexStabilityError, PreconditionError
from ncgilab.laurent import RADII, POINTS, laurent_fit
from ncgilab.residue import residue_cocycle_component, zeta_sum_index
from ncgilab.resolvent import ResolventCocycle
from ncgilab.triple import (
    block_embed,
    double,
    make_circle_triple,
    phase,
    positive_projection,
)


logger = logging.getLogger(__name__)

SQRT_2PI_I = cmath.sqrt(2j * math.pi)
KERNEL_THRESHOLD = 1e-8
GAP = 1e-6
K0 = 64
DOUBLINGS = 3
AGREEMENT_TOL = 1e-3
T_PATH = (0.0, 1.0)

SectionCount = collections.namedtuple('SectionCount', 'radius index gap')
Calibration = collections.namedtuple('Calibration', 'value model winding part1_raw index provenance')
Additivity = collections.namedtuple('Additivity', 'n m index_sum index_n index_m holds')
TPath = collections.namedtuple('TPath', 'model element ts values integers agrees spread')

FORMULAS = ('part1', 'part2', 'part3', 'chern')


class IndexReport(object):
    """Index of one element on one model, with every formula that predicts it.

    :param model: (str) model name
    :param element: (str) element word
    :param counts: (list) of SectionCount, one per section size tried
    :param index: (int) the stable finite-section index
    """

    def __init__(self, model, element, counts, index, stable):
        self.model = model
        self.element = element
        self.counts = counts
        self.index = index
        self.stable = stable
        self.values = collections.OrderedDict()
        self.calibration = None

    def __repr__(self):
        return '<IndexReport {} on {}: {}>'.format(self.element, self.model, self.index)

    @property
    def residuals(self):
        return collections.OrderedDict(
            (name, float(abs(value - self.index))) for name, value in self.values.items()
        )

    def passed(self, tol=AGREEMENT_TOL):
        return self.stable and all(r <= tol for r in self.residuals.values())

    def verdict(self, tol=AGREEMENT_TOL):
        return 'PASS' if self.passed(tol) else 'FAIL'

    def to_dict(self):
        out = collections.OrderedDict([
            ('model', self.model),
            ('element', self.element),
            ('sizes', [c.radius for c in self.counts]),
            ('gaps', [c.gap for c in self.counts]),
            ('index', self.index),
            ('stable', self.stable),
            ('values', collections.OrderedDict(
                (name, [v.real, v.imag]) for name, v in self.values.items())),
            ('residuals', self.residuals),
        ])
        if self.calibration is not None:
            out['calibration'] = self.calibration._asdict()
        return out


def _range_basis(projection, radius):
    """Orthonormal basis of the range of a block-diagonal projection on the
    window of radius ``radius``, as columns."""
    matrix = finite_section(projection, radius)
    values, vectors = eigh(matrix)
    return vectors[:, values > 0.5]


def _window_rows(basis, outer, inner):
    """Row positions of the radius-``inner`` window inside the radius-``outer`` one."""
    points = np.arange(-outer, outer + 1)
    points = points[basis.valid(points)]
    keep = np.abs(points) <= inner
    return np.repeat(keep, basis.fiber)


def _kernel_dimension(matrix, threshold):
    if matrix.shape[1] == 0:
        return 0, float('inf')
    if matrix.shape[0] == 0:
        return matrix.shape[1], float('inf')
    s = svd(matrix, compute_uv=False)
    small = int(np.sum(s < threshold))
    kernel = matrix.shape[1] - len(s) + small
    above = s[s >= threshold]
    return kernel, float(above.min()) if len(above) else float('inf')


def compressed_index(op, source, target, radius, threshold=KERNEL_THRESHOLD):
    """Index of ``target op source`` as a map from range(source) to range(target).

    :param op: (BandOperator)
    :param source, target: (BandOperator) block-diagonal projections
    :return: (SectionCount)
    """
    width = max(op.half_bandwidth, 1)
    outer = radius + width
    A = finite_section(op, outer)
    inner = _window_rows(op.basis, outer, radius)

    def section(matrix, cols_proj, rows_proj):
        V = _range_basis(cols_proj, radius)
        cols = np.zeros((len(inner), V.shape[1]), dtype=complex)
        cols[inner] = V
        W = _range_basis(rows_proj, outer)
        return W.conj().T @ matrix @ cols

    forward, gap_f = _kernel_dimension(section(A, source, target), threshold)
    backward, gap_b = _kernel_dimension(section(A.conj().T, target, source), threshold)
    return SectionCount(radius, forward - backward, min(gap_f, gap_b))


def _stable_index(count, k0, doublings, gap, label):
    counts = []
    radius = k0
    for _ in range(doublings + 1):
        counts.append(count(radius))
        logger.debug('%s at radius %d: index %d, gap %g', label, radius,
                     counts[-1].index, counts[-1].gap)
        if (len(counts) >= 2 and counts[-1].index == counts[-2].index
                and min(counts[-1].gap, counts[-2].gap) >= gap):
            return counts
        radius *= 2
    raise IndexStabilityError(
        "Expected a stable index for {} within {} doublings from K = {}, but got {}".format(
            label, doublings, k0, [(c.radius, c.index, c.gap) for c in counts]
        )
    )


def toeplitz_index(model, u, k0=K0, threshold=KERNEL_THRESHOLD, gap=GAP,
                   doublings=DOUBLINGS):
    """``index(Q u Q)``, ``Q`` the non-negative spectral projection of ``D``.

    :return: (IndexReport) with the index only
    :raises IndexStabilityError: if no two consecutive windows agree
    """
    Q = positive_projection(model)
    counts = _stable_index(
        lambda radius: compressed_index(u, Q, Q, radius, threshold),
        k0, doublings, gap, 'QuQ on {}'.format(model.name),
    )
    index = counts[-1].index
    logger.info('index(Q %s Q) on %s = %d', u.name, model.name, index)
    return IndexReport(model.name, u.name, counts, index, True)


def even_index_pairing(model, p, mu, k0=K0, threshold=KERNEL_THRESHOLD, gap=GAP,
                       doublings=DOUBLINGS):
    """Index of ``p F_mu p`` from the even to the odd part of the double.

    :param p: (BandOperator) projection on the model; it acts on the double
        as ``diag(p, 0)``
    """
    if model.grading is None:
        raise PreconditionError("Expected an even model, but {} has no grading".format(model.name))
    doubled = double(model, mu)
    F = phase(doubled).F
    embedded = block_embed([[p, None], [None, None]], name='diag({},0)'.format(p.name))
    half = 0.5 * doubled.identity
    plus = compose(embedded, half + 0.5 * doubled.grading)
    minus = compose(embedded, half - 0.5 * doubled.grading)
    counts = _stable_index(
        lambda radius: compressed_index(F, plus, minus, radius, threshold),
        k0, doublings, gap, 'pF+p on {}'.format(doubled.name),
    )
    return IndexReport(doubled.name, p.name, counts, counts[-1].index, True)


def _part1(model, u, c1, spec, radii, points, t=1.0):
    cycle = ch_unitary_cycle(u, model.M, c1)
    r0 = (1.0 - model.q) / 2.0

    def summed(r):
        family = ResolventCocycle(model, r, t=t, spec=spec, continued=True).family()
        return pair(family, cycle).value
    fit = laurent_fit(summed, r0, radii=radii, points=points)
    return fit.residue / SQRT_2PI_I


def _part3(model, u, c1, radii, points):
    total = 0j
    for m, chain in ch_unitary_cycle(u, model.M, c1).items():
        for coef, a in chain.terms:
            total += coef * residue_cocycle_component(model, m, a, radii, points)
    return total / SQRT_2PI_I


def _chern(model, u, c1):
    gapped = model if model.spectral_gap > 0 else double(model, 0.5)
    if gapped is not model:
        u = gapped.unitary(_winding(model, u))
    module = FredholmModule(gapped)
    cochain = chern_character(module, gapped.M, normalization='bB')
    return pair(cochain, ch_unitary(u, gapped.M, c1)).value / SQRT_2PI_I


def _winding(model, u):
    offsets = [d for d in u.offsets if d]
    return offsets[0] if offsets else 0


def calibrate_chern_constant(model=None, spec=None, k0=K0, radii=RADII, points=POINTS):
    """The single calibrated constant: ``c_1`` of ``Ch_m(u)`` such that the
    resolvent formula reproduces the finite-section index of the winding-1
    unitary.

    :return: (Calibration)
    """
    model = model or make_circle_triple(shifted=True)
    u = model.unitary(1)
    index = toeplitz_index(model, u, k0).index
    raw = _part1(model, u, 1.0, spec, radii, points)
    value = index / raw
    if abs(value.imag) < 1e-8 * abs(value):
        value = value.real
    logger.info('calibrated Ch_1(u) constant %s on %s (raw part 1 %s, index %d)',
                value, model.name, raw, index)
    return Calibration(complex(value), model.name, 1, complex(raw), index,
                       'resolvent formula, winding 1, {}'.format(model.name))


def verify_local_index_formula(model, u, calibration, spec=None, k0=K0,
                               radii=RADII, points=POINTS, formulas=FORMULAS):
    """Finite-section index of ``Q u Q`` against the resolvent formula
    (part 1), the summed zeta functions (part 2), the residue cocycle
    (part 3) and the Chern character pairing.

    :param calibration: (Calibration) fixes ``c_1`` for every ``Ch_m(u)``
    :return: (IndexReport)
    """
    if model.parity != 1:
        raise PreconditionError("Expected an odd model, but {} is even".format(model.name))
    if model.spectral_gap > 0:
        report = toeplitz_index(model, u, k0)
    else:
        gapped = double(model, 0.5)
        report = toeplitz_index(gapped, gapped.unitary(_winding(model, u)), k0)
        report.model, report.element = model.name, u.name
    c1 = calibration.value
    if 'part1' in formulas:
        report.values['part1'] = _part1(model, u, c1, spec, radii, points)
    if 'part2' in formulas:
        report.values['part2'] = zeta_sum_index(model, u, radii, points)
    if 'part3' in formulas:
        report.values['part3'] = _part3(model, u, c1, radii, points)
    if 'chern' in formulas:
        report.values['chern'] = _chern(model, u, c1)
    report.calibration = calibration
    logger.info('local index formula on %s for %s: index %d, %s', model.name, u.name,
                report.index, dict(report.values))
    return report


def t_path(model, u, calibration, spec=None, ts=T_PATH, radii=RADII, points=POINTS):
    """Part 1 of the local index formula at each ``t`` of ``ts``: the
    residue of the summed resolvent cocycle ``phi_{m,t}`` paired with
    ``Ch(u)``. The integer it rounds to must not depend on ``t``.

    :return: (TPath)
    :raises PreconditionError: on an even model, or without a spectral gap
        when some ``t < 1``
    """
    if model.parity != 1:
        raise PreconditionError("Expected an odd model, but {} is even".format(model.name))
    if min(ts) < 1 and model.spectral_gap <= 0:
        raise PreconditionError(
            "Expected an invertible Dirac operator for t < 1, but {} has no spectral "
            "gap".format(model.name)
        )
    values = [_part1(model, u, calibration.value, spec, radii, points, t) for t in ts]
    integers = [int(round(v.real)) for v in values]
    spread = max(abs(v - values[-1]) for v in values)
    logger.info('t-path of part 1 on %s for %s: %s', model.name, u.name,
                dict(zip(ts, values)))
    return TPath(model.name, u.name, tuple(ts), values, integers,
                 len(set(integers)) == 1, float(spread))


def additivity(model, n, m, k0=K0):
    """``index(u**(n+m)) = index(u**n) + index(u**m)`` as computed integers."""
    def index(w):
        return toeplitz_index(model, model.unitary(w), k0).index
    total, first, second = index(n + m), index(n), index(m)
    return Additivity(n, m, total, first, second, total == first + second)
