import math

import numpy as np
import pytest
from scipy.special import zeta

from ncgilab.bandop import (
    BandOperator,
    BasisIndexSet,
    DiagonalFunction,
    compose,
    entrywise_scaled,
    finite_section,
    graded_commutator,
    identity,
    resolvent_diag,
    shift,
    trace,
    zero,
)
from ncgilab.exceptions import (
    BasisMismatchError,
    NcgiValueError,
    NonSummableError,
    SpectrumProximityError,
    ToleranceNotReachedError,
)


FULL = BasisIndexSet('full')
HALF = BasisIndexSet('half')


@pytest.mark.parametrize('kind, fiber', [
    ('quarter', 1),
    ('full', 3),
    ('half', 0),
])
def test_basis_validation(kind, fiber):
    with pytest.raises(NcgiValueError):
        BasisIndexSet(kind, fiber)


@pytest.mark.parametrize('basis, k, expected', [
    (FULL, [-3, 0, 5], [True, True, True]),
    (HALF, [-3, 0, 5], [False, True, True]),
])
def test_basis_valid(basis, k, expected):
    assert list(basis.valid(np.array(k))) == expected


def test_basis_doubled():
    assert BasisIndexSet('half', 2).doubled() == BasisIndexSet('half', 4)


@pytest.mark.parametrize('i, j, expected', [
    (3, 2, 1),
    (2, 3, 0),
    (0, -1, 1),
])
def test_shift_entries(i, j, expected):
    assert shift(FULL, 1).entry(i, j) == expected


def test_entry_is_memoized():
    op = shift(FULL, 1)
    assert op.entry(1, 0) == op.entry(1, 0)
    assert (1, 0) in op.__dict__['_entry_memo']


@pytest.mark.parametrize('basis, first, second, expected', [
    (FULL, 1, -1, [1, 1, 1]),
    (FULL, -1, 1, [1, 1, 1]),
    # unilateral shift: S S* loses the ground state, S* S does not
    (HALF, 1, -1, [0, 1, 1]),
    (HALF, -1, 1, [1, 1, 1]),
])
def test_shift_products(basis, first, second, expected):
    product = compose(shift(basis, first), shift(basis, second))
    assert product.offsets == (0,)
    np.testing.assert_array_equal(product.band(0, [0, 1, 2])[:, 0, 0], expected)


def test_adjoint_of_shift():
    adj = shift(FULL, 2).adjoint()
    assert adj.offsets == (-2,)
    assert adj.entry(0, 2) == 1


def test_adjoint_conjugates():
    op = BandOperator(FULL, {1: lambda k: 1j * (k + 1.0)}, growth_order=1.0)
    adj = op.adjoint()
    assert adj.entry(3, 4) == np.conj(op.entry(4, 3))


def test_linear_combinations():
    s = shift(FULL, 1)
    combo = 2.0 * s - s.adjoint() + identity(FULL)
    assert combo.offsets == (-1, 0, 1)
    assert combo.entry(1, 0) == 2
    assert combo.entry(0, 1) == -1
    assert combo.entry(5, 5) == 1
    assert (-s).entry(1, 0) == -1


def test_mixed_degree_sum_is_rejected():
    D = DiagonalFunction(FULL, lambda k: k * 1.0, growth_order=1.0, degree=1)
    with pytest.raises(NcgiValueError):
        D + identity(FULL)


def test_basis_mismatch():
    with pytest.raises(BasisMismatchError):
        compose(shift(FULL, 1), shift(HALF, 1))


def test_graded_commutator_of_dirac_and_shift():
    D = DiagonalFunction(FULL, lambda k: k * 1.0, growth_order=1.0, degree=1, name='D')
    c = graded_commutator(D, shift(FULL, 1))
    k = np.arange(-5, 6)
    np.testing.assert_allclose(c.band(1, k)[:, 0, 0], 1.0)
    assert c.name == '[D,S]'


def test_graded_commutator_of_odd_operators_is_anticommutator():
    D = DiagonalFunction(FULL, lambda k: k * 1.0, growth_order=1.0, degree=1)
    c = graded_commutator(D, D)
    np.testing.assert_allclose(c.band(0, [1, 2, 3])[:, 0, 0], [2.0, 8.0, 18.0])


def test_entrywise_scaled():
    op = entrywise_scaled(shift(FULL, 1), lambda d, k: (k + d)[:, None, None],
                          name='kS')
    assert op.entry(4, 3) == 4


def test_diagonal_products_stay_diagonal():
    a = DiagonalFunction(FULL, lambda k: k + 1.0, growth_order=1.0, name='a')
    b = DiagonalFunction(FULL, lambda k: k - 1.0, growth_order=1.0, name='b')
    ab = a @ b
    assert isinstance(ab, DiagonalFunction)
    np.testing.assert_allclose(ab.values([0, 2])[:, 0], [-1.0, 3.0])
    assert ab.growth_order == 2.0


def test_diagonal_values_on_fiber_basis():
    basis = BasisIndexSet('half', 2)
    d = DiagonalFunction(basis, lambda k: np.stack([k, k + 1.0], axis=1))
    np.testing.assert_allclose(d.values([-1, 0, 3]), [[0, 0], [0, 1], [3, 4]])


def test_zero_has_no_bands():
    z = zero(FULL)
    assert z.offsets == ()
    assert z.half_bandwidth == 0


def test_resolvent_diag_values():
    dsq = DiagonalFunction(FULL, lambda k: k ** 2.0, growth_order=2.0, lower_bound=0.0)
    r = resolvent_diag(dsq, -1.0 + 0j)
    np.testing.assert_allclose(r.values([0, 1]).ravel(), [-1.0, -0.5])
    assert r.growth_order == -2.0


@pytest.mark.parametrize('lam', [0j, 1e-14 + 0j])
def test_resolvent_diag_on_spectrum(lam):
    dsq = DiagonalFunction(FULL, lambda k: k ** 2.0, growth_order=2.0, lower_bound=0.0)
    with pytest.raises(SpectrumProximityError):
        resolvent_diag(dsq, lam)


def test_resolvent_diag_inside_spectrum_raises_when_evaluated():
    dsq = DiagonalFunction(FULL, lambda k: k ** 2.0, growth_order=2.0, lower_bound=0.0)
    r = resolvent_diag(dsq, 4.0 + 0j)
    with pytest.raises(SpectrumProximityError):
        r.values([1, 2, 3])


def test_finite_section_of_shift():
    m = finite_section(shift(FULL, 1), 2)
    assert m.shape == (5, 5)
    np.testing.assert_array_equal(np.diag(m, -1), np.ones(4))
    assert np.count_nonzero(m) == 4


def test_finite_section_on_half_lattice():
    m = finite_section(shift(HALF, -1), 3)
    assert m.shape == (4, 4)
    np.testing.assert_array_equal(np.diag(m, 1), np.ones(3))


def test_finite_section_radius_too_small():
    with pytest.raises(NcgiValueError):
        finite_section(shift(FULL, 3), 2)


@pytest.mark.parametrize('basis, rule, kwargs, expected, tol', [
    (FULL, lambda k: 1.0 / (1.0 + k ** 2.0), {'growth_order': -2.0},
     math.pi / math.tanh(math.pi), 1e-6),
    (HALF, lambda k: 1.0 / (1.0 + k) ** 2, {'growth_order': -2.0},
     math.pi ** 2 / 6, 1e-6),
    (FULL, lambda k: k * 1.0, {'support': (-3, 4)}, 4.0, 1e-14),
])
def test_trace_known_sums(basis, rule, kwargs, expected, tol):
    result = trace(DiagonalFunction(basis, rule, **kwargs), tol=1e-8)
    assert abs(result.value - expected) < tol
    assert abs(result.value - expected) <= result.tail_bound + 1e-14
    assert result.tail_bound <= 1e-8


def test_trace_bound_covers_alternating_tail():
    # no sign-coherent tail, so the value is the bare partial sum
    a = DiagonalFunction(HALF, lambda k: (-1.0) ** k / (1.0 + k) ** 1.5, growth_order=-1.5)
    exact = (1.0 - 2.0 ** -0.5) * zeta(1.5)
    result = trace(a, tol=1e-2)
    assert abs(result.value - exact) <= result.tail_bound <= 1e-2


def test_trace_with_envelope():
    a = DiagonalFunction(HALF, lambda k: 1.0 / (1.0 + k) ** 2, growth_order=-2.0)
    result = trace(a, tol=1e-3, envelope=lambda x: x ** -2.0)
    assert result.tail_bound <= 1e-3
    assert abs(result.value - math.pi ** 2 / 6) <= 1e-3


def test_trace_without_diagonal_is_zero():
    assert trace(shift(FULL, 1)).value == 0


def test_trace_not_summable():
    a = DiagonalFunction(FULL, lambda k: (1.0 + np.abs(k)) ** -0.5, growth_order=-0.5)
    with pytest.raises(NonSummableError):
        trace(a)


def test_trace_budget_exhausted():
    a = DiagonalFunction(FULL, lambda k: (1.0 + np.abs(k)) ** -1.5, growth_order=-1.5)
    with pytest.raises(ToleranceNotReachedError):
        trace(a, tol=1e-14, start=8, budget=64)
