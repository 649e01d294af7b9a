import numpy as np
import pytest

from ncgilab.bandop import DiagonalFunction, compose, identity, shift, trace
from ncgilab.cyclic import (
    B_coboundary,
    Chain,
    Cochain,
    b_coboundary,
    bB_boundary,
    bB_coboundary,
    boundary_B,
    boundary_b,
    ch_projection,
    ch_projection_cycle,
    ch_unitary,
    ch_unitary_cycle,
    commutator_cochain,
    is_bB_cycle,
    is_cyclic,
    is_hochschild_cycle,
    pair,
    probe_panel,
    projection_normalization,
    random_tuples,
    unitary_normalization,
)
from ncgilab.exceptions import NcgiValueError


@pytest.fixture(scope='module')
def local_ops(circle):
    """Finite-support operators on the circle, so that every trace is exact."""
    basis = circle.basis
    f = DiagonalFunction(basis, lambda k: 1.0 / (1.0 + k ** 2.0), support=(-4, 4), name='f')
    g = DiagonalFunction(basis, lambda k: np.exp(0.3j * k), support=(-3, 5), name='g')
    u = shift(basis, 1)
    return [f, g, compose(f, u), compose(u, g), compose(g, shift(basis, -2))]


@pytest.fixture(scope='module')
def local_cochains(circle):
    weight = DiagonalFunction(circle.basis, lambda k: np.exp(-0.1 * k ** 2.0),
                              support=(-6, 6), name='w')
    return {m: commutator_cochain(weight, circle.D, m) for m in range(4)}


def tuples(ops, degree, count=6, seed=0):
    return random_tuples(ops, degree, count, seed)


@pytest.mark.parametrize('degree', [0, 1, 2])
def test_b_squared_vanishes(local_ops, local_cochains, degree):
    bb = b_coboundary(b_coboundary(local_cochains[degree]))
    for a in tuples(local_ops, degree + 2):
        assert abs(bb(*a)) < 1e-12


@pytest.mark.parametrize('degree', [2, 3])
def test_B_squared_vanishes(local_ops, local_cochains, degree):
    BB = B_coboundary(B_coboundary(local_cochains[degree]))
    for a in tuples(local_ops, degree - 2):
        assert abs(BB(*a)) < 1e-12


@pytest.mark.parametrize('degree', [1, 2])
def test_b_and_B_anticommute(local_ops, local_cochains, degree):
    phi = local_cochains[degree]
    bB = b_coboundary(B_coboundary(phi))
    Bb = B_coboundary(b_coboundary(phi))
    for a in tuples(local_ops, degree):
        assert abs(bB(*a) + Bb(*a)) < 1e-12


@pytest.mark.parametrize('degree', [0, 1, 2])
def test_b_is_adjoint_to_chain_boundary(local_ops, local_cochains, degree):
    phi = local_cochains[degree]
    c = Chain([(1.0 + 0.5j * i, a) for i, a in enumerate(tuples(local_ops, degree + 1, 3))])
    lhs = pair(b_coboundary(phi), c).value
    rhs = pair(phi, boundary_b(c)).value
    assert abs(lhs - rhs) < 1e-12


@pytest.mark.parametrize('degree', [1, 2, 3])
def test_B_is_adjoint_to_chain_boundary(local_ops, local_cochains, degree):
    phi = local_cochains[degree]
    c = Chain([(2.0 - 1j * i, a) for i, a in enumerate(tuples(local_ops, degree - 1, 3))])
    lhs = pair(B_coboundary(phi), c).value
    rhs = pair(phi, boundary_B(c)).value
    assert abs(lhs - rhs) < 1e-12


def test_family_coboundary_degrees(local_cochains):
    family = {1: local_cochains[1], 3: local_cochains[3]}
    image = bB_coboundary(family)
    assert sorted(image) == [0, 2, 4]


def test_family_boundary_degrees(local_ops):
    family = {0: Chain([(1, (local_ops[0],))]), 2: Chain([(1, tuple(local_ops[:3]))])}
    assert sorted(bB_boundary(family)) == [1, 3]


def test_cochain_arithmetic(local_ops, local_cochains):
    phi = local_cochains[1]
    a = tuple(local_ops[:2])
    assert (phi + phi)(*a) == pytest.approx(2 * phi(*a))
    assert (3 * phi - phi)(*a) == pytest.approx(2 * phi(*a))
    with pytest.raises(NcgiValueError):
        phi + local_cochains[2]
    with pytest.raises(NcgiValueError):
        phi(*local_ops[:3])


def test_cochain_negative_degree():
    with pytest.raises(NcgiValueError):
        Cochain(-1, lambda a: 0)


def test_B_of_degree_zero():
    with pytest.raises(NcgiValueError):
        B_coboundary(Cochain(0, lambda a: 0))


def test_chain_validation(local_ops):
    with pytest.raises(NcgiValueError):
        Chain([(1, (local_ops[0],)), (1, tuple(local_ops[:2]))])
    with pytest.raises(NcgiValueError):
        Chain([])
    with pytest.raises(NcgiValueError):
        Chain([(1, (local_ops[0],))], degree=2)
    with pytest.raises(NcgiValueError):
        Chain([], degree=0) + Chain([], degree=1)
    with pytest.raises(NcgiValueError):
        boundary_b(Chain([], degree=0))
    assert Chain([], degree=3).degree == 3


def test_pair_validation(local_ops, local_cochains):
    odd = Chain([(1, tuple(local_ops[:2]))])
    with pytest.raises(NcgiValueError):
        pair({0: local_cochains[0]}, odd)
    with pytest.raises(NcgiValueError):
        pair({3: local_cochains[3]}, odd)
    # zero coefficients need no counterpart
    assert pair({3: local_cochains[3]}, Chain([(0, tuple(local_ops[:2]))])).terms == 0


@pytest.mark.parametrize('m, expected', [(1, 1), (3, -1), (5, 2), (7, -6)])
def test_unitary_normalization(m, expected):
    assert unitary_normalization(m) == expected
    assert unitary_normalization(m, -2.0) == -2.0 * expected


@pytest.mark.parametrize('m, expected', [(0, 1), (2, -2), (4, 12), (6, -120)])
def test_projection_normalization(m, expected):
    assert projection_normalization(m) == expected


def test_ch_unitary(shifted_circle):
    u = shifted_circle.unitary(1)
    chain = ch_unitary(u, 3, c1=-1.0)
    assert chain.degree == 3
    assert chain.normalization == 1.0
    [(coef, words)] = chain.to_records()
    assert coef == [1.0, 0.0]
    assert words == ['u^1*', 'u^1', 'u^1*', 'u^1']


@pytest.mark.parametrize('m', [0, 2, -1])
def test_ch_unitary_even_degree(shifted_circle, m):
    with pytest.raises(NcgiValueError):
        ch_unitary(shifted_circle.unitary(1), m)


def test_ch_projection(oscillator):
    p0 = oscillator.generators['p0']
    assert ch_projection(p0, 0).terms[0][1] == (p0,)
    chain = ch_projection(p0, 2)
    assert chain.normalization == -2
    assert [a.name for a in chain.terms[0][1]] == ['(p0-1/2)', 'p0', 'p0']


def test_ch_projection_rejects(oscillator):
    p0 = oscillator.generators['p0']
    with pytest.raises(NcgiValueError):
        ch_projection(p0, 1)
    with pytest.raises(NcgiValueError):
        ch_projection(oscillator.generators['v'], 0)
    with pytest.raises(NcgiValueError):
        ch_projection(2.0 * p0, 2)


def test_cyclic_cochain(circle, local_ops):
    # tau(a0 [D, a1]) is cyclic on finite-rank arguments
    psi = commutator_cochain(identity(circle.basis), circle.D, 1)
    result = is_cyclic(psi, tuples(local_ops, 1))
    assert result.passed


def test_non_cyclic_cochain(local_ops):
    plain = Cochain(1, lambda a: trace(compose(a[0], a[1])).value)
    f = local_ops[0]
    assert not is_cyclic(plain, [(f, f)]).passed


@pytest.mark.parametrize('n', [1, -2])
def test_unitary_chain_is_hochschild_cycle(circle, n):
    panel = probe_panel(circle, 0)
    assert is_hochschild_cycle(ch_unitary(circle.unitary(n), 1), panel).passed


def test_isometry_chain_is_not_a_cycle(oscillator):
    v = oscillator.generators['v']
    panel = probe_panel(oscillator, 0)
    result = is_hochschild_cycle(ch_unitary(v, 1), panel)
    assert not result.passed
    assert result.residual > 0.1


def test_degree_zero_chain_is_a_cycle(oscillator):
    chain = ch_projection(oscillator.generators['p0'], 0)
    assert is_hochschild_cycle(chain, []).passed


def test_unitary_family_is_bB_cycle(circle):
    family = ch_unitary_cycle(circle.unitary(1), 3)
    panels = {d: probe_panel(circle, d) for d in (0, 2)}
    assert is_bB_cycle(family, panels).passed


def odd_panel(model):
    """Degree-1 cochains that do not vanish on even elements: an off-diagonal
    weight and an even commutator partner."""
    basis = model.basis
    f = DiagonalFunction(basis, lambda k: np.stack([1.0 / (1.0 + k), 0.5 / (1.0 + k)], axis=1),
                         support=(0, 5), name='f')
    v = model.generators['v']
    X = v + model.generators['v*']
    return [commutator_cochain(compose(f, v), X, 1), commutator_cochain(compose(f, v.adjoint()), X, 1)]


def test_projection_family_is_bB_cycle(oscillator):
    family = ch_projection_cycle(oscillator.generators['p0'], 2)
    assert is_bB_cycle(family, {1: odd_panel(oscillator)}).passed


def test_projection_family_with_wrong_constant_is_not_a_cycle(oscillator):
    family = ch_projection_cycle(oscillator.generators['p0'], 2)
    family[2] = 2.0 * family[2]
    panels = {1: odd_panel(oscillator)}
    assert not is_bB_cycle(family, panels).passed


def test_random_tuples_are_seeded(local_ops):
    first = random_tuples(local_ops, 2, count=5, seed=4)
    assert first == random_tuples(local_ops, 2, count=5, seed=4)
    assert all(len(t) == 3 for t in first)
