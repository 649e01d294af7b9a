import numpy as np
import pytest

from ncgilab.bandop import graded_commutator
from ncgilab.pdo import (
    abs_d1,
    boundedness_trend,
    delta1,
    delta_norm,
    estimate_order,
    factorization_check,
    iterate,
    nabla,
    operator_norm_bound,
    sigma1,
    verify_nabla_expansion,
    verify_sigma_expansion,
)
from ncgilab.triple import phase


K = np.array([-7, -1, 0, 2, 30])


def test_abs_d1(circle):
    np.testing.assert_allclose(abs_d1(circle).values(K).ravel(), np.sqrt(1.0 + K ** 2))
    np.testing.assert_allclose(abs_d1(circle, -2).values(K).ravel(), 1.0 / (1.0 + K ** 2))


def test_delta1_of_shift(circle):
    u = circle.generators['u']
    w = np.sqrt(1.0 + K ** 2.0)
    w_next = np.sqrt(1.0 + (K + 1.0) ** 2)
    np.testing.assert_allclose(delta1(circle, u).band(1, K)[:, 0, 0], w_next - w, rtol=1e-13)
    np.testing.assert_allclose(delta1(circle, u, 2).band(1, K)[:, 0, 0], (w_next - w) ** 2,
                               rtol=1e-12)
    assert delta1(circle, u, 0) is u


def test_delta1_far_out_is_accurate(circle):
    # no cancellation: w_{k+1} - w_k tends to 1; D**2 is exact below 2**53
    u = circle.generators['u']
    value = delta1(circle, u).band(1, [10 ** 7])[0, 0, 0]
    assert value == pytest.approx(1.0, abs=1e-12)


def test_nabla_of_shift(circle):
    u = circle.generators['u']
    np.testing.assert_allclose(nabla(circle, u).band(1, K)[:, 0, 0], 2.0 * K + 1.0)
    np.testing.assert_allclose(iterate(circle, u, 2).band(1, K)[:, 0, 0], (2.0 * K + 1.0) ** 2)
    assert iterate(circle, u, 2).growth_order == 2.0


def test_sigma1_of_shift(circle):
    u = circle.generators['u']
    expected = np.sqrt((1.0 + (K + 1.0) ** 2) / (1.0 + K ** 2))
    np.testing.assert_allclose(sigma1(circle, u).band(1, K)[:, 0, 0], expected)


@pytest.mark.parametrize('model, generator', [
    ('circle', 'u'),
    ('circle-shifted', 'u*'),
    ('power:2', 'u'),
    ('oscillator', 'v'),
    ('oscillator', 'p0'),
], indirect=['model'])
@pytest.mark.parametrize('n', [1, 2, 3])
def test_expansions(model, generator, n):
    b = model.generators[generator]
    assert verify_sigma_expansion(model, b, n).residual < 1e-10
    assert verify_nabla_expansion(model, b, n).residual < 1e-10


@pytest.mark.parametrize('model, names, orders, interpose', [
    ('circle-shifted', ['u', 'u*'], [1, 0], False),
    ('circle-shifted', ['u', 'u*'], [1, 2], False),
    ('circle-shifted', ['u', 'u*'], [0, 1], True),
    ('oscillator', ['v', 'v*'], [2, 1], False),
], indirect=['model'])
def test_factorization_bounded(model, names, orders, interpose):
    report = factorization_check(model, [model.generators[n] for n in names], orders,
                                 interpose, window=1 << 8, cap=1 << 14)
    assert report.bounded


def test_unbounded_trend(circle):
    report = boundedness_trend(circle.D, window=16, cap=1 << 10)
    assert not report.bounded
    assert report.sups == sorted(report.sups)


@pytest.mark.parametrize('model, generator', [
    ('circle', 'u'),
    ('oscillator', 'v'),
], indirect=['model'])
def test_operator_norm_bound_of_isometry(model, generator):
    assert operator_norm_bound(model.generators[generator], 1 << 10) == pytest.approx(1.0)


def test_delta_norm(circle):
    u = circle.generators['u']
    assert delta_norm(circle, u, 0, window=1 << 8) == pytest.approx(1.0)
    assert 1.9 < delta_norm(circle, u, 1, window=1 << 8) <= 2.0 + 1e-12


@pytest.mark.parametrize('model, make, order', [
    ('circle', lambda m: m.D, 1.0),
    ('circle', lambda m: nabla(m, m.generators['u']), 1.0),
    ('circle', lambda m: delta1(m, m.generators['u']), 0.0),
    ('power:2', lambda m: m.D, 1.0),
    ('power:2', lambda m: nabla(m, m.generators['u']), 0.0),
    ('oscillator', lambda m: m.D, 1.0),
], indirect=['model'])
def test_estimate_order(model, make, order):
    estimate = estimate_order(model, make(model))
    assert estimate.order == pytest.approx(order, abs=0.05)


def test_estimate_order_of_finite_rank(oscillator):
    assert estimate_order(oscillator, oscillator.generators['p0']).order == -np.inf


def test_estimate_order_of_sign_commutator(shifted_circle):
    F = phase(shifted_circle).F
    commutator = graded_commutator(F, shifted_circle.generators['u'])
    assert estimate_order(shifted_circle, commutator).order == -np.inf


def test_estimate_order_ignores_rounding_residue(circle):
    # one unit entry at |k| = 16, residue below 1e-14 everywhere else
    T = circle.D.apply(lambda x: np.where(np.abs(x.real) == 16, 1.0, 1e-18 * np.abs(x.real)),
                       growth_order=0.0)
    assert estimate_order(circle, T).order == -np.inf
