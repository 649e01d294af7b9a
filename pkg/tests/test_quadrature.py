import math

import numpy as np
import pytest
from scipy.integrate import quad

from ncgilab.quadrature import (
    beta_s_factor,
    contour_integral,
    power_divided_difference,
    rising,
    s_integral,
    simplex_rule,
)


def naive_divided_difference(x, sigma):
    """Textbook recursion for distinct points."""
    if len(x) == 1:
        return x[0] ** -sigma
    return ((naive_divided_difference(x[1:], sigma) - naive_divided_difference(x[:-1], sigma))
            / (x[-1] - x[0]))


@pytest.mark.parametrize('sigma, n, expected', [
    (0.5, 0, 1.0),
    (0.5, 3, 0.5 * 1.5 * 2.5),
    (1j, 2, 1j * (1 + 1j)),
])
def test_rising(sigma, n, expected):
    assert rising(sigma, n) == pytest.approx(expected)


@pytest.mark.parametrize('points', [
    [1.0],
    [1.0, 2.0],
    [0.5, 3.0, 7.0],
    [1.0 + 1j, 2.0, 4.0 - 0.5j, 9.0],
])
@pytest.mark.parametrize('sigma', [0.5, 2.0, 1.5 + 0.7j])
def test_divided_difference_distinct(points, sigma):
    x = np.array(points, dtype=complex)
    value = power_divided_difference([x], sigma)[0]
    assert value == pytest.approx(naive_divided_difference(x, sigma), rel=1e-10)


def test_divided_difference_rows_are_independent():
    rows = [[1.0, 2.0], [2.0, 1.0], [3.0, 5.0]]
    values = power_divided_difference(rows, 1.0)
    # order of the points does not matter
    assert values[0] == pytest.approx(values[1])
    assert values[2] == pytest.approx(-1.0 / 15.0)


@pytest.mark.parametrize('sigma, n', [(0.5, 1), (1.5, 2), (2.0 + 1j, 3)])
def test_divided_difference_confluent(sigma, n):
    x = 2.5
    value = power_divided_difference([[x] * (n + 1)], sigma)[0]
    expected = (-1) ** n * rising(sigma, n) / math.factorial(n) * x ** (-sigma - n)
    assert value == pytest.approx(expected, rel=1e-12)


def test_divided_difference_nearly_confluent_is_continuous():
    exact = power_divided_difference([[3.0, 3.0]], 1.5)[0]
    near = power_divided_difference([[3.0, 3.0 + 1e-9]], 1.5)[0]
    assert near == pytest.approx(exact, rel=1e-8)


@pytest.mark.parametrize('m', [0, 1, 2, 3])
def test_simplex_rule_volume(m):
    nodes, weights = simplex_rule(m)
    assert nodes.shape[1] == m + 1
    np.testing.assert_allclose(nodes.sum(axis=1), 1.0)
    assert np.all(nodes >= 0)
    assert weights.sum() == pytest.approx(1.0 / math.factorial(m))


@pytest.mark.parametrize('points', [[1.0, 2.0, 4.0], [0.5, 0.7, 1.5, 3.0]])
def test_simplex_rule_reproduces_divided_difference(points):
    # Hermite-Genocchi: g[x_0..x_m] is the simplex integral of g^(m)
    m = len(points) - 1
    sigma = 1.5
    nodes, weights = simplex_rule(m, order=16)
    y = nodes @ np.array(points)
    integrand = (-1) ** m * rising(sigma, m) * y ** (-sigma - m)
    value = np.sum(weights * integrand)
    expected = power_divided_difference([points], sigma)[0]
    assert value == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize('alpha, p, c', [(0, 1, 1.0), (0, 1, 4.0), (2, 3, 2.0), (1, 2.5, 0.5)])
def test_beta_s_factor(alpha, p, c):
    sigma = p - (alpha + 1) / 2.0
    direct, _ = quad(lambda s: s ** alpha * (s * s + c) ** -p, 0, np.inf)
    assert beta_s_factor(alpha, p) * c ** -sigma == pytest.approx(direct, rel=1e-9)


def test_s_integral_scalar():
    value, error = s_integral(lambda s: 1.0 / (s * s + 4.0), 0)
    assert value == pytest.approx(math.pi / 4, rel=1e-10)
    assert error < 1e-8


def test_s_integral_vector():
    value, _ = s_integral(lambda s: np.array([1.0, 1j]) / (s * s + 1.0) ** 2, 2)
    np.testing.assert_allclose(value, np.array([1.0, 1j]) * math.pi / 4, rtol=1e-9)


@pytest.mark.parametrize('p', [0.5, 1.0, 2.0, 0.5 + 1j])
def test_contour_integral_matches_divided_difference(p):
    points = np.array([[1.0, 2.0], [3.0, 5.0], [1.0, 1.5]], dtype=complex)
    value, error = contour_integral(points, p)
    expected = power_divided_difference(points, p)
    np.testing.assert_allclose(value, expected, rtol=1e-7, atol=1e-9)
    assert error < 1e-6


def test_contour_integral_slow_decay_stays_finite():
    # 40 / decay would push sinh past the float range
    points = np.array([[2.0]], dtype=complex)
    value, error = contour_integral(points, 0.05)
    assert np.isfinite(error)
    np.testing.assert_allclose(value, [2.0 ** -0.05], rtol=1e-6)
