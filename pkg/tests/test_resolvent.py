import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma

from ncgilab.exceptions import ConvergenceError, NcgiValueError, PreconditionError
from ncgilab.quadrature import beta_s_factor
from ncgilab.resolvent import (
    ContourSpec,
    ExpectationRequest,
    ResolventCocycle,
    TransgressionCochain,
    bracket,
    chern_endpoint,
    continuation,
    decay_in_r,
    duplication_residual,
    endpoint_s_integral,
    eta,
    eta_recursion_residual,
    expectation,
    higson_factor,
    phi_component,
    psi_cochain,
    refinement_check,
    relative_residual,
    verify_commutator_identity,
    verify_cyclic_property,
    verify_d_migration,
    verify_double_commutator_identity,
    verify_dt_law,
    verify_lambda_trick,
    verify_s_trick,
    verify_square_reduction,
    verify_telescoping,
    verify_transgression,
)
from ncgilab.triple import get_model

from .helpers.oracles import direct_sum, shifted_circle_zeta


IDENTITY_TOL = 1e-5


@pytest.fixture(scope='module')
def words(shifted_circle):
    """Generators and their commutators with D on the shifted circle."""
    g = shifted_circle.generators
    u, us = g['u'], g['u*']
    return {'u': u, 'u*': us, 'one': shifted_circle.identity, 'D': shifted_circle.D}


@pytest.mark.parametrize('kwargs', [
    {'abscissa': 0.0},
    {'abscissa': 0.5},
    {'method': 'simpson'},
    {'tol': 0.0},
])
def test_contour_spec_validation(kwargs):
    with pytest.raises(NcgiValueError):
        ContourSpec(**kwargs)


def test_contour_spec_deformed_and_refined():
    spec = ContourSpec()
    assert spec.deformed(0.25).abscissa == pytest.approx(0.03125)
    assert spec.deformed(100.0).abscissa == spec.abscissa
    fine = spec.refined()
    assert fine.tol == spec.tol / 2 and fine.epsrel == spec.epsrel / 2


@pytest.mark.parametrize('kwargs', [{'t': 1.5}, {'t': -0.1}, {'s': -1.0}])
def test_request_validation(shifted_circle, kwargs):
    with pytest.raises(NcgiValueError):
        ExpectationRequest([shifted_circle.identity], **kwargs)


@pytest.mark.parametrize('s, t, r', [(0.0, 1.0, 1.0), (0.5, 1.0, 1.5), (2.0, 0.0, 1.0), (0.5, 0.5, 2.5)])
def test_zeroth_bracket_is_weighted_trace(shifted_circle, s, t, r):
    p = 0.5 + r
    expected = direct_sum(lambda k: (t + s * s + (k + 0.5) ** 2) ** -p)
    value = bracket(shifted_circle, [shifted_circle.identity], s=s, t=t, r=r)
    assert value == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize('alpha, r', [(0, 1.0), (1, 1.5), (2, 2.0)])
def test_moment_is_beta_integral(shifted_circle, alpha, r):
    p = 0.5 + r
    sigma = p - (alpha + 1) / 2.0
    expected = beta_s_factor(alpha, p) * direct_sum(lambda k: (1.0 + (k + 0.5) ** 2) ** -sigma)
    value = bracket(shifted_circle, [shifted_circle.identity], r=r, alpha=alpha)
    assert value == pytest.approx(expected, rel=1e-9)


def test_bracket_with_shifts_is_divided_difference(shifted_circle, words):
    # <u*, u>: modes k -> k + 1 -> k, g[w_k, w_{k+1}] with g(x) = x**-p
    r = 1.0
    p = 0.5 + r

    def mode(k):
        a = 1.0 + (k + 0.5) ** 2
        b = 1.0 + (k + 1.5) ** 2
        span = np.where(a == b, 1.0, b - a)
        return np.where(a == b, -p * a ** (-p - 1), (b ** -p - a ** -p) / span)
    expected = direct_sum(mode)
    value = bracket(shifted_circle, [words['u*'], words['u']], r=r)
    assert value == pytest.approx(expected, rel=1e-9)


def test_unbalanced_offsets_vanish(shifted_circle, words):
    assert bracket(shifted_circle, [words['u'], words['u']], r=1.0) == 0


def test_non_summable_expectation(shifted_circle):
    with pytest.raises(ConvergenceError):
        bracket(shifted_circle, [shifted_circle.identity], r=0.0)


def test_t_below_one_needs_gap(circle):
    with pytest.raises(NcgiValueError):
        bracket(circle, [circle.identity], r=1.0, t=0.5)


@pytest.mark.parametrize('r', [1.0, 0.25 + 0.5j, -0.2, -0.35 + 1j])
def test_continued_zeroth_bracket(shifted_circle, r):
    value = bracket(shifted_circle, [shifted_circle.identity], r=r, continued=True)
    assert value == pytest.approx(shifted_circle_zeta(0.5 + r), rel=1e-7)


def test_continued_agrees_with_trace(shifted_circle, words):
    ops = [words['u*'], words['u']]
    direct = bracket(shifted_circle, ops, r=1.0)
    continued = bracket(shifted_circle, ops, r=1.0, continued=True)
    assert continued == pytest.approx(direct, rel=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize('alpha', [None, 1])
def test_quadrature_agrees_with_residues(shifted_circle, words, alpha):
    ops = [words['u*'], words['u']]
    spec = ContourSpec(method='quadrature', tol=1e-8)
    numeric = bracket(shifted_circle, ops, r=1.5, alpha=alpha, spec=spec)
    exact = bracket(shifted_circle, ops, r=1.5, alpha=alpha)
    assert numeric == pytest.approx(exact, rel=1e-6)


def test_double_bracket_inserts_dirac(shifted_circle, words):
    ops = [words['u*'], words['u']]
    D = words['D']
    value = bracket(shifted_circle, ops, r=2.0, double_bracket=True)
    expected = (bracket(shifted_circle, [ops[0], D, ops[1]], r=2.0)
                + bracket(shifted_circle, [ops[0], ops[1], D], r=2.0))
    assert value == pytest.approx(expected)


@pytest.mark.parametrize('m, parity, expected', [
    (0, 0, 2.0),
    (1, 0, 2 * math.sqrt(math.pi)),
    (1, 1, -(1 + 1j) * 2 * math.sqrt(math.pi)),
    (2, 1, -(1 + 1j) * 4.0),
])
def test_eta(m, parity, expected):
    assert eta(m, parity) == pytest.approx(expected)


@pytest.mark.parametrize('parity', [0, 1])
def test_eta_recursion(parity):
    assert eta_recursion_residual(8, parity) < 1e-12


@pytest.mark.parametrize('M', range(1, 9))
def test_duplication(M):
    assert duplication_residual(M) < 1e-12


@pytest.mark.parametrize('M, q, r', [(1, 1, 1.0), (3, 2, 0.5), (2, 3.5, 2.0)])
def test_endpoint_s_integral(M, q, r):
    p = q / 2.0 + r
    direct, _ = quad(lambda s: s ** M * (s * s + 1) ** (-M - 1 - p), 0, np.inf)
    assert endpoint_s_integral(M, q, r) == pytest.approx(direct, rel=1e-9)


def test_higson_factor():
    assert higson_factor(0.5) == pytest.approx(math.sqrt(math.pi))
    assert higson_factor(1.0) == pytest.approx(math.sqrt(math.pi) / gamma(1.5))


def test_relative_residual():
    assert relative_residual(1.0, 1.0) == 0.0
    assert relative_residual(0.0, 0.5) == 0.5
    assert relative_residual(3.0, 2.0) == pytest.approx(0.25)


@pytest.mark.parametrize('model, degrees', [
    ('circle-shifted', [1]),
    ('power:2', [1, 3]),
    ('oscillator', [0, 2]),
], indirect=['model'])
def test_cocycle_family_degrees(model, degrees):
    assert sorted(ResolventCocycle(model, 2.0).family()) == degrees
    assert sorted(TransgressionCochain(model, 2.0).family()) == degrees


def test_phi_half_plane(shifted_circle, words):
    with pytest.raises(ConvergenceError):
        phi_component(shifted_circle, 1, -0.5, 1.0, (words['u*'], words['u']))


def test_phi_of_winding(shifted_circle, words):
    # [D, u] = u, so phi_1 is eta_1 times a moment of <u*, u>
    a = (words['u*'], words['u'])
    value = phi_component(shifted_circle, 1, 2.0, 1.0, a)
    moment = bracket(shifted_circle, [words['u*'], words['u']], r=2.0, alpha=1)
    assert value == pytest.approx(eta(1, 1) * moment)
    assert continuation(shifted_circle, 1, 2.0, a) == pytest.approx(value, rel=1e-8)


def test_s_trick(shifted_circle, words):
    ops = [words['u*'], words['u']]
    assert verify_s_trick(shifted_circle, ops, 1, 2.0).residual < IDENTITY_TOL
    assert verify_s_trick(shifted_circle, ops, 1, 2.0, double=True).residual < IDENTITY_TOL


@pytest.mark.parametrize('t', [1.0, 0.5])
def test_lambda_trick(shifted_circle, words, t):
    ops = [words['u*'], words['u']]
    assert verify_lambda_trick(shifted_circle, ops, 1.5, s=0.5, t=t).residual < IDENTITY_TOL


@pytest.mark.parametrize('t', [1.0, 0.5])
def test_square_reduction(shifted_circle, words, t):
    ops = [words['u*'], words['u']]
    assert verify_square_reduction(shifted_circle, ops, 1, 2.0, t).residual < IDENTITY_TOL


@pytest.mark.parametrize('j', [1, 2, 3])
def test_commutator_identity(shifted_circle, words, j):
    ops = [words['u*'], words['u*'], words['u'], words['u']]
    assert verify_commutator_identity(shifted_circle, ops, j).residual < IDENTITY_TOL


def test_commutator_identity_index(shifted_circle, words):
    with pytest.raises(NcgiValueError):
        verify_commutator_identity(shifted_circle, [words['u*'], words['u']], 0)


def test_d_migration(shifted_circle, words):
    ops = [words['u*'], words['D'], words['u']]
    assert verify_d_migration(shifted_circle, ops).residual < IDENTITY_TOL


@pytest.mark.parametrize('names, double', [
    (('u*', 'u', 'D'), False),
    # the double-bracket cyclic property needs total degree = A = 0 on the circle
    (('u*', 'u'), True),
])
def test_cyclic_property(shifted_circle, words, names, double):
    ops = [words[name] for name in names]
    assert verify_cyclic_property(shifted_circle, ops, double=double).residual < IDENTITY_TOL


def test_telescoping(shifted_circle, words):
    ops = [words['u*'], words['u*'], words['u'], words['u']]
    assert verify_telescoping(shifted_circle, ops).residual < IDENTITY_TOL


def test_double_commutator_identity(shifted_circle, words):
    # total degree = P = 1
    ops = [words['u*'], words['D'], words['u']]
    assert verify_double_commutator_identity(shifted_circle, ops).residual < IDENTITY_TOL


def test_identities_on_even_model(oscillator):
    g = oscillator.generators
    ops = [g['v*'], g['v']]
    assert verify_s_trick(oscillator, ops, 1, 2.0).residual < IDENTITY_TOL
    assert verify_cyclic_property(oscillator, [g['v*'], oscillator.D, g['v']]).residual < IDENTITY_TOL


@pytest.mark.slow
@pytest.mark.parametrize('t', [0.0, 0.5, 1.0])
def test_transgression(shifted_circle, words, t):
    a = (words['u*'], words['u'])
    assert verify_transgression(shifted_circle, 1, 2.0, t, a).residual < IDENTITY_TOL


def test_transgression_parity(shifted_circle, words):
    with pytest.raises(NcgiValueError):
        verify_transgression(shifted_circle, 2, 2.0, 1.0, (words['u*'],) * 3)


@pytest.mark.slow
def test_dt_law(shifted_circle, words):
    law = verify_dt_law(shifted_circle, 1, 2.0, (words['u*'], words['u']), t=0.5, h=4e-3)
    assert law.residual < 1e-4
    assert law.order > 1.5


def test_dt_law_step_inside_interval(shifted_circle, words):
    with pytest.raises(NcgiValueError):
        verify_dt_law(shifted_circle, 1, 2.0, (words['u*'], words['u']), t=0.999, h=1e-2)


@pytest.mark.slow
def test_chern_endpoint(shifted_circle, words):
    endpoint = chern_endpoint(shifted_circle, 2.0, (words['u*'], words['u']))
    assert endpoint.relative_difference < 1e-5
    # gamma F [F, u*] [F, u] lives on the single mode k = -1
    assert endpoint.trace == pytest.approx(4.0)


def test_chern_endpoint_needs_gap(circle):
    u = circle.generators['u']
    with pytest.raises(NcgiValueError):
        chern_endpoint(circle, 2.0, (u.adjoint(), u))


@pytest.mark.slow
def test_psi_cochain_is_finite(shifted_circle, words):
    value = psi_cochain(shifted_circle, 0.5, 1, 2.0, (words['u*'], words['u']))
    assert np.isfinite(value)


@pytest.mark.slow
def test_decay_in_r(shifted_circle, words):
    values, decreasing = decay_in_r(shifted_circle, 1, (words['u*'], words['u']))
    assert decreasing
    assert len(values) == 4


def test_refinement(shifted_circle):
    def evaluate(spec):
        return expectation(shifted_circle, ExpectationRequest([shifted_circle.identity], r=1.0,
                                                              spec=spec))
    stable, change, _ = refinement_check(evaluate)
    assert stable
    assert change < 1e-9


def test_other_models_evaluate():
    model = get_model('double:circle-shifted:0.5')
    u = model.unitary(1)
    value = bracket(model, [u.adjoint(), u], r=2.0)
    assert np.isfinite(value)


def test_double_bracket_identities_check_total_degree(shifted_circle, words):
    with pytest.raises(PreconditionError):
        verify_cyclic_property(shifted_circle, [words['u*'], words['u'], words['D']], double=True)
    with pytest.raises(PreconditionError):
        verify_double_commutator_identity(shifted_circle, [words['u*'], words['u']])
