import pytest

from ncgilab.campaigns import (
    BUILDERS,
    CampaignContext,
    Check,
    Outcome,
    build_checks,
    replay,
    run_campaign,
    run_check,
)
from ncgilab.exceptions import LaurentFitError, NcgiValueError, PreconditionError


@pytest.fixture
def ctx(run_config):
    return CampaignContext(run_config)


def make_check(evaluate, family='exact'):
    return Check('residue/synthetic', 'synthetic', 'residue', family, {'z': 1.0}, evaluate)


def test_check_ids_are_unique_and_scoped(ctx):
    checks = build_checks(ctx, ctx.config.selected_campaigns)
    ids = [c.check_id for c in checks]
    assert len(ids) == len(set(ids))
    assert {i.split('/')[0] for i in ids} == set(BUILDERS)
    assert all(c.campaign == c.check_id.split('/')[0] for c in checks)


def test_tuples_are_seeded(run_config):
    first = [tuple(a.name for a in t) for t in CampaignContext(run_config).tuples(2)]
    second = [tuple(a.name for a in t) for t in CampaignContext(run_config).tuples(2)]
    assert first == second
    assert len(set(first)) == len(first)


def test_unitary_tuple_needs_odd_model(run_config):
    ctx = CampaignContext(run_config.updated({'model': 'oscillator'}))
    with pytest.raises(PreconditionError):
        ctx.unitary_tuple(1)


@pytest.mark.parametrize('evaluate, verdict', [
    (lambda: Outcome({}, 0.0), 'PASS'),
    (lambda: Outcome({}, 1.0), 'FAIL'),
    (lambda: Outcome({}, None), 'FAIL'),
    (lambda: Outcome({}, 1.0, True), 'PASS'),
])
def test_run_check_verdicts(ctx, evaluate, verdict):
    assert run_check(ctx, make_check(evaluate)).verdict == verdict


def test_run_check_skips_on_precondition(ctx):
    def evaluate():
        raise PreconditionError('no gap')
    result = run_check(ctx, make_check(evaluate))
    assert result.verdict == 'SKIP'
    assert result.values == {'reason': 'no gap'}
    assert result.inputs == {'z': 1.0, 'model': 'circle-shifted'}


@pytest.mark.parametrize('error', [
    NcgiValueError('Expected [F, u] to decay'),
    LaurentFitError('bad fit'),
])
def test_run_check_fails_on_other_errors(ctx, error):
    def evaluate():
        raise error
    result = run_check(ctx, make_check(evaluate))
    assert result.verdict == 'FAIL'
    assert result.values['error'] == '{}: {}'.format(type(error).__name__, error)


def test_skipped_checks_on_gapless_model(run_config):
    report = replay(run_config.updated({'model': 'circle'}), 'identities/orientation/1/s=0.5/t=0/r=1.5')
    assert report.records[0].verdict == 'SKIP'


@pytest.mark.parametrize('check_id', [
    'residue/combinatorics',
    'transgression/gamma-duplication/M=4',
    'transgression/eta-recursion',
])
def test_replay(run_config, check_id):
    report = replay(run_config, check_id)
    assert [r.check_id for r in report.records] == [check_id]
    assert report.records[0].verdict == 'PASS'


@pytest.mark.parametrize('check_id', ['nothing/at/all', 'residue/nothing'])
def test_replay_unknown(run_config, check_id):
    with pytest.raises(NcgiValueError):
        replay(run_config, check_id)


def test_replay_is_reproducible(run_config):
    first = replay(run_config, 'residue/combinatorics')
    second = replay(run_config, 'residue/combinatorics')
    assert first == second


@pytest.mark.slow
def test_residue_campaign(run_config):
    report = run_campaign(run_config.updated({'campaigns': ['residue']}))
    assert report.records
    assert report.exit_status == 0, [r.check_id for r in report.failed]


@pytest.mark.slow
def test_index_campaign_banner(run_config):
    config = run_config.updated({'campaigns': ['index'], 'index': {'k0': 16, 'windings': [1, 2]}})
    report = run_campaign(config)
    assert report.banners[0].startswith('calibrated Ch_m(u) constant')
    assert report.exit_status == 0, [r.check_id for r in report.failed]


@pytest.mark.parametrize('orientation, verdict', [(-1, 'PASS'), (1, 'FAIL')])
def test_orientation_check_sees_the_contour(run_config, monkeypatch, orientation, verdict):
    monkeypatch.setattr('ncgilab.quadrature.ORIENTATION', orientation)
    report = replay(run_config, 'identities/orientation/1/s=0.5/t=1/r=1.5')
    assert report.records[0].verdict == verdict
