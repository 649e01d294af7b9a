"""Campaign registry: every check a run can make, under a stable id.

A check is built lazily from the run configuration and evaluated on
demand, so that a single record can be replayed from its id alone. Ids
read ``<campaign>/<family>/<parameters>``; records are ordered by id.

Verdicts:

- ``PASS`` when the residual is within the scaled tolerance of the check
  family (or the check's own criterion holds),
- ``SKIP`` when the model does not meet a precondition of the check (no
  spectral gap, wrong parity, no unitary generator),
- ``FAIL`` otherwise, including any other ncgilab exception.
"""
import collections
import logging
import time

from cached_property import cached_property

from ncgilab.bandop import compose, graded_commutator, trace, zero
from ncgilab.chern import FredholmModule, chern_character
from ncgilab.cyclic import (
    B_coboundary,
    Chain,
    b_coboundary,
    boundary_B,
    boundary_b,
    ch_unitary,
    ch_unitary_cycle,
    is_cyclic,
    is_hochschild_cycle,
    pair,
    probe_panel,
    random_tuples,
)
from ncgilab.exceptions import NcgiException, NcgiValueError, PreconditionError
from ncgilab.index import (
    T_PATH,
    additivity,
    calibrate_chern_constant,
    even_index_pairing,
    t_path,
    toeplitz_index,
    verify_local_index_formula,
)
from ncgilab.laurent import laurent_fit
from ncgilab.pdo import (
    delta_norm,
    factorization_check,
    verify_nabla_expansion,
    verify_sigma_expansion,
)
from ncgilab.quadrature import s_integral
from ncgilab.report import CheckRecord, Report
from ncgilab.residue import (
    alpha,
    compare_residue_vs_resolvent,
    sigma_coeffs,
    tau_j,
    zeta_direct,
    zeta_eval,
    zeta_recipe,
)
from ncgilab.resolvent import (
    ContourSpec,
    ExpectationRequest,
    ResolventCocycle,
    bracket,
    chern_endpoint,
    continuation,
    decay_in_r,
    duplication_residual,
    endpoint_s_integral,
    eta_recursion_residual,
    expectation,
    higson_factor,
    psi_cochain,
    reduced_phi,
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
from ncgilab.triple import check_invariants, double, get_model


logger = logging.getLogger(__name__)

Check = collections.namedtuple('Check', 'check_id anchor campaign family inputs evaluate')
Check.__doc__ = """One runnable check. ``evaluate()`` returns an :class:`Outcome`."""


class Outcome(collections.namedtuple('Outcome', 'values residual passed')):
    """Result of a check: reported values, a residual (or None) and an
    optional verdict overriding the tolerance comparison."""
    __slots__ = ()

    def __new__(cls, values, residual=None, passed=None):
        return super(Outcome, cls).__new__(cls, values, residual, passed)


SAMPLE_R = (2.0, 3.0)
IDENTITY_DEGREES = (1, 2)


def _label(ops):
    return ','.join(op.name or '?' for op in ops)


def _residual_outcome(result):
    """Outcome from a verifier's ``Residual``."""
    return Outcome({'lhs': result.lhs, 'rhs': result.rhs}, result.residual)


def _check_result_outcome(result):
    return Outcome({}, result.residual)


class CampaignContext(object):
    """Model, numeric settings and shared results of one run.

    :param config: (RunConfig)
    """

    def __init__(self, config):
        self.config = config
        self.model = get_model(config.model)
        self.banners = []

    @cached_property
    def spec(self):
        contour = self.config.contour
        return ContourSpec(
            abscissa=contour['abscissa'], method=contour['method'],
            epsabs=contour['epsabs'], epsrel=contour['epsrel'], limit=contour['limit'],
            tol=contour['tol'], head=self.config.lattice['head'],
        )

    @property
    def radii(self):
        return tuple(self.config.laurent['radii'])

    @property
    def points(self):
        return self.config.laurent['points']

    @property
    def window(self):
        return self.config.probes['window']

    @property
    def k0(self):
        return self.config.index['k0']

    def tuples(self, degree, count=None):
        """Seeded generator tuples of a degree."""
        count = self.config.probes['count'] if count is None else count
        drawn = random_tuples(self.model.generators.values(), degree, 4 * count,
                              seed=self.config.seed + degree)
        unique = collections.OrderedDict()
        for a in drawn:
            unique.setdefault(_label(a), a)
        return list(unique.values())[:count]

    def operator_tuples(self, degree, count=2):
        """``(a_0, [D, a_1], ..., [D, a_m])`` built from seeded tuples."""
        out = []
        for a in self.tuples(degree, count):
            ops = [a[0]]
            for aj in a[1:]:
                c = graded_commutator(self.model.D, aj)
                c.name = 'd{}'.format(aj.name)
                ops.append(c)
            out.append(tuple(ops))
        return out

    def unitary_tuple(self, degree, winding=1):
        """``(u*, u, ..., u*, u)`` with ``degree + 1`` entries."""
        if self.model.parity != 1:
            raise PreconditionError(
                "Expected an odd model for unitary tuples, but {} is even".format(self.model.name)
            )
        return ch_unitary(self.model.unitary(winding), degree).terms[0][1]

    @cached_property
    def calibration(self):
        calibration = calibrate_chern_constant(spec=self.spec, k0=self.k0,
                                               radii=self.radii, points=self.points)
        self.banners.append('calibrated Ch_m(u) constant c_1 = {:.10g} ({})'.format(
            calibration.value, calibration.provenance))
        return calibration


def _model_checks(ctx):
    def evaluate():
        invariants = check_invariants(ctx.model)
        return Outcome(
            collections.OrderedDict((c.name, c.passed) for c in invariants),
            max(c.residual for c in invariants),
            all(c.passed for c in invariants),
        )
    yield Check('identities/model-invariants', 'model axioms', 'identities', 'exact',
                {'model': ctx.model.name}, evaluate)


def _pdo_checks(ctx):
    model = ctx.model
    for name, b in model.generators.items():
        for n in (1, 2, 3):
            inputs = {'generator': name, 'n': n, 'window': ctx.window}
            yield Check(
                'identities/sigma-expansion/{}/n={}'.format(name, n),
                'sigma1 = 1 + delta1 |D|_1^-1 expansion', 'identities', 'pdo', inputs,
                lambda b=b, n=n: Outcome({}, verify_sigma_expansion(model, b, n, ctx.window).residual),
            )
            yield Check(
                'identities/nabla-expansion/{}/n={}'.format(name, n),
                'nabla = delta1^2 + gamma1 expansion', 'identities', 'pdo', inputs,
                lambda b=b, n=n: Outcome({}, verify_nabla_expansion(model, b, n, ctx.window).residual),
            )
        for interpose in (False, True):
            def evaluate(b=b, interpose=interpose):
                result = factorization_check(model, [b, b], [1, 1], interpose, ctx.window,
                                             ctx.config.probes['cap'])
                return Outcome({'sups': result.sups}, None, result.bounded)
            yield Check(
                'identities/factorization/{}/interpose={}'.format(name, int(interpose)),
                'bounded factorization of iterated commutators', 'identities', 'pdo',
                {'generator': name, 'interpose': interpose}, evaluate,
            )

        def norm(b=b):
            value = delta_norm(model, b, 2, ctx.window, ctx.config.probes['cap'])
            return Outcome({'norm': value}, None, value < float('inf'))
        yield Check('identities/delta-norm/{}'.format(name), 'delta1-norm finiteness',
                    'identities', 'pdo', {'generator': name, 'k': 2}, norm)


def _max_abs(cochain, samples):
    return max(abs(cochain(*a)) for a in samples)


def _bicomplex_checks(ctx):
    model = ctx.model
    m = 1
    inputs = {'degree': m, 'seed': ctx.config.seed}

    def b_squared():
        phi = probe_panel(model, m)[0]
        return Outcome({}, _max_abs(b_coboundary(b_coboundary(phi)), ctx.tuples(m + 2)))

    def B_squared():
        phi = probe_panel(model, m + 2)[0]
        return Outcome({}, _max_abs(B_coboundary(B_coboundary(phi)), ctx.tuples(m)))

    def anticommute():
        phi = probe_panel(model, m + 1)[0]
        left = b_coboundary(B_coboundary(phi))
        right = B_coboundary(b_coboundary(phi))
        return Outcome({}, max(abs(left(*a) + right(*a)) for a in ctx.tuples(m + 1)))

    def adjoint_b():
        phi = probe_panel(model, m)[0]
        c = Chain([(1.0, a) for a in ctx.tuples(m + 1, 4)], m + 1)
        lhs = pair(b_coboundary(phi), c).value
        rhs = pair(phi, boundary_b(c)).value
        return Outcome({'lhs': lhs, 'rhs': rhs}, abs(lhs - rhs))

    def adjoint_B():
        phi = probe_panel(model, m + 1)[0]
        c = Chain([(1.0, a) for a in ctx.tuples(m, 4)], m)
        lhs = pair(B_coboundary(phi), c).value
        rhs = pair(phi, boundary_B(c)).value
        return Outcome({'lhs': lhs, 'rhs': rhs}, abs(lhs - rhs))

    def chern_cyclic():
        n = model.M
        cochain = chern_character(FredholmModule(model), n, normalization='cyclic')
        return _check_result_outcome(is_cyclic(cochain, ctx.tuples(n, 6), tol=float('inf')))

    def hochschild_cycle():
        c = ch_unitary(model.unitary(1), 1)
        return _check_result_outcome(is_hochschild_cycle(c, probe_panel(model, 0),
                                                         tol=float('inf')))

    for suffix, anchor, evaluate in (
            ('b-squared', 'b^2 = 0', b_squared),
            ('B-squared', 'B^2 = 0', B_squared),
            ('bB-anticommute', 'bB + Bb = 0', anticommute),
            ('pairing-adjoint-b', '<b phi, c> = <phi, b^T c>', adjoint_b),
            ('pairing-adjoint-B', '<B phi, c> = <phi, B^T c>', adjoint_B),
            ('chern-cyclic', 'cyclicity of the Chern character of F', chern_cyclic),
            ('ch1-hochschild-cycle', 'Ch_1(u) is a Hochschild cycle', hochschild_cycle)):
        yield Check('identities/bicomplex/{}'.format(suffix), anchor, 'identities',
                    'bicomplex', inputs, evaluate)


def _anchor_checks(ctx):
    """The degree-zero Cauchy identity that fixes the contour orientation.

    The left side always goes through the contour quadrature, whatever the
    run method, so that a flipped orientation shows up as a sign error.
    """
    model = ctx.model
    contour = ctx.spec._replace(method='quadrature')
    ops = [model.identity] + [g for g in model.generators.values() if 0 in g.offsets]
    for A in ops:
        for s in (0.0, 0.5, 2.0):
            for t in (0.0, 1.0):
                for r in (1.5, 2.5):
                    def evaluate(A=A, s=s, t=t, r=r):
                        lhs = bracket(model, (A,), s=s, r=r, t=t, spec=contour)
                        p = model.q / 2.0 + r
                        weight = model.Dsq.apply(lambda x: (t + s * s + x) ** -p,
                                                 growth_order=-model.Dsq.growth_order * p)
                        product = compose(model.gamma, compose(A, weight))
                        rhs = trace(product, tol=ctx.spec.tol,
                                    growth_order=A.growth_order + weight.growth_order).value
                        return Outcome({'lhs': lhs, 'rhs': rhs}, relative_residual(lhs, rhs))
                    yield Check(
                        'identities/orientation/{}/s={:g}/t={:g}/r={:g}'.format(A.name, s, t, r),
                        'degree-zero Cauchy identity', 'identities', 'anchor',
                        {'operator': A.name, 's': s, 't': t, 'r': r}, evaluate,
                    )


def _resolvent_identity_checks(ctx):
    model = ctx.model
    spec = ctx.spec
    for m in IDENTITY_DEGREES:
        for ops in ctx.operator_tuples(m):
            label = _label(ops)
            base = 'identities/{{}}/m={}/{}'.format(m, label)
            for r in SAMPLE_R:
                inputs = {'m': m, 'operators': label, 'r': r}
                tag = base + '/r={:g}'.format(r)
                yield Check(tag.format('s-trick'), 's-trick', 'identities', 'identity', inputs,
                            lambda ops=ops, r=r: _residual_outcome(
                                verify_s_trick(model, ops, m, r, spec=spec)))
                yield Check(tag.format('lambda-trick'), 'lambda-trick', 'identities',
                            'identity', inputs,
                            lambda ops=ops, r=r: _residual_outcome(
                                verify_lambda_trick(model, ops, r, s=0.5, spec=spec)))
                for t in (1.0, 0.5):
                    yield Check(
                        (tag + '/t={:g}').format('square-reduction', t),
                        'resolvent reduction of a D^2 insertion', 'identities', 'identity',
                        dict(inputs, t=t),
                        lambda ops=ops, r=r, t=t: _residual_outcome(
                            verify_square_reduction(model, ops, m, r, t, spec=spec)),
                    )
            inputs = {'m': m, 'operators': label}
            for j in range(1, m + 1):
                yield Check(
                    (base + '/j={}').format('commutator', j),
                    '[D^2, A_j] contraction', 'identities', 'identity', dict(inputs, j=j),
                    lambda ops=ops, j=j: _residual_outcome(
                        verify_commutator_identity(model, ops, j, spec=spec)),
                )
            yield Check(base.format('d-migration'), 'D migration of s-moments', 'identities',
                        'identity', inputs,
                        lambda ops=ops: _residual_outcome(verify_d_migration(model, ops, spec=spec)))
            yield Check(base.format('telescoping'), 'telescoping of commutator insertions',
                        'identities', 'identity', inputs,
                        lambda ops=ops: _residual_outcome(verify_telescoping(model, ops, spec=spec)))
            yield Check(
                (base + '/double=0').format('cyclic'),
                'cyclic property of s-moments', 'identities', 'identity',
                dict(inputs, double=False),
                lambda ops=ops: _residual_outcome(
                    verify_cyclic_property(model, ops, spec=spec)),
            )
            total = sum(op.degree for op in ops) % 2
            if total == model.anti_parity:
                yield Check(
                    (base + '/double=1').format('cyclic'),
                    'cyclic property of s-moments', 'identities', 'identity',
                    dict(inputs, double=True),
                    lambda ops=ops: _residual_outcome(
                        verify_cyclic_property(model, ops, double=True, spec=spec)),
                )
            else:
                yield Check(base.format('double-commutator'),
                            'commutators inside the double bracket', 'identities', 'identity',
                            inputs, lambda ops=ops: _residual_outcome(
                                verify_double_commutator_identity(model, ops, spec=spec)))


def identity_checks(ctx):
    for builder in (_model_checks, _pdo_checks, _bicomplex_checks, _anchor_checks,
                    _resolvent_identity_checks):
        for check in builder(ctx):
            yield check


def transgression_checks(ctx):
    model = ctx.model
    spec = ctx.spec
    m = model.parity
    samples = ctx.tuples(m, 2)
    for a in samples:
        label = _label(a)
        for t in (0.0, 0.5, 1.0):
            yield Check(
                'transgression/bB-formula/m={}/t={:g}/{}'.format(m, t, label),
                '(b, B) transgression formula', 'transgression', 'transgression',
                {'m': m, 't': t, 'r': 2.0, 'tuple': label},
                lambda a=a, t=t: _residual_outcome(verify_transgression(model, m, 2.0, t, a, spec)),
            )

        def dt_law(a=a):
            law = verify_dt_law(model, m, 2.0, a, t=0.5, h=4e-3, spec=spec)
            tolerance = ctx.config.tolerance('dt_law')
            return Outcome({'defects': law.defects, 'order': law.order}, law.residual,
                           law.residual <= tolerance and law.order > 1.5)
        yield Check('transgression/dt-law/m={}/{}'.format(m, label), 't-derivative law',
                    'transgression', 'dt_law', {'m': m, 'r': 2.0, 't': 0.5, 'h': 4e-3,
                                                'tuple': label}, dt_law)

        def decay(a=a):
            values, decreasing = decay_in_r(model, m, a, spec=spec)
            return Outcome({'values': values}, None, decreasing)
        yield Check('transgression/decay-in-r/m={}/{}'.format(m, label),
                    'decay of the resolvent cocycle in r', 'transgression', 'transgression',
                    {'m': m, 'tuple': label}, decay)

        def refined(a=a):
            def evaluate(s):
                ops = [a[0]] + [graded_commutator(model.D, aj) for aj in a[1:]]
                return expectation(model, ExpectationRequest(ops, r=2.0, alpha=m, spec=s))
            stable, change, error = refinement_check(evaluate, spec)
            return Outcome({'change': change, 'error': error}, None, stable)
        yield Check('transgression/refinement/m={}/{}'.format(m, label),
                    'stability under quadrature refinement', 'transgression', 'transgression',
                    {'m': m, 'r': 2.0, 'tuple': label}, refined)

    yield Check('transgression/eta-recursion', 'eta_{m+2} (m+1)/2 = eta_m', 'transgression',
                'pdo', {'max_m': 6, 'parity': model.parity},
                lambda: Outcome({}, eta_recursion_residual(6, model.parity)))
    for M in range(1, 7):
        yield Check('transgression/gamma-duplication/M={}'.format(M),
                    'Gamma duplication formula', 'transgression', 'exact', {'M': M},
                    lambda M=M: Outcome({}, duplication_residual(M)))
    for M, q in sorted({(1, 1.0), (model.M, model.q)}):
        def s_block(M=M, q=q):
            closed = endpoint_s_integral(M, q, 2.0)
            p = q / 2.0 + 2.0
            value, _ = s_integral(lambda s: (s * s + 1.0) ** (-M - 1 - p), M)
            return Outcome({'closed_form': closed, 'quadrature': value},
                           relative_residual(closed, value))
        yield Check('transgression/endpoint-s-integral/M={}/q={:g}'.format(M, q),
                    'Beta form of the endpoint s-integral', 'transgression', 'quadrature',
                    {'M': M, 'q': q, 'r': 2.0}, s_block)

    endpoints = ctx.tuples(model.M, 1)
    if model.parity == 1 and model._unitary_rule is not None:
        endpoints = [ctx.unitary_tuple(model.M)] + endpoints
    for a in endpoints:
        label = _label(a)

        def endpoint(a=a):
            result = chern_endpoint(model, 2.0, a, spec)
            return Outcome(result._asdict(), result.relative_difference)
        yield Check('transgression/chern-endpoint/{}'.format(label),
                    'Chern character endpoint of the transgression', 'transgression',
                    'endpoint', {'r': 2.0, 'tuple': label}, endpoint)

        def psi(a=a):
            coarse = psi_cochain(model, 0.5, model.M, 2.0, a, spec)
            fine = psi_cochain(model, 0.5, model.M, 2.0, a, spec.refined())
            return Outcome({'coarse': coarse, 'fine': fine}, relative_residual(coarse, fine))
        yield Check('transgression/psi-refinement/{}'.format(label),
                    'deformation functional stability', 'transgression', 'transgression',
                    {'u': 0.5, 'r': 2.0, 'tuple': label}, psi)


def _is_circle(model):
    return model.name in ('circle', 'circle-shifted')


def residue_checks(ctx):
    model = ctx.model
    spec = ctx.spec
    radii, points = ctx.radii, ctx.points

    def exact_combinatorics():
        alphas = [str(alpha(k)) for k in ((0,), (1,), (1, 0))]
        sigmas = [[str(c) for c in sigma_coeffs(n)] for n in (0, 1, 2)]
        passed = (alphas == ['1', '1/2', '1/6']
                  and sigmas == [['1'], ['1/2', '1'], ['3/4', '2', '1']])
        return Outcome({'alpha': alphas, 'sigma': sigmas}, None, passed)
    yield Check('residue/combinatorics', 'alpha(k) and sigma_{n,j}', 'residue', 'exact', {},
                exact_combinatorics)
    yield Check('residue/higson-factor', 'reduced cocycle factor at the base point',
                'residue', 'exact', {'z': 0.0},
                lambda: Outcome({}, abs(higson_factor(0.0) - 1.0)))

    if _is_circle(model):
        for n in (1, 2, 3):
            def tau0(n=n):
                u = model.unitary(n)
                recipe = zeta_recipe(model, (u.adjoint(), u), (0,))
                value = tau_j(recipe, 0, radii, points)
                return Outcome({'recipe': recipe.name, 'tau0': value}, abs(value - n))
            yield Check('residue/tau0/winding={}'.format(n), 'residue of the winding zeta function',
                        'residue', 'zeta', {'winding': n}, tau0)

        def tau1():
            u = model.unitary(1)
            value = tau_j(zeta_recipe(model, (u.adjoint(), u), (0,)), 1, radii, points)
            return Outcome({'tau1': value}, abs(value))
        yield Check('residue/tau1/winding=1', 'simple pole of the winding zeta function',
                    'residue', 'zeta', {'winding': 1}, tau1)

    for a in ctx.tuples(1 if model.parity else 0, 3):
        label = _label(a)

        def continued_vs_direct(a=a):
            recipe = zeta_recipe(model, a, (0,) * (len(a) - 1))
            lhs = zeta_eval(recipe, 3.0, head=ctx.config.lattice['head']).value
            rhs = zeta_direct(recipe, 3.0)
            return Outcome({'recipe': recipe.name, 'continued': lhs, 'direct': rhs},
                           relative_residual(lhs, rhs))
        yield Check('residue/zeta-continuation/{}'.format(label),
                    'continued zeta sum against direct summation', 'residue', 'zeta',
                    {'tuple': label, 'z': 3.0}, continued_vs_direct)

        def bridge(a=a):
            result = compare_residue_vs_resolvent(model, model.parity, a, spec, radii, points)
            return Outcome({'resolvent_residue': result.resolvent_residue,
                            'residue_cocycle': result.residue_cocycle}, result.residual)
        yield Check('residue/resolvent-bridge/m={}/{}'.format(model.parity, label),
                    'residues of the resolvent cocycle give the residue cocycle', 'residue',
                    'residue', {'m': model.parity, 'tuple': label}, bridge)

    if model.parity == 1 and model._unitary_rule is not None:
        r0 = (1.0 - model.q) / 2.0

        def bB_cycle_pole():
            cycle = ch_unitary_cycle(model.unitary(1), model.M)
            fit = laurent_fit(
                lambda r: pair(ResolventCocycle(model, r, spec=spec, continued=True).family(),
                               cycle).value,
                r0, radii=radii, points=points)
            return Outcome(fit.to_dict(), abs(fit.coefficient(-2)) / fit.scale)
        yield Check('residue/pole-order/bB-cycle', 'at worst a simple pole on a (b, B)-cycle',
                    'residue', 'pole', {'cycle': 'Ch(u)', 'r0': r0}, bB_cycle_pole)

        def hochschild_pole():
            a = ctx.unitary_tuple(1)
            fit = laurent_fit(lambda r: continuation(model, 1, r, a, spec=spec), r0,
                              radii=radii, points=points)
            return Outcome(fit.to_dict(), abs(fit.coefficient(-2)) / fit.scale)
        yield Check('residue/pole-order/hochschild-cycle',
                    'at worst a simple pole on a Hochschild cycle', 'residue', 'pole',
                    {'cycle': 'Ch_1(u)', 'r0': r0}, hochschild_pole)

        def reduced_residue():
            a = ctx.unitary_tuple(1)
            phi = laurent_fit(lambda r: continuation(model, 1, r, a, spec=spec), r0,
                              radii=radii, points=points)
            psi = laurent_fit(lambda r: reduced_phi(model, 1, r, a, spec, continued=True), r0,
                              radii=radii, points=points)
            return Outcome({'phi_residue': phi.residue, 'psi_residue': psi.residue},
                           relative_residual(phi.residue, psi.residue))
        yield Check('residue/reduced-cocycle', 'reduced cocycle has the same residue',
                    'residue', 'residue', {'m': 1, 'r0': r0}, reduced_residue)


def index_checks(ctx):
    model = ctx.model
    settings = ctx.config.index

    def calibration():
        c = ctx.calibration
        return Outcome(c._asdict(), None, True)
    yield Check('index/calibration', 'single calibrated chain constant', 'index', 'index',
                {'model': 'circle-shifted', 'winding': 1}, calibration)

    if model.parity == 1:
        for n in settings['windings']:
            def formula(n=n):
                report = verify_local_index_formula(
                    model, model.unitary(n), ctx.calibration, ctx.spec, ctx.k0,
                    ctx.radii, ctx.points)
                residual = max(report.residuals.values()) if report.residuals else 0.0
                tolerance = ctx.config.tolerance('index')
                return Outcome(report.to_dict(), residual, report.passed(tolerance))
            yield Check('index/local-formula/winding={:+d}'.format(n),
                        'local index formula against the finite-section index', 'index',
                        'index', {'winding': n, 'k0': ctx.k0}, formula)

        for n in settings['windings']:
            def path(n=n):
                result = t_path(model, model.unitary(n), ctx.calibration, ctx.spec,
                                radii=ctx.radii, points=ctx.points)
                residual = result.spread / (1.0 + abs(result.values[-1]))
                tolerance = ctx.config.tolerance('index')
                return Outcome(result._asdict(), residual, result.agrees and residual <= tolerance)
            yield Check('index/t-path/winding={:+d}'.format(n),
                        'part 1 of the local index formula along the t-path', 'index',
                        'index', {'winding': n, 't': list(T_PATH)}, path)

        windings = list(settings['windings'])
        for n, m in zip(windings, windings[1:]):
            def additive(n=n, m=m):
                result = additivity(model, n, m, ctx.k0)
                return Outcome(result._asdict(),
                               float(abs(result.index_sum - result.index_n - result.index_m)),
                               result.holds)
            yield Check('index/additivity/{:+d}{:+d}'.format(n, m), 'additivity in the winding',
                        'index', 'index', {'n': n, 'm': m}, additive)

        for n in windings:
            def mu_invariance(n=n):
                indices = []
                for mu in settings['mus']:
                    doubled = double(model, mu)
                    indices.append(toeplitz_index(doubled, doubled.unitary(n), ctx.k0,
                                                  settings['kernel_threshold'],
                                                  settings['gap']).index)
                return Outcome({'mus': settings['mus'], 'indices': indices},
                               float(max(indices) - min(indices)))
            yield Check('index/mu-invariance/winding={:+d}'.format(n),
                        'independence of the doubling parameter', 'index', 'index',
                        {'winding': n, 'mus': settings['mus']}, mu_invariance)
    else:
        projections = [('0', zero(model.basis)), ('1', model.identity)]
        projections += [(name, g) for name, g in model.generators.items()
                        if name.startswith('p')]
        for name, p in projections:
            def even(p=p):
                indices = [even_index_pairing(model, p, mu, ctx.k0,
                                              settings['kernel_threshold'],
                                              settings['gap']).index
                           for mu in settings['mus']]
                return Outcome({'mus': settings['mus'], 'indices': indices},
                               float(max(indices) - min(indices)))
            yield Check('index/even-pairing/{}'.format(name), 'even index pairing on the double',
                        'index', 'index', {'projection': name, 'mus': settings['mus']}, even)


BUILDERS = collections.OrderedDict([
    ('identities', identity_checks),
    ('transgression', transgression_checks),
    ('residue', residue_checks),
    ('index', index_checks),
])


def build_checks(ctx, campaigns):
    checks = []
    for campaign in campaigns:
        checks.extend(BUILDERS[campaign](ctx))
    ids = [c.check_id for c in checks]
    if len(set(ids)) != len(ids):
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        raise NcgiValueError("Expected unique check ids, but got duplicates {}".format(duplicates))
    return checks


def run_check(ctx, check):
    """Evaluate one check into a :class:`CheckRecord`."""
    tolerance = ctx.config.tolerance(check.family)
    inputs = dict(check.inputs, model=ctx.model.name)
    start = time.time()
    try:
        outcome = check.evaluate()
    except PreconditionError as e:
        logger.info('%s skipped: %s', check.check_id, e)
        return CheckRecord(check.check_id, check.anchor, check.campaign, inputs,
                           {'reason': str(e)}, None, tolerance, 'SKIP', time.time() - start)
    except NcgiException as e:
        logger.warning('%s failed: %s', check.check_id, e)
        return CheckRecord(check.check_id, check.anchor, check.campaign, inputs,
                           {'error': '{}: {}'.format(type(e).__name__, e)}, None, tolerance,
                           'FAIL', time.time() - start)
    if outcome.passed is not None:
        passed = outcome.passed
    else:
        passed = outcome.residual is not None and outcome.residual <= tolerance
    verdict = 'PASS' if passed else 'FAIL'
    logger.debug('%s: %s (residual %s, tol %g)', check.check_id, verdict,
                 outcome.residual, tolerance)
    return CheckRecord(check.check_id, check.anchor, check.campaign, inputs, outcome.values,
                       outcome.residual, tolerance, verdict, time.time() - start)


def run_campaign(config):
    """Run the selected campaigns of ``config`` in dependency order.

    :param config: (RunConfig)
    :return: (Report) whose ``exit_status`` is 0 iff no check failed
    :raises NcgiValueError: if the model cannot be built
    """
    ctx = CampaignContext(config)
    checks = build_checks(ctx, config.selected_campaigns)
    logger.info('running %d checks on %s', len(checks), ctx.model.name)
    records = [run_check(ctx, check) for check in checks]
    if 'index' in config.selected_campaigns and not ctx.banners:
        ctx.banners.append('Ch_m(u) constant not calibrated: see index/calibration')
    report = Report(config.to_dict(), records, banners=ctx.banners)
    counts = report.counts()
    logger.info('%d PASS, %d FAIL, %d SKIP', counts['PASS'], counts['FAIL'], counts['SKIP'])
    return report


def replay(config, check_id):
    """Re-run the single check ``check_id`` of ``config`` in isolation.

    :return: (Report) with one record
    :raises NcgiValueError: if no check has that id
    """
    campaign = check_id.split('/', 1)[0]
    if campaign not in BUILDERS:
        raise NcgiValueError("Expected a check id of a known campaign, but got {!r}".format(check_id))
    ctx = CampaignContext(config)
    for check in BUILDERS[campaign](ctx):
        if check.check_id == check_id:
            record = run_check(ctx, check)
            return Report(config.to_dict(), [record], banners=ctx.banners)
    raise NcgiValueError("Expected a known check id, but got {!r}".format(check_id))
