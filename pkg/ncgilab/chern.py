"""Chern character of a Fredholm module built from a model's phase.

All complex powers use principal branches; ``sqrt(2i) = 1 + i``.
"""
import cmath
import logging
import math

from cached_property import cached_property
from scipy.special import gamma as gamma_fn

from ncgilab.bandop import compose, graded_commutator, trace
from ncgilab.cyclic import Cochain
from ncgilab.exceptions import NcgiValueError, PreconditionError
from ncgilab.pdo import estimate_order
from ncgilab.triple import phase


logger = logging.getLogger(__name__)

SQRT_2I = cmath.sqrt(2j)


def lambda_const(m):
    """``lambda_m = (-1)**(m(m-1)/2) Gamma(m/2 + 1)``, times ``sqrt(2i)`` for odd ``m``."""
    if m < 0:
        raise NcgiValueError("Expected m >= 0, but got {}".format(m))
    value = (-1) ** (m * (m - 1) // 2) * complex(gamma_fn(m / 2.0 + 1))
    return value * SQRT_2I if m % 2 else value


def mu_const(n):
    """``mu_n = (-1)**[n/2] / n! * lambda_n``."""
    return (-1) ** (n // 2) / math.factorial(n) * lambda_const(n)


def conditional_trace(T, F, tol=1e-10, model=None, growth_order=None):
    """``tau'(T) = tau(F (F T + T F)) / 2``.

    With a model the summability hint is the measured order of the
    combination; otherwise its declared growth order is used.

    :return: (TraceResult)
    """
    combo = compose(F, compose(F, T) + compose(T, F))
    if growth_order is None and model is not None:
        growth_order = estimate_order(model, combo).order
    result = trace(combo, tol=tol, growth_order=growth_order)
    return result._replace(value=0.5 * result.value, tail_bound=0.5 * result.tail_bound)


class FredholmModule(object):
    """Pre-Fredholm module ``(A, H, F)`` of a model with a spectral gap.

    :param model: (SpectralTripleModel) needs an invertible Dirac operator
    """

    def __init__(self, model):
        self.model = model
        self.phase = phase(model)
        self.F = self.phase.F
        self.grading = model.grading

    def __repr__(self):
        return '<FredholmModule of {}>'.format(self.model.name)

    def commutator(self, a):
        """``[F, a]`` carrying its measured order as growth order."""
        c = graded_commutator(self.F, a)
        c.growth_order = self.commutator_orders.get(a.name, estimate_order(self.model, c).order)
        return c

    @cached_property
    def commutator_orders(self):
        """Measured order of ``[F, a]`` per generator.

        :raises NcgiValueError: if some ``[F, a]`` does not decay
        """
        orders = {}
        for name, a in self.model.generators.items():
            order = estimate_order(self.model, graded_commutator(self.F, a)).order
            if order >= 0:
                raise NcgiValueError(
                    "Expected [F, {}] to decay, but its measured order is {:.3f}".format(name, order)
                )
            orders[name] = order
        return orders

    @cached_property
    def summability(self):
        """Smallest ``p`` with ``[F, a]`` decaying like ``w**(-1/p)``; 0 when
        every commutator is finitely supported."""
        orders = [o for o in self.commutator_orders.values() if o != float('-inf')]
        return max((-1.0 / o for o in orders), default=0.0)

    def conditional_trace(self, T, tol=1e-10):
        return conditional_trace(T, self.F, tol, model=self.model)


def chern_character(module, n, normalization='cyclic', tol=1e-10):
    """``Ch_F(a_0, ..., a_n) = c_n tau'(gamma a_0 [F, a_1] ... [F, a_n])`` with
    ``c_n = lambda_n`` ('cyclic') or ``mu_n`` ('bB').

    :raises PreconditionError: on a parity mismatch
    :raises NcgiValueError: on an unknown normalization
    """
    model = module.model
    if n % 2 != model.parity:
        raise PreconditionError(
            "Expected a degree of parity {}, but got {}".format(model.parity, n)
        )
    if normalization == 'cyclic':
        const = lambda_const(n)
    elif normalization == 'bB':
        const = mu_const(n)
    else:
        raise NcgiValueError(
            "Expected normalization 'cyclic' or 'bB', but got {!r}".format(normalization)
        )

    def rule(a):
        product = compose(model.gamma, a[0])
        for aj in a[1:]:
            product = compose(product, module.commutator(aj))
        return const * module.conditional_trace(product, tol).value
    logger.debug('Ch_F of degree %d on %s with constant %s', n, model.name, const)
    return Cochain(n, rule, True, 'Ch_F')
