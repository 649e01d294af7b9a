"""Numerical Laurent expansions around a suspected pole.

The function is sampled on concentric rings around the centre and the
coefficients of ``sum_{n=-2}^{N} c_n (r - r0)**n`` are fitted by linear
least squares. This is the numerical meaning of "residue" and of
"holomorphic at r0" throughout the package.
"""
import collections
import logging

import numpy as np

from ncgilab.exceptions import LaurentFitError


logger = logging.getLogger(__name__)

RADII = (0.05, 0.1)
POINTS = 16
MIN_ORDER = -2
MAX_ORDER = 5
MAX_CONDITION = 1e10
HOLOMORPHIC_TOL = 1e-4


class LaurentFit(collections.namedtuple(
        'LaurentFit', 'center offsets values coefficients residual')):
    """Samples ``values`` at ``center + offsets`` and the fitted coefficients
    ``{order: c_order}``; ``residual`` is the relative RMS misfit."""
    __slots__ = ()

    def coefficient(self, order):
        return self.coefficients.get(order, 0j)

    @property
    def residue(self):
        return self.coefficient(-1)

    @property
    def scale(self):
        return max(1.0, float(np.abs(self.values).max()))

    def simple_pole(self, tol=HOLOMORPHIC_TOL):
        """At worst a simple pole: ``|c_-2| <= tol * scale``."""
        return abs(self.coefficient(-2)) <= tol * self.scale

    def holomorphic(self, tol=HOLOMORPHIC_TOL):
        return self.simple_pole(tol) and abs(self.residue) <= tol * self.scale

    def to_dict(self):
        return {
            'center': [self.center.real, self.center.imag],
            'coefficients': {str(n): [c.real, c.imag] for n, c in sorted(self.coefficients.items())},
            'residual': self.residual,
        }


def ring_offsets(radii=RADII, points=POINTS):
    """Sample offsets on each ring, rotated half a step off the real axis."""
    angles = 2 * np.pi * (np.arange(points) + 0.5) / points
    return np.concatenate([rho * np.exp(1j * angles) for rho in radii])


def laurent_fit(f, r0, radii=RADII, points=POINTS, min_order=MIN_ORDER,
                max_order=MAX_ORDER):
    """Fit a truncated Laurent series of ``f`` around ``r0``.

    :param f: callable of a complex ``r``
    :param r0: (complex) centre, never sampled itself
    :param radii: (tuple) ring radii
    :param points: (int) samples per ring
    :return: (LaurentFit)
    :raises LaurentFitError: if a sample is not finite or the design
        matrix is ill-conditioned
    """
    r0 = complex(r0)
    offsets = ring_offsets(radii, points)
    values = np.array([complex(f(r0 + z)) for z in offsets])
    if not np.all(np.isfinite(values)):
        raise LaurentFitError(
            "Expected finite samples around r0 = {}, but got {} non-finite".format(
                r0, int(np.sum(~np.isfinite(values)))
            )
        )
    orders = np.arange(min_order, max_order + 1)
    design = offsets[:, None] ** orders[None, :]
    # column scaling keeps the condition number meaningful
    norms = np.linalg.norm(design, axis=0)
    scaled = design / norms
    condition = np.linalg.cond(scaled)
    if condition > MAX_CONDITION:
        raise LaurentFitError(
            "Expected a well-conditioned Laurent fit, but the condition number is {:g}".format(condition)
        )
    solution, _, _, _ = np.linalg.lstsq(scaled, values, rcond=None)
    coefs = solution / norms
    misfit = design @ coefs - values
    scale = max(1.0, float(np.abs(values).max()))
    residual = float(np.sqrt(np.mean(np.abs(misfit) ** 2)) / scale)
    fit = LaurentFit(r0, offsets, values,
                     {int(n): complex(c) for n, c in zip(orders, coefs)}, residual)
    logger.debug('Laurent fit at %s: residue %s, c_-2 %s, residual %g',
                 r0, fit.residue, fit.coefficient(-2), residual)
    return fit
