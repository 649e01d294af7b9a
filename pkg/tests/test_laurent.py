import numpy as np
import pytest

from ncgilab.exceptions import LaurentFitError
from ncgilab.laurent import laurent_fit, ring_offsets


@pytest.mark.parametrize('radii, points', [((0.05, 0.1), 16), ((0.2,), 8)])
def test_ring_offsets(radii, points):
    offsets = ring_offsets(radii, points)
    assert len(offsets) == len(radii) * points
    np.testing.assert_allclose(np.sort(np.unique(np.round(np.abs(offsets), 12))), sorted(radii))
    # never on the real axis
    assert np.all(np.abs(offsets.imag) > 0)


@pytest.mark.parametrize('r0', [0.0, -0.5, 1.0 + 2j])
def test_simple_pole(r0):
    fit = laurent_fit(lambda r: 1.0 / (r - r0) + 2.0 + 3.0 * (r - r0), r0)
    assert fit.residue == pytest.approx(1.0, abs=1e-10)
    assert fit.coefficient(0) == pytest.approx(2.0, abs=1e-10)
    assert fit.coefficient(1) == pytest.approx(3.0, abs=1e-9)
    assert fit.simple_pole()
    assert not fit.holomorphic()
    assert fit.residual < 1e-12


def test_double_pole():
    fit = laurent_fit(lambda r: 0.5 / r ** 2 - 1.0 / r, 0.0)
    assert fit.coefficient(-2) == pytest.approx(0.5, abs=1e-10)
    assert fit.residue == pytest.approx(-1.0, abs=1e-10)
    assert not fit.simple_pole()


def test_holomorphic():
    fit = laurent_fit(np.exp, 0.3)
    assert fit.holomorphic()
    assert fit.coefficient(0) == pytest.approx(np.exp(0.3), rel=1e-7)
    assert fit.coefficient(7) == 0


def test_pole_beyond_fitted_orders_has_large_misfit():
    fit = laurent_fit(lambda r: r ** -3, 0.0)
    assert fit.residual > 0.1


def test_non_finite_samples():
    with pytest.raises(LaurentFitError):
        laurent_fit(lambda r: np.nan, 0.0)


def test_to_dict():
    record = laurent_fit(lambda r: 1.0 / (r - 1.0), 1.0).to_dict()
    assert record['center'] == [1.0, 0.0]
    assert record['coefficients']['-1'] == pytest.approx([1.0, 0.0], abs=1e-10)
    assert set(record) == {'center', 'coefficients', 'residual'}
