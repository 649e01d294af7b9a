from pytest import fixture

from ncgilab.bandop import BasisIndexSet
from ncgilab.config import load_config
from ncgilab.triple import get_model


@fixture
def model(request):
    """Return a catalogue model, based on request param.

    request.param: (str) catalogue name, e.g. 'circle-shifted' or 'power:2'
    returns: (ncgilab.triple.SpectralTripleModel)

    This fixture should be invoked with indirection.
    """
    return get_model(request.param)


@fixture
def basis(request):
    """Return a lattice basis, based on request param.

    request.param: (tuple) ``(kind, fiber)``
    returns: (ncgilab.bandop.BasisIndexSet)

    This fixture should be invoked with indirection.
    """
    return BasisIndexSet(*request.param)


@fixture(scope='module')
def circle():
    return get_model('circle')


@fixture(scope='module')
def shifted_circle():
    return get_model('circle-shifted')


@fixture(scope='module')
def oscillator():
    return get_model('oscillator')


@fixture
def run_config(tmpdir):
    """A quick run configuration writing into a temporary directory."""
    return load_config(None, {'out': str(tmpdir), 'model': 'circle-shifted'})
