"""Numerical laboratory for the local index formula on lattice spectral
triples.

Operators are banded matrices over a lattice basis, stored as rules that
produce their bands on demand. On top of that sit the resolvent and
residue cocycles, the Chern character of the phase and the finite-section
index they are all compared against. ``ncgilab.campaigns`` turns the
identities of the theory into checks with residuals and verdicts.
"""

from ncgilab.bandop import BandOperator, BasisIndexSet, DiagonalFunction, compose, trace
from ncgilab.config import RunConfig, load_config
from ncgilab.exceptions import NcgiException, NcgiValueError
from ncgilab.index import (
    calibrate_chern_constant,
    even_index_pairing,
    toeplitz_index,
    verify_local_index_formula,
)
from ncgilab.resolvent import ContourSpec, ExpectationRequest, expectation, phi_component
from ncgilab.residue import residue_cocycle_component, tau_j, zeta_eval, zeta_recipe
from ncgilab.triple import (
    SpectralTripleModel,
    double,
    get_model,
    make_circle_triple,
    make_oscillator_triple,
    make_power_triple,
)

__all__ = [
    'BandOperator', 'BasisIndexSet', 'DiagonalFunction', 'compose', 'trace',
    'RunConfig', 'load_config', 'NcgiException', 'NcgiValueError',
    'calibrate_chern_constant', 'even_index_pairing', 'toeplitz_index',
    'verify_local_index_formula', 'ContourSpec', 'ExpectationRequest', 'expectation',
    'phi_component', 'residue_cocycle_component', 'tau_j', 'zeta_eval', 'zeta_recipe',
    'SpectralTripleModel', 'double', 'get_model', 'make_circle_triple',
    'make_oscillator_triple', 'make_power_triple',
]
