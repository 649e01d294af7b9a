"""Exceptions explicitly raised by this package.

All raised exceptions derive from a single package-specific base class so
that 'all exceptions raised by ncgilab' can be caught if desired.
Each subclass names one way a numerical check can fail.
"""


class NcgiException(Exception):
    pass


class NcgiValueError(NcgiException, ValueError):
    pass


class PreconditionError(NcgiValueError):
    """The model lacks a hypothesis of the requested check, such as a
    spectral gap or the right parity."""


class BasisMismatchError(NcgiException):
    pass


class NonSummableError(NcgiException):
    pass


class ToleranceNotReachedError(NcgiException):
    pass


class SpectrumProximityError(NcgiException):
    pass


class ConvergenceError(NcgiException):
    pass


class ContinuationError(NcgiException):
    pass


class LaurentFitError(NcgiException):
    pass


class IndexStabilityError(NcgiException):
    pass


class ConfigError(NcgiException):
    pass
