"""Exception hierarchy.

Every error carries an ``exit_code`` used by the ``sim`` command line:

====  ==========================================================
code  meaning
====  ==========================================================
0     success
2     configuration or parameter validation error
3     numeric failure during a run
4     I/O failure (unreadable config, unwritable output)
====  ==========================================================
"""

from __future__ import annotations


class CosmobranchError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ValidationError(CosmobranchError, ValueError):
    """Invalid parameters supplied by the caller."""

    exit_code = 2


class NumericError(CosmobranchError, ArithmeticError):
    """A computation could not be completed."""

    exit_code = 3


# cosmology
class NonPositiveHubble(ValidationError):
    pass


class NegativeDensity(ValidationError):
    pass


class UnsupportedRecollapse(ValidationError):
    pass


class ClosedUniverseUnsupported(ValidationError):
    pass


class NegativeRadicand(NumericError):
    pass


class StiffnessFailure(NumericError):
    pass


class TimeOutOfRange(NumericError):
    pass


# quantum states
class ZeroVector(ValidationError):
    pass


class DimensionTooSmall(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ImpossibleOutcome(NumericError):
    pass


class OutcomeOutOfRange(ValidationError):
    pass


# branches and products
class EnumerationTooLarge(NumericError):
    pass


class TableTooLarge(NumericError):
    pass


class InvalidWeight(ValidationError):
    pass


# scenarios
class ConfigInvalid(ValidationError):
    """Raised with the full list of violations found in a config."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class OutputUnwritable(CosmobranchError, OSError):
    exit_code = 4
