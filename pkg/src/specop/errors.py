"""Exception hierarchy.

Each class carries the CLI exit code it maps to.
"""


class SpecopError(Exception):
    exit_code = 1


class ParseError(SpecopError, ValueError):
    """Malformed input file."""

    exit_code = 2


class InputSizeError(ParseError):
    """Input parsed but has too few observations."""


class ContractViolation(SpecopError, ValueError):
    """An argument is outside the documented domain."""

    exit_code = 2


class IllPosedProjectionError(ContractViolation):
    pass


class IncompatibleError(SpecopError, ValueError):
    """Two objects that must share metadata (T, grid, b, kernel) do not."""

    exit_code = 2


class ScopeError(SpecopError):
    """Request outside what the method supports (e.g. unequal sample lengths)."""

    exit_code = 3


class DegenerateStatisticError(SpecopError, ArithmeticError):
    """Studentization is undefined, typically because the pooled estimate is zero."""

    exit_code = 4


class InvalidEstimateError(SpecopError, ValueError):
    exit_code = 4


class NoValidBandwidthError(DegenerateStatisticError):
    pass
