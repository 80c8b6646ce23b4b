"""Exception hierarchy. The CLI maps each class to an exit code."""


class CopdepError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(CopdepError, ValueError):
    """Invalid or unsupported combination of options."""

    exit_code = 2


class DataError(CopdepError, ValueError):
    """Malformed input data (parse errors, non-finite values, bad grouping)."""

    exit_code = 3


class ContractError(CopdepError, ValueError):
    """Arguments violate an operation's preconditions (shape mismatch etc.)."""

    exit_code = 3


class InternalConsistencyError(CopdepError, ArithmeticError):
    """A computed quantity violates a mathematical invariant."""

    exit_code = 4
