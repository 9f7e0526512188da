"""Exception hierarchy shared across the package."""


class UnigenError(Exception):
    """Base class for all package errors."""


class DimacsParseError(UnigenError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractViolation(UnigenError, ValueError):
    """An argument broke an operation's precondition."""


class SolverTimeout(UnigenError):
    """The per-call solver budget expired before an answer was found."""


class CountingError(UnigenError):
    """The approximate counter could not produce an estimate."""


class EnumerationGuardError(ContractViolation):
    """Exact enumeration refused because the sampling set is too large."""
