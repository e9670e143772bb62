"""Exception hierarchy shared by every module of the package."""


class VirialNSFError(Exception):
    """Base class for all errors raised by :mod:`virialnsf`."""


class DomainError(VirialNSFError, ValueError):
    """A state-law quantity was requested outside its domain (e.g. rho = 0)."""


class IndexOutOfRange(VirialNSFError, IndexError):
    """A virial coefficient index exceeds the truncation order."""


class NegativeInput(VirialNSFError, ValueError):
    """A quantity that must be non-negative was negative."""


class ConvergenceFailure(VirialNSFError, RuntimeError):
    """An iterative solver exhausted its budget.

    ``history`` carries whatever residual / update norms the solver recorded.
    """

    def __init__(self, message, history=None, residual=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.residual = residual


class NonPhysicalState(VirialNSFError, RuntimeError):
    """Density or temperature positivity was lost; the run must abort."""


class ConfigError(VirialNSFError, ValueError):
    """Invalid run configuration. ``line`` is the 1-based source line if known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FormatError(VirialNSFError, ValueError):
    """A snapshot file is malformed, truncated or of an unsupported version."""
