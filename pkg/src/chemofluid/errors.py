"""Exception hierarchy shared by every module of the package."""


class ChemoFluidError(Exception):
    """Base class for all package errors."""


class DomainError(ChemoFluidError, ValueError):
    """An argument lies outside the domain of a function (negative v, K <= 0, ...)."""


class StateCorruptionError(ChemoFluidError):
    """A state field lost positivity or finiteness."""


class SolverError(ChemoFluidError):
    """An iterative linear solve did not reach its tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class ConfigError(ChemoFluidError, ValueError):
    """Invalid configuration document or configuration values."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SimulationError(ChemoFluidError):
    """A run aborted; ``state`` holds the last valid state for post-mortem."""

    def __init__(self, message, state=None, cause=None):
        super().__init__(message)
        self.state = state
        self.cause = cause
