"""Exception types shared across the package."""


class DQError(Exception):
    """Base class for all package errors."""


class ConfigError(DQError, ValueError):
    """Invalid user configuration (bad keys, values out of range)."""


class NumericalError(DQError):
    """A computation produced an undefined or inconsistent result."""


class PropagationError(NumericalError):
    """A propagation precondition was violated, e.g. an atom left its grid."""


class OracleUnavailableError(DQError):
    """No reference method applies to the requested configuration."""


class ConvergenceError(DQError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual
