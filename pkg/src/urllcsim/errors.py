"""Exception types shared across the package."""


class SimulationError(Exception):
    """Base class for simulator errors."""


class ConfigError(SimulationError):
    """Invalid configuration file, key, or value."""


class NumericalError(SimulationError):
    """A numerical routine failed (bad bracket, singular system, ...)."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration limit.

    Carries the last iterate and residual so callers can inspect how far
    the iteration got.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
