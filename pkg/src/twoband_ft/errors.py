"""Exception types raised across the package.

Each class maps onto one CLI exit code (see :mod:`twoband_ft.cli`).
"""


class InvalidSpecError(ValueError):
    """A model, state or config specification violates its invariants."""


class ConfigError(InvalidSpecError):
    """A run configuration file is malformed or inconsistent."""


class NumericalIntegrityError(ArithmeticError):
    """A numerical result failed a sanity check (residual, imaginary part, range).

    ``residual`` carries the offending magnitude when one is available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PathIntegrityError(NumericalIntegrityError):
    """A simulated stochastic path left the domain of its update rule."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class InsufficientDataError(RuntimeError):
    """Too few samples, pairs or bins to produce a meaningful statistic."""


class RangeError(ValueError):
    """A requested time window lies outside the sampled range."""
