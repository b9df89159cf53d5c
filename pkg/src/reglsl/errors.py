"""Exception types shared across the package."""


class ReglslError(Exception):
    """Base class for all library-specific failures."""

    category = "internal"


class ConfigError(ReglslError):
    """Invalid experiment configuration or incompatible mode/kind request."""

    category = "config"


class DataFormatError(ReglslError):
    """A dataset or matrix container file could not be parsed."""

    category = "data-format"


class CoefficientError(ReglslError):
    """A coefficient field violates its admissibility constraints."""

    category = "coefficient"


class BreakdownError(ReglslError):
    """Loss of positive definiteness in a normalization block.

    Signals that the Gramian truncation level is too aggressive (or not
    aggressive enough for noisy data).  ``value`` carries the offending
    eigenvalue, ``step`` the recurrence step when applicable.
    """

    category = "breakdown"

    def __init__(self, message, value=None, step=None):
        super().__init__(message)
        self.value = value
        self.step = step


class EmptyModelError(ReglslError):
    """Gramian truncation removed every eigenvector."""

    category = "empty-model"

    def __init__(self, message, sigma_max=None):
        super().__init__(message)
        self.sigma_max = sigma_max
