"""
Exception hierarchy for drlab.
"""


class DrLabError(Exception):
    """Base class for every error raised by lab code."""


class ConfigurationError(DrLabError, ValueError):
    """Invalid experiment, environment or model configuration."""


class ContractViolation(DrLabError, ValueError):
    """A precondition on shapes or arguments was broken by the caller."""


class NumericalDivergenceError(DrLabError, ArithmeticError):
    """Parameters became non-finite during an update.

    Args:
        message: Human readable diagnostic
        label: Identifies the run / seed / network that diverged
    """

    def __init__(self, message, label=""):
        self.label = label
        if label:
            message = f"[{label}] {message}"
        super().__init__(message)


class InsufficientDataError(DrLabError, ValueError):
    """An operation needs more data (samples, seeds) than it was given."""


class ChartError(DrLabError):
    """A chart could not be produced."""
