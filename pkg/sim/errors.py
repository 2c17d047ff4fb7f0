"""
Exception hierarchy for the laser OWC simulator.

Library code raises these; only run.py turns them into exit codes.
"""


class OwcError(Exception):
    """Base class for all simulator errors."""


class ConfigError(OwcError, ValueError):
    """Malformed configuration or a parameter outside its valid range."""


class InfeasibleError(OwcError):
    """
    A construction that cannot be realized for the given channel or budget.

    Raised for zero-forcing rank deficiency, missing outer-precoder
    dimensions, uncovered users, unsatisfiable power constraints and a
    refused high-SNR simplification.

    Attributes:
        detail: Short name of the violated dimension or constraint
    """

    def __init__(self, message: str, detail: str = ""):
        super().__init__(message)
        self.detail = detail


class OutOfRangeError(OwcError, ValueError):
    """Laguerre-Gaussian mode order beyond the supported maximum."""
