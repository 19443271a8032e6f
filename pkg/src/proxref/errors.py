"""Exception taxonomy shared across the toolkit.

The CLI maps each class to its own exit code, so keep the hierarchy flat:
one class per failure family, no subclassing between families.
"""


class ProxrefError(Exception):
    """Base class for all toolkit errors."""


class DomainError(ProxrefError, ValueError):
    """A quantity left the sensor model's mathematical domain."""


class DataError(ProxrefError, ValueError):
    """Invalid record, file, or cross-reference in an interchange format."""


class ConvergenceError(ProxrefError):
    """An iterative fit or training run failed to converge.

    Carries the last iterate so callers can inspect how far the solver got.
    """

    def __init__(self, message, last_result=None):
        super().__init__(message)
        self.last_result = last_result


class TransportError(ProxrefError):
    """A remote completion request failed after exhausting its retries."""
