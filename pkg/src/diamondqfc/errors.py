"""Exception types raised by diamondqfc."""


class QFCError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QFCError, ValueError):
    """Unknown band tag, malformed override file or invalid run configuration."""


class DomainError(QFCError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(QFCError, RuntimeError):
    """An iterative routine failed to reach its requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class SingularParameterError(NumericalError):
    """The first-order response is singular at the requested operating point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class TruncationError(QFCError, ValueError):
    """The Fock truncation is too small for the requested state."""

    def __init__(self, message, leakage=None):
        super().__init__(message)
        self.leakage = leakage


class ResourceError(QFCError, MemoryError):
    """A dense representation would exceed the desk-scale size cap."""
