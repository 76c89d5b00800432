"""Exception hierarchy shared across the package."""


class EvcoreError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EvcoreError, ValueError):
    """An argument is outside the documented domain of an operation."""


class DimensionMismatchError(EvcoreError, ValueError):
    """Array shapes that must agree do not."""


class EvidenceOverflowError(EvcoreError, OverflowError):
    """Exponential evidence would overflow float64 (logit > 700)."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnsupportedActivationError(EvcoreError, ValueError):
    """The requested activation cannot be used in this context."""


class FormatError(EvcoreError, ValueError):
    """A file does not conform to its documented layout."""
