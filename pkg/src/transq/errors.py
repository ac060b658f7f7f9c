"""Exception types raised by transq."""


class TransqError(Exception):
    """Base class for all package errors."""


class DomainError(TransqError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(TransqError, ValueError):
    """A schedule or scenario description is invalid."""


class CapacityError(TransqError, RuntimeError):
    """The state-space truncation cap was reached before the tail mass target."""

    def __init__(self, message, interval=None, phase=None):
        super().__init__(message)
        self.interval = interval
        self.phase = phase


class UsageError(TransqError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""
