"""Exception types shared across the package."""


class PlshootError(Exception):
    """Base class for all package errors."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.message = message
        self.witness = witness


class DomainError(PlshootError):
    """An input is outside the mathematical domain of an operation."""


class StepFailure(PlshootError):
    """The integrator could not meet its tolerance budget."""


class ConfigError(PlshootError):
    """A configuration file or CLI argument set is malformed."""


class InternalError(PlshootError):
    """An invariant that should be unbreakable was broken."""
