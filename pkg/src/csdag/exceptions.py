"""Exception hierarchy shared across the package."""


class CsdagError(Exception):
    """Base class for all csdag errors."""


class ArgumentError(CsdagError, ValueError):
    """An argument violates a documented precondition."""


class DataValidationError(CsdagError, ValueError):
    """Input data failed invariant checks."""


class NumericalError(CsdagError, RuntimeError):
    """A numerical procedure failed beyond the built-in rescue rules."""
