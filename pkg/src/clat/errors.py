"""Exception types shared across the package."""


class ClatError(ValueError):
    """Base class for all errors raised by this package."""


class ParameterError(ClatError):
    """Invalid distribution or procedure parameters."""


class DomainError(ClatError):
    """Argument outside the domain of a function (e.g. a quantile level not in (0, 1))."""


class UndefinedPointError(ClatError):
    """A ratio of densities is 0/0 at the requested point."""


class SizeError(ClatError):
    """Input too large for a quadratic-time reference routine."""


class ConfigurationError(ClatError):
    """An experiment was configured outside the regime it requires."""
