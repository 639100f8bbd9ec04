"""Exception types shared across the package."""


class BearingObserverError(Exception):
    """Base class for all domain errors raised by this package."""


class DegenerateDirection(BearingObserverError):
    """A vector is too close to zero to define a direction on the sphere."""


class IllConditioned(BearingObserverError):
    """A matrix failed the invertibility / condition-number guard."""


class NonFiniteField(BearingObserverError):
    """An ODE right-hand side produced NaN or infinity."""


class WindowTooShort(BearingObserverError):
    """An excitation window is shorter than two samples or exceeds the signal span."""


class InvalidPE(BearingObserverError):
    """Excitation parameters violate 0 < mu < delta."""


class NonPositiveError(BearingObserverError):
    """A log-linear fit was requested on a series that touches zero."""


class ConfigError(ValueError, BearingObserverError):
    """A run configuration failed to parse or validate.

    Subclasses ValueError so generic input-validation handlers catch it;
    the message always names the offending key or field.
    """
