"""Exception types shared across the package."""


class WfsimError(Exception):
    """Base class for every error this package raises on purpose."""


class LabelCollision(WfsimError):
    """Two tensor factors were given the same label."""


class UnknownSubsystem(WfsimError):
    """A label does not name any factor of the space at hand."""


class ShapeError(WfsimError):
    """An array's shape or factor layout does not match the space it claims."""


class InvalidState(WfsimError):
    """A state or operator failed a validity invariant (norm, hermiticity,
    trace, positivity, or the dichotomic square-to-identity check)."""


class PointerNotReady(WfsimError):
    """The pointer factor was not in its ready state before coupling."""


class HeraldImpossible(WfsimError):
    """The heralding projection annihilated the state (survival probability
    is numerically zero), so no conditional state exists."""


class InvariantViolation(WfsimError):
    """A numerical runtime invariant was violated, for example an exact
    inequality value exceeding the quantum ceiling."""


class ConfigError(WfsimError):
    """A scenario configuration failed validation."""
