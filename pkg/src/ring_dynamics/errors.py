"""Exception types raised across the package."""


class RingDynamicsError(Exception):
    """Base class for all package errors."""


class SourceCollisionError(RingDynamicsError, ValueError):
    """A field point lies on (or inside the collision band of) the source."""


class SingularPointError(RingDynamicsError, ValueError):
    """A comparison field was evaluated at its singular point."""


class RepulsiveRegionError(RingDynamicsError, ValueError):
    """No circular orbit exists at the requested radius."""


class CentrifugalSingularityError(RingDynamicsError):
    """The reduced system reached r = 0."""


class IntegrationTimeout(RingDynamicsError):
    """The stop condition was never met before the time cap."""


class SearchBracketError(RingDynamicsError):
    """A shooting residual has no sign change on the scanned range.

    ``scan`` holds the (parameter, residual) pairs that were evaluated.
    """

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = list(scan or [])


class InvalidPathError(SearchBracketError):
    """The eight search path does not produce opposite-side crossings."""


class AssemblyError(RingDynamicsError):
    """Reflected branches of an eight do not join smoothly."""


class ResolutionError(RingDynamicsError):
    """A polyline is too coarse for a reliable self-intersection test."""


class UnboundedRegionError(RingDynamicsError, ValueError):
    """Hill region requested for a non-negative energy."""


class PreconditionError(RingDynamicsError, ValueError):
    """The premise of a verification check does not hold."""


class ConfigError(RingDynamicsError, ValueError):
    """Malformed or unknown configuration keys."""
