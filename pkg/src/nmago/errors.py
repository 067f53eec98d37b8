"""Exception hierarchy."""


class NmagoError(Exception):
    """Base class for all package errors."""


class DomainError(NmagoError, ValueError):
    """An argument lies outside the domain a function or operator accepts."""


class ConvexityLossError(NmagoError, ValueError):
    """A root of a negative determinant, or a nonpositive radial derivative,
    was requested: the profile is not (N-1)-convex there."""


class FUndefinedError(NmagoError, ValueError):
    """The cumulative integral of the nonlinearity diverges at 0."""


class EnvelopeMismatchError(NmagoError, RuntimeError):
    """K(r) and p(1-r) are not comparable near the boundary."""


class CertificationError(NmagoError, RuntimeError):
    """The sub/super-solution search failed or its preconditions do not hold."""


class ConfigError(NmagoError, ValueError):
    """Malformed configuration or command-line input."""
