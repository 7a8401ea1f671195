"""Exception types shared across the package."""


class MraError(Exception):
    """Base class for all package errors."""


class InvalidArgument(MraError, ValueError):
    """A caller-supplied value violates an operation's preconditions."""


class DomainError(MraError):
    """Inputs lie outside the validity regime of a bound or identity.

    Raised, e.g., when the KL series brackets are requested for a pair
    that violates the centering or ``3*rho <= |theta| <= sigma`` regime.
    """


class ResourceLimit(MraError):
    """A computation would exceed the enumeration/memory guard."""
