"""Exception types raised by nphilab."""


class NphiError(Exception):
    """Base class for all library errors."""


class DomainError(NphiError, ValueError):
    """A point lies outside the domain where the operation is defined."""


class BoundaryRootError(NphiError, ValueError):
    """A root sits too close to the unit circle for a reliable answer."""


class PreconditionError(NphiError, ValueError):
    """Inputs violate a documented precondition."""


class TruncationError(NphiError, ValueError):
    """A result would not fit inside the declared truncation."""
