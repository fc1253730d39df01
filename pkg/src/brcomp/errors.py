"""Exception types shared across the package."""


class CapError(Exception):
    """A size or depth cap was exceeded; the operation refuses rather than approximate."""


class UnreachableTargetError(ValueError):
    """A requested delta/epsilon target lies outside the achievable range.

    Carries the boundary value so callers can report it.
    """

    def __init__(self, message, boundary):
        super().__init__(message)
        self.boundary = boundary
