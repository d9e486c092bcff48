"""Exception types shared by every module."""


class InputError(ValueError):
    """Bad user-supplied input (maps to CLI exit status 2)."""


class CapExceeded(InputError):
    """An enumeration or dense construction would exceed its configured cap."""


class RankBoundError(InputError):
    """A register or qudit violates the rank bounds requested for the fast path."""


class InternalFault(RuntimeError):
    """A numerical invariant that must always hold was violated."""
