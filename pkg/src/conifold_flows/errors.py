"""Exception types shared across the package.

The command line layer maps DomainError (and subclasses) to exit code 2,
and failed numerical checks to exit code 1.  Everything else is a bug.
"""

__all__ = [
    "DomainError",
    "PoleError",
    "SingularStateError",
    "GradientCatastropheError",
    "TruncationOrderError",
]


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation was requested exactly at a pole."""


class SingularStateError(RuntimeError):
    """Lattice state hit the singular set 1 - a*b = 0 (or left float range)."""


class GradientCatastropheError(RuntimeError):
    """Spatial gradient blow-up detected during dispersionless evolution."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class TruncationOrderError(ValueError):
    """A series operation was asked for orders beyond its truncation caps."""
