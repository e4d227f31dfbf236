"""Exception hierarchy for latentsim.

Every error derives from :class:`LatentSimError` and also from the closest
built-in exception, so ``except ValueError`` keeps working for callers that do
not know about this package.
"""

from __future__ import annotations

from typing import Optional


class LatentSimError(Exception):
    """Base class for all latentsim errors."""


class ConfigError(LatentSimError, ValueError):
    """Invalid configuration value.

    Args:
        message: Human readable description
        field: Name of the offending configuration field, if known
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class InsufficientDataError(LatentSimError, ValueError):
    """Not enough data to compute a statistic."""


class EmptyTraceError(LatentSimError, ValueError):
    """Operation requires a non-empty trace."""


class EmptyWindowError(LatentSimError, ValueError):
    """Tuning window closed with zero requests."""


class UnknownObjectError(LatentSimError, KeyError):
    """Object id is not present in the catalog."""

    def __init__(self, object_id: int):
        self.object_id = object_id
        super().__init__(f"object_id {object_id} not found in catalog")

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return self.args[0]


class CacheStateError(LatentSimError, RuntimeError):
    """A cache operation was called in a state that violates its precondition."""


class CoalesceError(LatentSimError, RuntimeError):
    """Coalescing ticket missing (double completion)."""


class EmptyRingError(LatentSimError, ValueError):
    """Owner lookup on a ring without nodes."""


class TraceFormatError(LatentSimError, ValueError):
    """Malformed trace or catalog file."""
