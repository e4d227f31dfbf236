"""Consistent-hash routing with coalescing and spillover."""

from .routerring import Ring, owner_of, fnv1a64, fmix64, hash64, vnode_point, DEFAULT_VNODES
from .router import (
    RouteDecision,
    route,
    Role,
    InFlightMap,
    coalesce_begin,
    coalesce_complete,
)

__all__ = [
    "Ring",
    "owner_of",
    "fnv1a64",
    "fmix64",
    "hash64",
    "vnode_point",
    "DEFAULT_VNODES",
    "RouteDecision",
    "route",
    "Role",
    "InFlightMap",
    "coalesce_begin",
    "coalesce_complete",
]
