"""Dual-format (image / latent) segmented-LRU cache."""

from .cachetier import CacheEntry, SegmentedTier, split_budget
from .dualcache import (
    DualCache,
    DualCacheConfig,
    LookupResult,
    Outcome,
    WindowCounters,
    tier_budgets,
    IMAGE,
    LATENT,
)

__all__ = [
    "DualCache",
    "DualCacheConfig",
    "LookupResult",
    "Outcome",
    "WindowCounters",
    "tier_budgets",
    "CacheEntry",
    "SegmentedTier",
    "split_budget",
    "IMAGE",
    "LATENT",
]
