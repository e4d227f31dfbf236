"""Dual-format cache: an image tier and a latent tier under one byte budget.

Capacity ``C`` is split by ``alpha``: the image tier gets ``floor(alpha*C)``
bytes and the latent tier ``floor((1-alpha)*C)``. Each tier is a
:class:`~latentsim.caches.cachetier.SegmentedTier` with the same tail
fraction. Lookups check the image tier first, then the latent tier. A latent
entry that collects ``promotion_threshold`` hits moves to the image tier.
Each object lives in at most one tier.

Window counters record what the tuner needs: requests, image misses, full
misses and tail hits per tier. A tail hit is still a hit; the tail counters
are extra. Each lookup also adds the current tail occupancy of both tiers,
so a window knows how many bytes its tail hits were measured on.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from latentsim.caches.cachetier import TAIL, CacheEntry, SegmentedTier
from latentsim.errors import CacheStateError, ConfigError
from latentsim.traces.tracetypes import ObjectMeta

logger = logging.getLogger(__name__)

IMAGE = "image"
LATENT = "latent"


class Outcome(str, Enum):
    IMAGE_HIT = "image_hit"
    LATENT_HIT = "latent_hit"
    FULL_MISS = "full_miss"


@dataclass(frozen=True)
class LookupResult:
    """Outcome of :meth:`DualCache.lookup`.

    ``promoted`` is only ever true for latent hits. ``evicted`` lists image
    entries pushed out by a promotion, or entries pushed out of the tail by
    the hit's reordering (possible only with mixed sizes).
    """
    outcome: Outcome
    promoted: bool = False
    tail_hit: bool = False
    evicted: Tuple[int, ...] = ()


@dataclass
class WindowCounters:
    total_requests: int = 0
    image_misses: int = 0
    full_misses: int = 0
    image_tail_hits: int = 0
    latent_tail_hits: int = 0
    # tail bytes summed over lookups; divide by total_requests for the mean
    image_tail_bytes: int = 0
    latent_tail_bytes: int = 0
    capacity_bytes: int = 0

    @property
    def image_hits(self) -> int:
        return self.total_requests - self.image_misses

    @property
    def latent_hits(self) -> int:
        return self.image_misses - self.full_misses


@dataclass(frozen=True)
class DualCacheConfig:
    """Static cache parameters.

    Attributes:
        capacity_bytes: Total per-node budget C
        alpha: Fraction of C for the image tier
        tail_fraction: Tail segment fraction tau, shared by both tiers
        promotion_threshold: Latent hits h before promotion
    """
    capacity_bytes: int
    alpha: float = 0.5
    tail_fraction: float = 0.10
    promotion_threshold: int = 8

    def validate(self) -> None:
        if self.capacity_bytes < 0:
            raise ConfigError("must be >= 0", field="capacity_bytes")
        _check_alpha(self.alpha)
        if not 0.0 < self.tail_fraction < 1.0:
            raise ConfigError("must be in (0, 1)", field="tail_fraction")
        if self.promotion_threshold < 1:
            raise ConfigError("must be >= 1", field="promotion_threshold")


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0 or math.isnan(alpha):
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}", field="alpha")


def tier_budgets(capacity_bytes: int, alpha: float) -> Tuple[int, int]:
    """(image_budget, latent_budget), both floor-rounded."""
    image = math.floor(alpha * capacity_bytes + 1e-9)
    latent = math.floor((1.0 - alpha) * capacity_bytes + 1e-9)
    return image, latent


class DualCache:
    """Per-node dual-format cache.

    Not thread-safe: one owner serializes all calls.

    Examples:
        >>> from latentsim.traces.tracetypes import ObjectMeta
        >>> meta = ObjectMeta(image_bytes=10, latent_bytes=2)
        >>> cache = DualCache(DualCacheConfig(capacity_bytes=100, promotion_threshold=1))
        >>> cache.lookup(1, meta).outcome.value
        'full_miss'
        >>> cache.admit_latent(1, meta)
        []
        >>> cache.lookup(1, meta).promoted
        True
        >>> cache.lookup(1, meta).outcome.value
        'image_hit'
    """

    def __init__(self, config: DualCacheConfig):
        config.validate()
        self.config = config
        self.alpha = float(config.alpha)
        image_budget, latent_budget = tier_budgets(config.capacity_bytes, self.alpha)
        self._image = SegmentedTier(IMAGE, image_budget, config.tail_fraction)
        self._latent = SegmentedTier(LATENT, latent_budget, config.tail_fraction)
        self._counters = WindowCounters()

    # ---- queries ----
    @property
    def counters(self) -> WindowCounters:
        """Live counters (read-only by convention; use snapshot_and_reset_counters)."""
        return self._counters

    @property
    def capacity_bytes(self) -> int:
        return self.config.capacity_bytes

    @property
    def promotion_threshold(self) -> int:
        return self.config.promotion_threshold

    def contains(self, object_id: int) -> Optional[str]:
        """Tier name holding ``object_id``, or None."""
        if object_id in self._image:
            return IMAGE
        if object_id in self._latent:
            return LATENT
        return None

    def used_bytes(self, tier: str) -> int:
        return self._tier(tier).used_bytes

    def budgets(self) -> Dict[str, int]:
        return {
            "image": self._image.budget,
            "image_main": self._image.main_budget,
            "image_tail": self._image.tail_budget,
            "latent": self._latent.budget,
            "latent_main": self._latent.main_budget,
            "latent_tail": self._latent.tail_budget,
        }

    def latent_hit_count(self, object_id: int) -> int:
        entry = self._latent.get(object_id)
        if entry is None:
            raise CacheStateError(f"object {object_id} is not in the latent tier")
        return entry.latent_hit_count

    def _tier(self, name: str) -> SegmentedTier:
        if name == IMAGE:
            return self._image
        if name == LATENT:
            return self._latent
        raise ValueError(f"unknown tier '{name}'")

    # ---- operations ----
    def lookup(self, object_id: int, meta: Optional[ObjectMeta]) -> LookupResult:
        """Check image tier, then latent tier; update counters and recency.

        Raises:
            CacheStateError: ``meta`` is None
        """
        if meta is None:
            raise CacheStateError(f"lookup of {object_id} without object sizes")
        c = self._counters
        c.total_requests += 1
        c.image_tail_bytes += self._image.tail_used
        c.latent_tail_bytes += self._latent.tail_used

        segment = self._image.segment_of(object_id)
        if segment is not None:
            tail_hit = segment == TAIL
            if tail_hit:
                c.image_tail_hits += 1
            evicted = self._image.touch(object_id)
            return LookupResult(Outcome.IMAGE_HIT, tail_hit=tail_hit, evicted=tuple(evicted))

        c.image_misses += 1
        segment = self._latent.segment_of(object_id)
        if segment is None:
            c.full_misses += 1
            return LookupResult(Outcome.FULL_MISS)

        tail_hit = segment == TAIL
        if tail_hit:
            c.latent_tail_hits += 1
        entry = self._latent.get(object_id)
        entry.latent_hit_count += 1
        h = self.config.promotion_threshold
        if entry.latent_hit_count >= h:
            if meta.image_bytes <= self._image.main_budget:
                self._latent.remove(object_id)
                evicted = self._image.insert(CacheEntry(object_id, meta.image_bytes))
                logger.debug("promoted %d to image tier", object_id)
                return LookupResult(Outcome.LATENT_HIT, promoted=True, tail_hit=tail_hit,
                                    evicted=tuple(evicted))
            entry.latent_hit_count = h - 1
        evicted = self._latent.touch(object_id)
        return LookupResult(Outcome.LATENT_HIT, tail_hit=tail_hit, evicted=tuple(evicted))

    def _admit(self, tier: SegmentedTier, object_id: int, stored_bytes: int) -> List[int]:
        if self.contains(object_id) is not None:
            raise CacheStateError(f"object {object_id} is already cached")
        if stored_bytes > tier.main_budget:
            return [object_id]
        return tier.insert(CacheEntry(object_id, stored_bytes))

    def admit_latent(self, object_id: int, meta: ObjectMeta) -> List[int]:
        """Insert a freshly fetched latent at latent main MRU.

        Returns:
            Evicted ids. An object larger than the latent tier's main budget
            is returned as its own eviction and the cache is unchanged.

        Raises:
            CacheStateError: object already present in either tier
        """
        return self._admit(self._latent, object_id, meta.latent_bytes)

    def admit_image(self, object_id: int, meta: ObjectMeta) -> List[int]:
        """Insert a decoded image at image main MRU (same bypass rule)."""
        return self._admit(self._image, object_id, meta.image_bytes)

    def admit_fetched(self, object_id: int, meta: ObjectMeta) -> List[int]:
        """Admit after a full miss: the latent, or the decoded image when the
        latent tier cannot hold it (e.g. alpha = 1).
        """
        evicted = self.admit_latent(object_id, meta)
        if object_id in evicted:
            evicted = [oid for oid in evicted if oid != object_id]
            evicted += self.admit_image(object_id, meta)
        return evicted

    def set_alpha(self, alpha: float) -> List[int]:
        """Recompute both tier budgets and evict overflow (tail LRU end first).

        Counters are left alone; resetting them is the tuner's call.
        """
        _check_alpha(alpha)
        self.alpha = float(alpha)
        image_budget, latent_budget = tier_budgets(self.config.capacity_bytes, self.alpha)
        evicted = self._image.resize(image_budget)
        evicted += self._latent.resize(latent_budget)
        return evicted

    def snapshot_and_reset_counters(self) -> WindowCounters:
        snapshot = self._counters
        snapshot.capacity_bytes = self.config.capacity_bytes
        self._counters = WindowCounters()
        return snapshot

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready state dump."""
        return {
            "alpha": self.alpha,
            "capacity_bytes": self.config.capacity_bytes,
            "tail_fraction": self.config.tail_fraction,
            "promotion_threshold": self.config.promotion_threshold,
            "image": self._image.to_dict(),
            "latent": self._latent.to_dict(),
            "counters": asdict(self._counters),
        }
