"""One byte-budgeted segmented-LRU tier.

A tier is a ``main`` segment followed by a thin ``tail`` segment. Together
they form a single LRU list of at most ``budget`` bytes, cut at the main
budget:

  - inserts and hits go to the MRU end of ``main``
  - ``main`` overflow demotes its LRU entry to the MRU end of ``tail``
  - while the tier is over budget, the ``tail`` LRU entry is evicted

A hit in ``tail`` is a request that a tier ``tail_budget`` bytes smaller
would have missed. With uniform object sizes and a tail budget of at least
one object this is exact. When the tail budget is smaller than the object at
the LRU end and the tier has no room for another such object, that entry is
kept in ``tail`` anyway, so the tail stands for the last object's worth of
bytes instead of being permanently empty.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

MAIN = "main"
TAIL = "tail"


@dataclass
class CacheEntry:
    object_id: int
    stored_bytes: int
    latent_hit_count: int = 0


def split_budget(budget: int, tail_fraction: float):
    """Return (main_budget, tail_budget); tail is floor(tau * budget)."""
    tail = math.floor(tail_fraction * budget + 1e-9)
    return budget - tail, tail


class SegmentedTier:
    """Segmented LRU over byte budgets.

    Entries are kept in two ``OrderedDict``s whose first item is the LRU end.
    """

    def __init__(self, name: str, budget: int, tail_fraction: float):
        self.name = name
        self.tail_fraction = tail_fraction
        self.main: "OrderedDict[int, CacheEntry]" = OrderedDict()
        self.tail: "OrderedDict[int, CacheEntry]" = OrderedDict()
        self.main_used = 0
        self.tail_used = 0
        self.budget = 0
        self.main_budget = 0
        self.tail_budget = 0
        self._set_budget(budget)

    def _set_budget(self, budget: int) -> None:
        self.budget = int(budget)
        self.main_budget, self.tail_budget = split_budget(self.budget, self.tail_fraction)

    # ---- queries ----
    def __contains__(self, object_id: int) -> bool:
        return object_id in self.main or object_id in self.tail

    def __len__(self) -> int:
        return len(self.main) + len(self.tail)

    @property
    def used_bytes(self) -> int:
        return self.main_used + self.tail_used

    def segment_of(self, object_id: int) -> Optional[str]:
        if object_id in self.main:
            return MAIN
        if object_id in self.tail:
            return TAIL
        return None

    def get(self, object_id: int) -> Optional[CacheEntry]:
        return self.main.get(object_id) or self.tail.get(object_id)

    # ---- mutations ----
    def insert(self, entry: CacheEntry) -> List[int]:
        """Place ``entry`` at main MRU and rebalance; returns evicted ids."""
        self.main[entry.object_id] = entry
        self.main_used += entry.stored_bytes
        return self._rebalance()

    def touch(self, object_id: int) -> List[int]:
        """Move an entry to main MRU (a hit); returns evicted ids."""
        if object_id in self.tail:
            entry = self.tail.pop(object_id)
            self.tail_used -= entry.stored_bytes
            self.main[object_id] = entry
            self.main_used += entry.stored_bytes
        else:
            self.main.move_to_end(object_id)
        return self._rebalance()

    def remove(self, object_id: int) -> CacheEntry:
        if object_id in self.main:
            entry = self.main.pop(object_id)
            self.main_used -= entry.stored_bytes
        else:
            entry = self.tail.pop(object_id)
            self.tail_used -= entry.stored_bytes
        return entry

    def resize(self, budget: int) -> List[int]:
        self._set_budget(budget)
        return self._rebalance()

    def _demote_lru(self) -> None:
        oid, entry = self.main.popitem(last=False)
        self.main_used -= entry.stored_bytes
        self.tail[oid] = entry
        self.tail_used += entry.stored_bytes

    def _rebalance(self) -> List[int]:
        evicted: List[int] = []
        while self.main_used > self.main_budget and self.main:
            self._demote_lru()
        while self.used_bytes > self.budget and self.tail:
            oid, entry = self.tail.popitem(last=False)
            self.tail_used -= entry.stored_bytes
            evicted.append(oid)
        if not self.tail and self.main:
            lru = next(iter(self.main.values()))
            if lru.stored_bytes > self.tail_budget and self.budget - self.used_bytes < lru.stored_bytes:
                self._demote_lru()
        return evicted

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready dump; segment lists run LRU -> MRU."""
        def _dump(segment):
            return [[e.object_id, e.stored_bytes, e.latent_hit_count] for e in segment.values()]

        return {
            "budget": self.budget,
            "main_budget": self.main_budget,
            "tail_budget": self.tail_budget,
            "main_used": self.main_used,
            "tail_used": self.tail_used,
            "main": _dump(self.main),
            "tail": _dump(self.tail),
        }
