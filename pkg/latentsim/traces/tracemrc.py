"""Miss-ratio curves under LRU and Belady (offline optimal) replacement.

Both policies are single-format and demand-paged: every miss inserts the
requested object. Capacities are counted in objects, or in bytes of the
decoded image when ``unit="bytes"``.
"""

from __future__ import annotations

import heapq
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from latentsim.errors import ConfigError, UnknownObjectError
from latentsim.traces.tracetypes import Catalog

POLICIES = ("lru", "belady")


def _sizes_for(ids: List[int], unit: str, catalog: Optional[Catalog]) -> Optional[Dict[int, int]]:
    if unit == "objects":
        return None
    if unit != "bytes":
        raise ConfigError(f"unknown capacity unit '{unit}'", field="unit")
    if catalog is None:
        raise ConfigError("byte capacities need a catalog", field="catalog")
    sizes = {}
    for oid in set(ids):
        if oid not in catalog:
            raise UnknownObjectError(oid)
        sizes[oid] = catalog[oid].image_bytes
    return sizes


def lru_misses(ids: Sequence[int], capacity: float, sizes: Optional[Dict[int, int]] = None) -> int:
    """Count misses of a plain LRU cache over an id sequence."""
    cache: "OrderedDict[int, int]" = OrderedDict()
    used = 0
    misses = 0
    for oid in ids:
        if oid in cache:
            cache.move_to_end(oid)
            continue
        misses += 1
        size = sizes[oid] if sizes is not None else 1
        if size > capacity:
            continue
        while used + size > capacity:
            _, evicted = cache.popitem(last=False)
            used -= evicted
        cache[oid] = size
        used += size
    return misses


def _next_use(ids: Sequence[int]) -> List[int]:
    n = len(ids)
    nxt = [n] * n
    last: Dict[int, int] = {}
    for i in range(n - 1, -1, -1):
        oid = ids[i]
        nxt[i] = last.get(oid, n)
        last[oid] = i
    return nxt


def belady_misses(ids: Sequence[int], capacity: float, sizes: Optional[Dict[int, int]] = None) -> int:
    """Count misses under farthest-next-use eviction.

    With unit sizes this is the exact offline optimum. With byte sizes it
    evicts farthest-next-use objects until the newcomer fits.
    """
    nxt = _next_use(ids)
    cached: Dict[int, int] = {}
    heap: List[tuple] = []
    used = 0
    misses = 0
    for i, oid in enumerate(ids):
        if oid in cached:
            cached[oid] = nxt[i]
            heapq.heappush(heap, (-nxt[i], oid))
            continue
        misses += 1
        size = sizes[oid] if sizes is not None else 1
        if size > capacity:
            continue
        while used + size > capacity:
            neg_next, victim = heapq.heappop(heap)
            if cached.get(victim) != -neg_next:
                continue  # stale
            del cached[victim]
            used -= sizes[victim] if sizes is not None else 1
        cached[oid] = nxt[i]
        used += size
        heapq.heappush(heap, (-nxt[i], oid))
    return misses


def miss_ratio_curve(
    trace: pd.DataFrame,
    sizes: Sequence[float],
    policy: str = "lru",
    unit: str = "objects",
    catalog: Optional[Catalog] = None,
    progress: bool = False,
) -> pd.DataFrame:
    """Miss ratio at each capacity.

    Args:
        trace: Trace DataFrame
        sizes: Positive capacities in ascending order
        policy: ``lru`` or ``belady``
        unit: ``objects`` or ``bytes`` (image bytes from ``catalog``)
        catalog: Required for ``unit="bytes"``
        progress: Show a tqdm bar over capacities

    Returns:
        DataFrame with columns ``capacity, miss_ratio``

    Examples:
        >>> from latentsim.traces.tracetypes import make_trace
        >>> t = make_trace(range(6), [1, 2, 1, 2, 1, 2])
        >>> miss_ratio_curve(t, [1], "lru")["miss_ratio"].tolist()
        [1.0]
    """
    policy = policy.lower()
    if policy not in POLICIES:
        raise ConfigError(f"unknown policy '{policy}', expected one of {POLICIES}", field="policy")
    caps = [float(c) for c in sizes]
    if not caps or any(c <= 0 for c in caps):
        raise ConfigError("capacities must be positive", field="sizes")
    if any(b < a for a, b in zip(caps, caps[1:])):
        raise ConfigError("capacities must be ascending", field="sizes")

    ids = [int(x) for x in trace["object_id"].tolist()]
    byte_sizes = _sizes_for(ids, unit, catalog)
    simulate = lru_misses if policy == "lru" else belady_misses
    total = len(ids)
    ratios = []
    for cap in tqdm(caps, desc=f"mrc[{policy}]", disable=not progress):
        misses = simulate(ids, cap, byte_sizes)
        ratios.append(misses / total if total else 0.0)
    return pd.DataFrame({"capacity": np.asarray(sizes), "miss_ratio": ratios})
