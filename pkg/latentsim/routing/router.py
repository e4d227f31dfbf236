"""Request routing: coalescing, ownership, queue-depth spillover.

Routing rule: the owner executes unless its queue depth has reached ``theta``;
then the globally least-loaded node executes (ties to the lowest id). A
spilled result is written back to the owner, which stays the only node that
caches the object.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping

from latentsim.errors import CoalesceError, ConfigError
from latentsim.routing.routerring import Ring


@dataclass(frozen=True)
class RouteDecision:
    owner_node: int
    executor_node: int
    spilled: bool
    writeback_required: bool


def route(
    ring: Ring,
    object_id: int,
    queue_depths: Mapping[int, int],
    theta: float = math.inf,
    cacheable: bool = True,
) -> RouteDecision:
    """Pick the executor for one request.

    Args:
        ring: Consistent-hash ring
        object_id: Requested object
        queue_depths: node -> jobs queued + running
        theta: Spill threshold; ``math.inf`` disables spillover
        cacheable: Whether the work yields something the owner caches

    Examples:
        >>> ring = Ring.build([0, 1, 2])
        >>> owner = ring.owner_of(42)
        >>> depths = {n: 0 for n in ring.nodes}
        >>> route(ring, 42, depths).executor_node == owner
        True
    """
    owner = ring.owner_of(object_id)
    missing = [n for n in ring.nodes if n not in queue_depths]
    if missing:
        raise ConfigError(f"queue_depths missing nodes {missing}", field="queue_depths")
    if queue_depths[owner] < theta:
        return RouteDecision(owner, owner, False, False)
    executor = min(ring.nodes, key=lambda n: (queue_depths[n], n))
    spilled = executor != owner
    return RouteDecision(owner, executor, spilled, spilled and cacheable)


class Role(str, Enum):
    LEADER = "leader"
    FOLLOWER = "follower"


class InFlightMap:
    """One ticket per in-flight object; later requests wait on it.

    ``begin`` and ``complete`` hold a lock, so they are atomic per object id.
    """

    def __init__(self):
        self._tickets: Dict[int, List[int]] = {}
        self._lock = threading.Lock()

    def __contains__(self, object_id: int) -> bool:
        return object_id in self._tickets

    def __len__(self) -> int:
        return len(self._tickets)

    def begin(self, object_id: int, request_id: int) -> Role:
        with self._lock:
            waiters = self._tickets.get(object_id)
            if waiters is None:
                self._tickets[object_id] = [request_id]
                return Role.LEADER
            waiters.append(request_id)
            return Role.FOLLOWER

    def complete(self, object_id: int) -> List[int]:
        """Remove the ticket and return all request ids, leader first.

        Raises:
            CoalesceError: no ticket (e.g. completed twice)
        """
        with self._lock:
            waiters = self._tickets.pop(object_id, None)
        if waiters is None:
            raise CoalesceError(f"no in-flight ticket for object {object_id}")
        return waiters


def coalesce_begin(inflight: InFlightMap, object_id: int, request_id: int) -> Role:
    return inflight.begin(object_id, request_id)


def coalesce_complete(inflight: InFlightMap, object_id: int) -> List[int]:
    return inflight.complete(object_id)
