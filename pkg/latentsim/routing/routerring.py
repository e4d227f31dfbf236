"""Consistent-hash ring.

Hashing is 64-bit FNV-1a followed by the murmur3 64-bit finalizer:

  - object point: hash64(object_id as 8 little-endian bytes)
  - vnode point:  hash64(node_id as 8 LE bytes || vnode index as 4 LE bytes)

The owner of an id is the node of the first ring point at or after the id's
hash, wrapping around. Both functions are plain integer arithmetic and give
identical results in any language.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from latentsim.errors import ConfigError, EmptyRingError

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1
DEFAULT_VNODES = 128


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a.

    Examples:
        >>> hex(fnv1a64(b""))
        '0xcbf29ce484222325'
        >>> hex(fnv1a64(b"a"))
        '0xaf63dc4c8601ec8c'
    """
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def fmix64(h: int) -> int:
    """murmur3 64-bit finalizer (avalanche step)."""
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & MASK64
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & MASK64
    h ^= h >> 33
    return h


def hash64(object_id: int) -> int:
    """Ring position of an object id."""
    return fmix64(fnv1a64((object_id & MASK64).to_bytes(8, "little")))


def vnode_point(node_id: int, vnode: int) -> int:
    key = (node_id & MASK64).to_bytes(8, "little") + (vnode & 0xFFFFFFFF).to_bytes(4, "little")
    return fmix64(fnv1a64(key))


@dataclass(frozen=True)
class Ring:
    """Immutable consistent-hash ring.

    Examples:
        >>> ring = Ring.build([0])
        >>> ring.owner_of(123456789)
        0
    """
    nodes: Tuple[int, ...]
    vnodes_per_node: int = DEFAULT_VNODES
    points: Tuple[Tuple[int, int], ...] = field(default=(), repr=False)
    _hashes: Tuple[int, ...] = field(default=(), repr=False, compare=False)

    @classmethod
    def build(cls, nodes: Iterable[int], vnodes_per_node: int = DEFAULT_VNODES) -> "Ring":
        node_ids = tuple(sorted(int(n) for n in nodes))
        if len(set(node_ids)) != len(node_ids):
            raise ConfigError("duplicate node ids", field="nodes")
        if vnodes_per_node < 1:
            raise ConfigError("must be >= 1", field="vnodes_per_node")
        points = sorted(
            (vnode_point(n, v), n) for n in node_ids for v in range(vnodes_per_node)
        )
        return cls(
            nodes=node_ids,
            vnodes_per_node=vnodes_per_node,
            points=tuple(points),
            _hashes=tuple(p for p, _ in points),
        )

    def owner_of(self, object_id: int) -> int:
        """Node owning ``object_id``.

        Raises:
            EmptyRingError: ring has no nodes
        """
        if not self.points:
            raise EmptyRingError("owner lookup on an empty ring")
        i = bisect.bisect_left(self._hashes, hash64(object_id))
        if i == len(self.points):
            i = 0
        return self.points[i][1]

    def with_node(self, node_id: int) -> "Ring":
        return Ring.build(self.nodes + (int(node_id),), self.vnodes_per_node)

    def without_node(self, node_id: int) -> "Ring":
        return Ring.build([n for n in self.nodes if n != node_id], self.vnodes_per_node)

    def shares(self, object_ids: Sequence[int]) -> Dict[int, float]:
        """Fraction of ``object_ids`` owned by each node."""
        counts = {n: 0 for n in self.nodes}
        for oid in object_ids:
            counts[self.owner_of(oid)] += 1
        total = max(len(object_ids), 1)
        return {n: c / total for n, c in counts.items()}

    def to_dict(self) -> Dict[str, object]:
        """Ring layout: hash points per node, ascending."""
        per_node: Dict[int, List[int]] = {n: [] for n in self.nodes}
        for point, node in self.points:
            per_node[node].append(point)
        return {
            "vnodes_per_node": self.vnodes_per_node,
            "nodes": {str(n): pts for n, pts in per_node.items()},
        }


def owner_of(ring: Ring, object_id: int) -> int:
    return ring.owner_of(object_id)
