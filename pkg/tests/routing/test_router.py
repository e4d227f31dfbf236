"""Tests for the hash ring, spillover routing and request coalescing"""

import math
import threading

import numpy as np
import pytest

from latentsim.errors import CoalesceError, ConfigError, EmptyRingError
from latentsim.routing import (
    InFlightMap,
    Ring,
    Role,
    coalesce_begin,
    coalesce_complete,
    owner_of,
    route,
)
from latentsim.routing.routerring import fnv1a64, hash64


# ---- Fixtures ----

@pytest.fixture(scope="module")
def random_ids():
    rng = np.random.default_rng(2024)
    return [int(x) for x in rng.integers(0, 2**63, size=100_000, dtype=np.int64)]


@pytest.fixture
def ring3():
    return Ring.build([0, 1, 2])


class TestHashing:
    """Stable 64-bit hashing"""

    def test_fnv_reference_values(self):
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C

    def test_hash_fits_in_64_bits(self):
        for oid in (0, 1, 2**64 - 1, 123456789):
            assert 0 <= hash64(oid) < 2**64

    def test_hash_is_stable(self):
        assert hash64(42) == hash64(42)
        assert hash64(42) != hash64(43)


class TestRing:
    """Ring construction and ownership"""

    def test_layout(self, ring3):
        assert len(ring3.points) == 3 * 128
        hashes = [p for p, _ in ring3.points]
        assert hashes == sorted(hashes)
        layout = ring3.to_dict()
        assert sorted(layout["nodes"]) == ["0", "1", "2"]
        assert all(len(pts) == 128 for pts in layout["nodes"].values())

    def test_single_node(self):
        ring = Ring.build([7])
        assert {ring.owner_of(oid) for oid in range(200)} == {7}

    def test_deterministic(self, ring3):
        again = Ring.build([2, 0, 1])
        assert [ring3.owner_of(oid) for oid in range(500)] == [again.owner_of(oid) for oid in range(500)]
        assert owner_of(ring3, 99) == ring3.owner_of(99)

    def test_empty_ring(self):
        with pytest.raises(EmptyRingError):
            Ring.build([]).owner_of(1)

    def test_bad_construction(self):
        with pytest.raises(ConfigError):
            Ring.build([1, 1])
        with pytest.raises(ConfigError):
            Ring.build([1], vnodes_per_node=0)

    @pytest.mark.parametrize("n_nodes", [2, 3, 4, 7])
    def test_balance(self, random_ids, n_nodes):
        shares = Ring.build(range(n_nodes)).shares(random_ids)
        for share in shares.values():
            assert abs(share - 1 / n_nodes) <= 0.2 / n_nodes

    @pytest.mark.parametrize("n_nodes", [2, 3, 7])
    def test_adding_a_node_remaps_about_one_share(self, random_ids, n_nodes):
        ids = random_ids
        before = Ring.build(range(n_nodes))
        after = before.with_node(n_nodes)
        moved = [oid for oid in ids if before.owner_of(oid) != after.owner_of(oid)]
        expected = 1 / (n_nodes + 1)
        assert 0.6 * expected <= len(moved) / len(ids) <= 1.4 * expected
        # every moved key lands on the new node
        assert {after.owner_of(oid) for oid in moved} == {n_nodes}

    def test_remove_node(self, ring3):
        smaller = ring3.without_node(1)
        assert smaller.nodes == (0, 2)
        for oid in range(300):
            if ring3.owner_of(oid) != 1:
                assert smaller.owner_of(oid) == ring3.owner_of(oid)


class TestRoute:
    """Spillover routing"""

    def test_infinite_theta_never_spills(self, ring3):
        depths = {0: 100, 1: 100, 2: 100}
        for oid in range(50):
            decision = route(ring3, oid, depths)
            assert decision.executor_node == decision.owner_node == ring3.owner_of(oid)
            assert not decision.spilled

    def test_spills_to_least_loaded(self, ring3):
        owner = ring3.owner_of(42)
        first, second = [n for n in ring3.nodes if n != owner]
        depths = {owner: 5, first: 1, second: 2}
        decision = route(ring3, 42, depths, theta=4)
        assert decision.owner_node == owner
        assert decision.executor_node == first
        assert decision.spilled
        assert decision.writeback_required

    def test_ties_go_to_lowest_id(self, ring3):
        owner = ring3.owner_of(42)
        depths = {n: 1 for n in ring3.nodes}
        depths[owner] = 9
        expected = min(n for n in ring3.nodes if n != owner)
        assert route(ring3, 42, depths, theta=4).executor_node == expected

    def test_owner_is_least_loaded(self, ring3):
        owner = ring3.owner_of(42)
        depths = {n: 10 for n in ring3.nodes}
        depths[owner] = 6
        decision = route(ring3, 42, depths, theta=4)
        assert decision.executor_node == owner
        assert not decision.spilled
        assert not decision.writeback_required

    def test_below_threshold_stays_home(self, ring3):
        owner = ring3.owner_of(7)
        depths = {n: 0 for n in ring3.nodes}
        depths[owner] = 3
        assert not route(ring3, 7, depths, theta=4).spilled

    def test_uncacheable_spill_needs_no_writeback(self, ring3):
        owner = ring3.owner_of(42)
        depths = {n: 0 for n in ring3.nodes}
        depths[owner] = 8
        decision = route(ring3, 42, depths, theta=4, cacheable=False)
        assert decision.spilled
        assert not decision.writeback_required

    def test_missing_depths(self, ring3):
        with pytest.raises(ConfigError):
            route(ring3, 1, {0: 0, 1: 0}, theta=math.inf)


class TestCoalescing:
    """In-flight map"""

    def test_one_leader_many_followers(self):
        inflight = InFlightMap()
        roles = [coalesce_begin(inflight, 5, r) for r in range(3)]
        assert roles == [Role.LEADER, Role.FOLLOWER, Role.FOLLOWER]
        assert coalesce_complete(inflight, 5) == [0, 1, 2]
        assert 5 not in inflight

    def test_sequential_requests_each_lead(self):
        inflight = InFlightMap()
        for r in range(3):
            assert inflight.begin(9, r) is Role.LEADER
            assert inflight.complete(9) == [r]
        assert len(inflight) == 0

    def test_double_completion(self):
        inflight = InFlightMap()
        inflight.begin(1, 0)
        inflight.complete(1)
        with pytest.raises(CoalesceError):
            inflight.complete(1)

    def test_concurrent_begin_has_one_leader(self):
        inflight = InFlightMap()
        roles = []
        lock = threading.Lock()
        barrier = threading.Barrier(16)

        def worker(request_id):
            barrier.wait()
            role = inflight.begin(77, request_id)
            with lock:
                roles.append(role)

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert roles.count(Role.LEADER) == 1
        assert sorted(inflight.complete(77)) == list(range(16))
