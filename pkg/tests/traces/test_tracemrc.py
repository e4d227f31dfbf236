"""Tests for LRU and farthest-next-use miss-ratio curves"""

import numpy as np
import pytest

from latentsim.errors import ConfigError, UnknownObjectError
from latentsim.traces import (
    ObjectMeta,
    belady_misses,
    lru_misses,
    make_trace,
    miss_ratio_curve,
    synthetic_workload,
)


class TestMissCounters:
    """Hand-checked miss counts"""

    def test_lru_small(self):
        assert lru_misses([1, 2, 1, 3, 1], 2) == 3

    def test_belady_beats_lru(self):
        ids = [1, 2, 3, 1, 2, 4, 1, 2]
        assert lru_misses(ids, 2) == 8
        assert belady_misses(ids, 2) == 6

    def test_cold_misses_only_when_everything_fits(self):
        ids = [1, 2, 3, 1, 2, 3]
        assert lru_misses(ids, 3) == 3
        assert belady_misses(ids, 3) == 3

    def test_oversized_object_always_misses(self):
        sizes = {1: 10, 2: 1}
        assert lru_misses([1, 1, 2, 2], 5, sizes) == 3


class TestRandomTraces:
    """Orderings that hold on any unit-size trace"""

    @pytest.mark.parametrize("seed", range(60))
    def test_farthest_next_use_never_loses_to_lru(self, seed):
        rng = np.random.default_rng(seed)
        n_objects = int(rng.integers(5, 400))
        ids = [int(x) for x in rng.zipf(rng.uniform(1.05, 2.0), int(rng.integers(100, 3000))) % n_objects]
        compulsory = len(set(ids))
        previous = None
        for capacity in sorted({1, int(rng.integers(2, 50)), int(rng.integers(50, 200))}):
            opt = belady_misses(ids, capacity)
            assert compulsory <= opt <= lru_misses(ids, capacity)
            if previous is not None:
                assert opt <= previous
            previous = opt


class TestMissRatioCurve:
    """miss_ratio_curve over synthetic traces"""

    @pytest.fixture(scope="class")
    def trace(self):
        trace, _ = synthetic_workload(n_objects_initial=300, duration_days=2,
                                      requests_per_day=1500, seed=2)
        return trace

    def test_lru_non_increasing(self, trace):
        curve = miss_ratio_curve(trace, [1, 5, 20, 80, 300], "lru")
        ratios = curve["miss_ratio"].tolist()
        assert all(b <= a for a, b in zip(ratios, ratios[1:]))

    def test_belady_lower_bound(self, trace):
        caps = [5, 20, 80]
        lru = miss_ratio_curve(trace, caps, "lru")["miss_ratio"]
        opt = miss_ratio_curve(trace, caps, "belady")["miss_ratio"]
        assert (opt <= lru).all()

    def test_full_capacity_is_compulsory_only(self, trace):
        n_distinct = trace["object_id"].nunique()
        curve = miss_ratio_curve(trace, [n_distinct], "lru")
        assert curve["miss_ratio"].iloc[0] == pytest.approx(n_distinct / len(trace))

    def test_byte_capacities(self):
        trace = make_trace(range(4), [1, 2, 1, 2])
        catalog = {1: ObjectMeta(100, 10), 2: ObjectMeta(100, 10)}
        curve = miss_ratio_curve(trace, [100, 200], "lru", unit="bytes", catalog=catalog)
        assert curve["miss_ratio"].tolist() == [1.0, 0.5]

    def test_rejects_bad_input(self, trace):
        with pytest.raises(ConfigError):
            miss_ratio_curve(trace, [10, 5])
        with pytest.raises(ConfigError):
            miss_ratio_curve(trace, [0])
        with pytest.raises(ConfigError):
            miss_ratio_curve(trace, [5], "fifo")
        with pytest.raises(ConfigError):
            miss_ratio_curve(trace, [5], unit="bytes")

    def test_byte_capacities_need_every_id(self):
        trace = make_trace(range(2), [1, 2])
        with pytest.raises(UnknownObjectError):
            miss_ratio_curve(trace, [10], unit="bytes", catalog={1: ObjectMeta(5, 1)})
