"""Tests for object-level downsampling"""

import numpy as np
import pytest

from latentsim.errors import ConfigError
from latentsim.traces import downsample, synthetic_workload


@pytest.fixture(scope="module")
def trace():
    trace, _ = synthetic_workload(n_objects_initial=200, duration_days=3, requests_per_day=1000, seed=5)
    return trace


class TestDownsample:
    """downsample keeps whole objects"""

    def test_keeps_k_objects(self, trace):
        kept = downsample(trace, 25, seed=1)
        assert kept["object_id"].nunique() == 25

    def test_keeps_every_access_of_kept_objects(self, trace):
        kept = downsample(trace, 25, seed=1)
        for oid in kept["object_id"].unique()[:5]:
            original = trace.loc[trace["object_id"] == oid, "ts_ms"].to_numpy()
            assert np.array_equal(kept.loc[kept["object_id"] == oid, "ts_ms"].to_numpy(), original)

    def test_deterministic(self, trace):
        assert downsample(trace, 10, seed=3).equals(downsample(trace, 10, seed=3))

    def test_all_objects_is_identity(self, trace):
        n = trace["object_id"].nunique()
        assert downsample(trace, n).equals(trace.reset_index(drop=True))

    def test_bounds(self, trace):
        with pytest.raises(ConfigError):
            downsample(trace, 0)
        with pytest.raises(ConfigError):
            downsample(trace, trace["object_id"].nunique() + 1)
