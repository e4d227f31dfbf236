"""Basic test to verify test framework is working"""

import pytest
from latentsim import __version__


def test_version_exists():
    """Test that package version is defined"""
    assert __version__ is not None
    assert isinstance(__version__, str)


def test_main_api_imports():
    """Test that main API functions can be imported"""
    from latentsim import (
        horizon_table,
        miss_ratio_curve,
        run,
        synthetic_workload,
    )

    # All should be callable
    assert callable(horizon_table)
    assert callable(miss_ratio_curve)
    assert callable(run)
    assert callable(synthetic_workload)


def test_end_to_end_smoke():
    """Generate a small workload and replay it"""
    from latentsim import ClusterConfig, run, synthetic_workload

    trace, catalog = synthetic_workload(n_objects_initial=50, duration_days=1, requests_per_day=200)
    report = run(trace, catalog, ClusterConfig(per_node_cache_bytes=10_000_000))
    assert report.summary["n_requests"] == 200
    assert report.mean_ms > 0


def test_errors_share_a_base():
    """Every library error derives from LatentSimError"""
    from latentsim import errors

    for name in ("ConfigError", "EmptyTraceError", "UnknownObjectError", "CoalesceError", "EmptyRingError"):
        assert issubclass(getattr(errors, name), errors.LatentSimError)


@pytest.mark.parametrize("module", ["latentsim.__main__", "latentsim.cli"])
def test_entry_points_import(module):
    """CLI modules import without side effects"""
    import importlib

    assert importlib.import_module(module) is not None
