"""Tests for the synthetic workload generator"""

import numpy as np
import pandas as pd
import pytest

from latentsim.errors import ConfigError
from latentsim.traces.tracegen import (
    AliasTable,
    concat_traces,
    generate_trace,
    sample_ages,
    splitmix64,
    zipf_counts,
)
from latentsim.traces.tracetypes import MS_PER_DAY, SizeModel, SynthConfig, is_sorted


# ---- Fixtures ----

@pytest.fixture(scope="module")
def small_cfg():
    return SynthConfig(n_objects_initial=500, duration_days=5, requests_per_day=2000, seed=11)


@pytest.fixture(scope="module")
def small_workload(small_cfg):
    return generate_trace(small_cfg)


class TestZipfCounts:
    """Largest-remainder allocation of requests over ranks"""

    def test_small_example(self):
        assert zipf_counts(10, 3, 1.0).tolist() == [5, 3, 2]

    def test_sums_to_total(self):
        counts = zipf_counts(123_457, 1000, 1.11)
        assert counts.sum() == 123_457

    def test_non_increasing(self):
        counts = zipf_counts(50_000, 2000, 1.11)
        assert np.all(np.diff(counts) <= 0)

    def test_more_ranks_than_requests(self):
        counts = zipf_counts(5, 100, 1.11)
        assert counts.sum() == 5
        assert (counts > 0).sum() <= 5


class TestGenerateTrace:
    """generate_trace output shape and determinism"""

    def test_length_and_columns(self, small_cfg, small_workload):
        trace, _ = small_workload
        assert len(trace) == small_cfg.total_requests
        assert list(trace.columns) == ["ts_ms", "object_id", "model_id", "model_version"]

    def test_sorted_and_in_window(self, small_cfg, small_workload):
        trace, _ = small_workload
        assert is_sorted(trace)
        ts = trace["ts_ms"].to_numpy()
        assert ts.min() >= 0
        assert ts.max() < small_cfg.duration_days * MS_PER_DAY

    def test_catalog_covers_exactly_requested_ids(self, small_workload):
        trace, catalog = small_workload
        assert set(int(x) for x in trace["object_id"].unique()) == set(catalog)

    def test_deterministic(self, small_cfg, small_workload):
        trace, catalog = small_workload
        again, catalog_again = generate_trace(small_cfg)
        pd.testing.assert_frame_equal(trace, again)
        assert catalog == catalog_again

    def test_seed_changes_ids(self, small_cfg, small_workload):
        trace, _ = small_workload
        other, _ = generate_trace(SynthConfig(**{**small_cfg.__dict__, "seed": 12}))
        assert set(trace["object_id"]) != set(other["object_id"])

    def test_realized_counts_match_configured_ranks(self, small_cfg, small_workload):
        trace, _ = small_workload
        realized = np.sort(trace["object_id"].value_counts().to_numpy())[::-1]
        expected = zipf_counts(small_cfg.total_requests, small_cfg.n_objects_initial,
                               small_cfg.zipf_exponent)
        expected = expected[expected > 0]
        assert realized.tolist() == expected.tolist()

    def test_self_report(self, small_workload):
        trace, _ = small_workload
        info = trace.attrs["generation"]
        assert info["decay_ratio_365d"] == pytest.approx(366.0 ** -1.3)
        assert info["n_requests"] == len(trace)

    def test_fixed_sizes(self, small_workload):
        _, catalog = small_workload
        model = SizeModel()
        assert {(m.image_bytes, m.latent_bytes) for m in catalog.values()} == {
            (model.image_bytes, model.latent_bytes)
        }

    def test_lognormal_sizes_keep_latent_smaller(self):
        cfg = SynthConfig(n_objects_initial=300, duration_days=1, requests_per_day=1000,
                          size_model=SizeModel(kind="lognormal", sigma=0.5))
        _, catalog = generate_trace(cfg)
        assert all(0 < m.latent_bytes < m.image_bytes for m in catalog.values())
        assert len({m.image_bytes for m in catalog.values()}) > 1


class TestArrivalsAndDecay:
    """Object arrivals and age decay"""

    def test_linear_arrivals(self):
        cfg = SynthConfig(n_objects_initial=100, arrival_rate=10, duration_days=30,
                          requests_per_day=200)
        trace, _ = generate_trace(cfg)
        assert trace.attrs["generation"]["n_objects"] == 400

    def test_cagr_arrivals(self):
        cfg = SynthConfig(n_objects_initial=10_000, arrival_model="cagr", arrival_cagr=0.127,
                          duration_days=365, requests_per_day=50)
        trace, _ = generate_trace(cfg)
        assert trace.attrs["generation"]["n_arrivals"] == 1270

    def test_no_decay_is_uniform_in_time(self):
        cfg = SynthConfig(n_objects_initial=200, decay_exponent=0.0, duration_days=10,
                          requests_per_day=2000, seed=3)
        trace, _ = generate_trace(cfg)
        first_half = (trace["ts_ms"] < 5 * MS_PER_DAY).mean()
        assert 0.45 < first_half < 0.55

    def test_decay_front_loads_requests(self):
        cfg = SynthConfig(n_objects_initial=200, decay_exponent=1.3, duration_days=10,
                          requests_per_day=2000, seed=3)
        trace, _ = generate_trace(cfg)
        assert (trace["ts_ms"] < 5 * MS_PER_DAY).mean() > 0.6

    def test_sample_ages_bounds(self):
        u = np.linspace(0.0, 0.999, 50)
        ages = sample_ages(u, np.full(50, 7.0), 1.3)
        assert ages.min() >= 0.0
        assert ages.max() <= 7.0
        assert np.all(np.diff(ages) >= 0)

    def test_sample_ages_exponent_one(self):
        ages = sample_ages(np.array([0.0, 1.0]), np.array([9.0, 9.0]), 1.0)
        assert ages.tolist() == pytest.approx([0.0, 9.0])


class TestHelpers:
    """Alias table, id mixing, concatenation and validation"""

    def test_alias_table_frequencies(self):
        table = AliasTable([1.0, 2.0, 7.0])
        draws = table.sample(np.random.default_rng(5), 100_000)
        freq = np.bincount(draws, minlength=3) / draws.size
        assert freq.tolist() == pytest.approx([0.1, 0.2, 0.7], abs=0.01)

    def test_alias_table_rejects_bad_weights(self):
        with pytest.raises(ConfigError):
            AliasTable([])
        with pytest.raises(ConfigError):
            AliasTable([1.0, -1.0])

    def test_splitmix_is_injective_on_range(self):
        mixed = splitmix64(np.arange(100_000, dtype=np.uint64))
        assert np.unique(mixed).size == 100_000

    def test_concat_traces(self, small_workload):
        trace, _ = small_workload
        both = concat_traces(trace, trace, gap_ms=1000)
        assert len(both) == 2 * len(trace)
        assert is_sorted(both)
        assert int(both["ts_ms"].iloc[len(trace)]) == (
            int(trace["ts_ms"].iloc[-1]) + 1000 + int(trace["ts_ms"].iloc[0])
        )

    def test_invalid_config_names_field(self):
        with pytest.raises(ConfigError, match="zipf_exponent"):
            generate_trace(SynthConfig(zipf_exponent=0.0))
        with pytest.raises(ConfigError, match="arrival_model"):
            generate_trace(SynthConfig(arrival_model="poisson"))
