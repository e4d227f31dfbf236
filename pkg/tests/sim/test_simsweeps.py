"""Tests for multi-run experiments (alpha sweep, spillover, crossover, regime change, sensitivity)"""

import math

import numpy as np
import pytest

from latentsim.errors import ConfigError
from latentsim.sim import (
    ClusterConfig,
    Policy,
    best_static,
    compare_spillover,
    footprint_bytes,
    gradient_agreement,
    run,
    shadow_gradient_check,
    sweep_alpha,
    sweep_cache_sizes,
    sweep_parameter,
)
from latentsim.traces import concat_traces, synthetic_workload
from latentsim.traces.tracetypes import DEFAULT_IMAGE_BYTES


# ---- Fixtures ----

@pytest.fixture(scope="module")
def workload():
    return synthetic_workload(n_objects_initial=400, duration_days=1, requests_per_day=4000, seed=21)


@pytest.fixture(scope="module")
def base_cfg(workload):
    trace, catalog = workload
    per_node = footprint_bytes(trace, catalog) // 10
    return ClusterConfig(per_node_cache_bytes=per_node, tuner_window=300)


class TestAlphaSweep:
    """Static alpha sweep"""

    def test_one_row_per_alpha(self, workload, base_cfg):
        trace, catalog = workload
        sweep = sweep_alpha(trace, catalog, base_cfg, [0.0, 0.5, 1.0])
        assert list(sweep.columns) == ["alpha", "mean_ms", "p99_ms"]
        assert sweep["alpha"].tolist() == [0.0, 0.5, 1.0]
        best = best_static(sweep)
        assert best["mean_ms"] == sweep["mean_ms"].min()
        assert best["alpha"] in (0.0, 0.5, 1.0)


class TestSpilloverComparison:
    """compare_spillover"""

    def test_inf_listed_first(self, workload, base_cfg):
        trace, catalog = workload
        table = compare_spillover(trace, catalog, base_cfg, [4, math.inf])
        assert math.isinf(table["theta"].iloc[0])
        assert table["theta"].tolist()[1:] == [4.0]
        assert table["spills"].iloc[0] == 0


class TestCacheSizes:
    """Cache-size crossover between image and latent caching"""

    def test_footprint(self, workload):
        trace, catalog = workload
        ids = set(int(x) for x in trace["object_id"])
        assert footprint_bytes(trace, catalog) == sum(catalog[i].image_bytes for i in ids)

    def test_rejects_zero_fraction(self, workload, base_cfg):
        trace, catalog = workload
        with pytest.raises(ConfigError):
            sweep_cache_sizes(trace, catalog, base_cfg, [0.0])

    @pytest.mark.slow
    def test_crossover(self):
        trace, catalog = synthetic_workload(n_objects_initial=4000, duration_days=1,
                                            requests_per_day=40_000, decay_exponent=0.0, seed=1)
        fractions = [0.002, 0.01, 0.1]
        table = sweep_cache_sizes(trace, catalog, ClusterConfig(n_nodes=1), fractions)
        mean = table.set_index(["fraction", "policy"])["mean_ms"]
        small, large = fractions[0], fractions[-1]

        assert mean[(small, "latent-cache")] < mean[(small, "img-cache")]
        assert mean[(large, "img-cache")] < mean[(large, "latent-cache")]
        for fraction in fractions:
            best = min(mean[(fraction, "img-cache")], mean[(fraction, "latent-cache")])
            assert mean[(fraction, "adaptive")] <= 1.05 * best

    def test_image_tier_too_small_for_any_image(self):
        trace, catalog = synthetic_workload(n_objects_initial=2000, duration_days=1,
                                            requests_per_day=5000, decay_exponent=0.0, seed=1)
        table = sweep_cache_sizes(trace, catalog, ClusterConfig(), [0.001], [Policy.IMG_CACHE])
        assert table["full_miss"].iloc[0] == 1.0


class TestRegimeChange:
    """Adaptive split against static splits when the working set outgrows the cache"""

    @pytest.fixture(scope="class")
    def two_regimes(self):
        small, small_catalog = synthetic_workload(n_objects_initial=120, duration_days=1,
                                                  requests_per_day=30_000, decay_exponent=0.0, seed=31)
        large, large_catalog = synthetic_workload(n_objects_initial=5000, duration_days=1,
                                                  requests_per_day=15_000, decay_exponent=0.0, seed=32)
        return concat_traces(small, large, gap_ms=1000), {**small_catalog, **large_catalog}

    # room for 100 images; the first regime has 120 objects, the second 5000
    CFG = ClusterConfig(n_nodes=1, per_node_cache_bytes=100 * DEFAULT_IMAGE_BYTES,
                        tuner_window=100, tuner_step=0.02)

    @pytest.fixture(scope="class")
    def adaptive(self, two_regimes):
        trace, catalog = two_regimes
        return run(trace, catalog, self.CFG)

    @pytest.mark.slow
    def test_adaptive_tracks_best_static(self, two_regimes, adaptive):
        trace, catalog = two_regimes
        sweep = sweep_alpha(trace, catalog, self.CFG, [0.1, 0.3, 0.5, 0.7, 0.9])
        assert adaptive.mean_ms <= 1.05 * best_static(sweep)["mean_ms"]
        assert adaptive.mean_ms <= 0.9 * sweep["mean_ms"].max()

    @pytest.mark.slow
    def test_alpha_falls_after_the_switch(self, adaptive):
        windows = adaptive.windows
        switch = 30_000 // 100
        first, second = windows.iloc[switch - 50:switch], windows.iloc[-50:]
        assert first["alpha"].mean() > second["alpha"].mean() + 0.1


class TestSensitivity:
    """sweep_parameter"""

    def test_aliases(self, workload, base_cfg):
        trace, catalog = workload
        table = sweep_parameter(trace, catalog, base_cfg, "h", [1, 8])
        assert table["parameter"].unique().tolist() == ["promotion_threshold"]
        assert table["value"].tolist() == [1, 8]
        assert table["mean_final_alpha"].between(0.0, 1.0).all()

    def test_window(self, workload, base_cfg):
        trace, catalog = workload
        table = sweep_parameter(trace, catalog, base_cfg, "window", [100.0, 1000.0])
        assert table["value"].tolist() == [100, 1000]

    def test_unknown_parameter(self, workload, base_cfg):
        trace, catalog = workload
        with pytest.raises(ConfigError):
            sweep_parameter(trace, catalog, base_cfg, "gamma", [1])


class TestShadowGradient:
    """Descent-direction check of D against shadow replays"""

    @pytest.fixture(scope="class")
    def check(self, workload, base_cfg):
        trace, catalog = workload
        return shadow_gradient_check(trace, catalog, base_cfg, delta=0.05)

    def test_shape(self, check, base_cfg):
        assert list(check.columns) == [
            "node", "window_idx", "alpha", "D", "cost_minus", "cost_base", "cost_plus", "better", "agrees",
        ]
        assert set(check["better"]) <= {"minus", "plus", "tie"}
        assert check["alpha"].between(0.0, 1.0).all()

    def test_alpha_follows_sign_of_d(self, check):
        for _, rows in check.groupby("node"):
            alphas = rows["alpha"].to_numpy()
            d = rows["D"].to_numpy()[:-1]
            moves = np.diff(alphas)
            assert np.all(moves[d < 0] >= 0)
            assert np.all(moves[d > 0] <= 0)

    @pytest.mark.slow
    @pytest.mark.parametrize("start_alpha", [0.05, 0.9])
    def test_agreement_on_stationary_trace(self, start_alpha):
        trace, catalog = synthetic_workload(n_objects_initial=3000, duration_days=2,
                                            requests_per_day=30_000, decay_exponent=0.0, seed=2)
        cfg = ClusterConfig(n_nodes=1, per_node_cache_bytes=footprint_bytes(trace, catalog) // 100,
                            alpha=start_alpha, tuner_window=2000)
        check = shadow_gradient_check(trace, catalog, cfg, delta=0.05)
        agreement = gradient_agreement(check)
        assert not math.isnan(agreement)
        assert agreement >= 0.9

    def test_agreement_without_decisive_windows(self):
        import pandas as pd

        check = pd.DataFrame({"D": [0.0], "better": ["tie"], "agrees": [False]})
        assert math.isnan(gradient_agreement(check))
