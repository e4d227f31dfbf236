"""Tests for the storage and decode cost model"""

import dataclasses

import pytest

from latentsim.costs import (
    CostParams,
    GrowthModel,
    PriceDecay,
    STRATEGIES,
    horizon_months,
    horizon_table,
    load_cost_scenarios,
    monthly_cost,
    project,
    scenario_models,
    trace_period_ratios,
)
from latentsim.errors import ConfigError


# ---- Fixtures ----

N0 = 92.3e6
FLAT = PriceDecay()


@pytest.fixture(scope="module")
def table_2050():
    table = horizon_table(years=(2026, 2050))
    return table.set_index(["year", "strategy"])["normalized"]


@pytest.fixture(scope="module")
def table_2050_decay():
    table = horizon_table(decay=PriceDecay(enabled=True), years=(2050,))
    return table.set_index(["year", "strategy"])["normalized"]


class TestMonthlyCost:
    """Single-month arithmetic"""

    def test_imgstore(self):
        cost = monthly_cost("imgstore", N0, 0, CostParams(), FLAT)
        assert cost.total == pytest.approx(3110, abs=1)
        assert (cost.decode, cost.retrieval) == (0.0, 0.0)

    def test_latent_5090(self):
        cost = monthly_cost("latent-5090", N0, 0, CostParams(), FLAT)
        assert cost.storage == pytest.approx(632, abs=1)
        assert cost.decode == pytest.approx(380, abs=1)
        assert cost.total == pytest.approx(1012, abs=1.5)

    def test_steady_state_ratio(self):
        img = monthly_cost("imgstore", N0, 0, CostParams(), FLAT).total
        lat = monthly_cost("latent-5090", N0, 0, CostParams(), FLAT).total
        assert lat / img == pytest.approx(0.3256, abs=1e-3)

    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_zero_images(self, strategy):
        assert monthly_cost(strategy, 0, 0, CostParams(), FLAT).total == 0.0

    def test_latent_storage_ratio_without_decodes(self):
        params = CostParams(pixel_cache_fraction=0.0, decode_trigger_fraction=0.0)
        img = monthly_cost("imgstore", N0, 0, params, FLAT)
        lat = monthly_cost("latent-h100", N0, 0, params, FLAT)
        assert lat.decode == 0.0
        assert lat.storage == pytest.approx(img.storage * 0.29 / 1.5, rel=1e-12)

    @pytest.mark.parametrize("name,bigger", [
        ("gpu_hour_5090", 1.0),
        ("decode_ms", 60.0),
        ("decode_trigger_fraction", 0.9),
        ("views_per_year", 20.0),
        ("pixel_cache_fraction", 0.05),
    ])
    def test_latent_cost_monotone(self, name, bigger):
        base = monthly_cost("latent-5090", N0, 0, CostParams(), FLAT).total
        raised = monthly_cost("latent-5090", N0, 0, dataclasses.replace(CostParams(), **{name: bigger}), FLAT)
        assert raised.total > base

    def test_archived_images_are_cheaper(self):
        live = monthly_cost("imgstore-glacier", N0, 0, CostParams(), FLAT)
        archived = monthly_cost("imgstore-glacier", N0, 0, CostParams(), FLAT, n_archived=N0)
        assert archived.retrieval > 0
        assert archived.total / live.total == pytest.approx(0.1959, abs=1e-3)

    def test_price_decay(self):
        decay = PriceDecay(enabled=True)
        now = monthly_cost("imgstore", N0, 0, CostParams(), decay).total
        later = monthly_cost("imgstore", N0, 12, CostParams(), decay).total
        assert later == pytest.approx(0.9 * now)

    def test_retrieval_fees_do_not_decay(self):
        decay = PriceDecay(enabled=True)
        now = monthly_cost("imgstore-glacier", N0, 0, CostParams(), decay, n_archived=N0 / 2)
        later = monthly_cost("imgstore-glacier", N0, 120, CostParams(), decay, n_archived=N0 / 2)
        assert later.retrieval == now.retrieval
        assert later.storage == pytest.approx(0.9 ** 10 * now.storage)

    def test_errors(self):
        with pytest.raises(ConfigError):
            monthly_cost("tape", N0, 0, CostParams(), FLAT)
        with pytest.raises(ConfigError):
            monthly_cost("imgstore-glacier", 10, 0, CostParams(), FLAT, n_archived=11)


class TestGrowth:
    """Image count timeline"""

    def test_default_is_compounding(self):
        assert GrowthModel().mode == "cagr"

    def test_trace_ramp(self):
        g = GrowthModel()
        assert g.images(35 - 9) == 0.0
        assert g.images(35 - 8) == pytest.approx(N0 / 9)
        total = sum(g.images(m) for m in range(1, 36))
        assert total / N0 == pytest.approx(5.0)

    def test_cagr(self):
        g = GrowthModel()
        assert g.images(35 + 12) == pytest.approx(N0 + 30e6 * 0.127)
        assert g.images(35 + 24) - g.images(35 + 12) == pytest.approx(30e6 * 0.127 * 1.127)

    def test_linear(self):
        g = GrowthModel(mode="linear", ramp_months=N0 / 3.76e6)
        assert g.images(36) == pytest.approx(N0 + 3.76e6)
        assert sum(g.images(m) for m in range(1, 36)) / N0 == pytest.approx(12.779, abs=1e-3)

    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            project("imgstore", growth=GrowthModel(mode="exp"))
        with pytest.raises(ConfigError):
            project("imgstore", growth=GrowthModel(ramp_months=0))


class TestProjection:
    """Cumulative projections and normalization"""

    def test_one_month(self):
        df = project("latent-h100", horizon_months=1, include_trace_period=False)
        assert len(df) == 1
        assert df["cumulative_usd"].iloc[0] == pytest.approx(
            df["storage_usd"].iloc[0] + df["decode_usd"].iloc[0]
        )

    @pytest.mark.parametrize("strategy", STRATEGIES)
    def test_strictly_increasing(self, strategy):
        df = project(strategy, horizon_months=60, include_trace_period=False)
        assert df["cumulative_usd"].diff().dropna().gt(0).all()

    def test_imgstore_is_one_at_trace_end(self, table_2050):
        assert table_2050[(2026, "imgstore")] == pytest.approx(1.0)

    def test_constant_price_values(self, table_2050):
        assert table_2050[(2050, "imgstore")] == pytest.approx(148.9, rel=2e-3)
        assert table_2050[(2050, "latent-h100")] == pytest.approx(96.23, rel=2e-3)
        assert table_2050[(2050, "imgstore-glacier")] == pytest.approx(77.50, rel=5e-3)
        assert table_2050[(2050, "latent-5090")] == pytest.approx(48.48, rel=2e-3)

    @pytest.mark.parametrize("strategy,reference", [
        ("imgstore", 164), ("latent-h100", 88), ("imgstore-glacier", 79), ("latent-5090", 49),
    ])
    def test_constant_price_reference(self, table_2050, strategy, reference):
        assert table_2050[(2050, strategy)] == pytest.approx(reference, rel=0.2)

    def test_constant_price_ordering(self, table_2050):
        row = table_2050.loc[2050]
        assert row["latent-5090"] < row["imgstore-glacier"] < row["latent-h100"] < row["imgstore"]

    def test_decay_values(self, table_2050_decay):
        assert table_2050_decay[(2050, "imgstore")] == pytest.approx(37.41, rel=2e-3)
        assert table_2050_decay[(2050, "imgstore-glacier")] == pytest.approx(24.09, rel=5e-3)
        assert table_2050_decay[(2050, "latent-5090")] == pytest.approx(9.44, rel=2e-3)

    @pytest.mark.parametrize("strategy,reference", [
        ("imgstore", 40), ("imgstore-glacier", 27), ("latent-5090", 9.7),
    ])
    def test_decay_reference(self, table_2050_decay, strategy, reference):
        assert table_2050_decay[(2050, strategy)] == pytest.approx(reference, rel=0.2)

    def test_decay_ordering(self, table_2050_decay):
        row = table_2050_decay.loc[2050]
        assert row["latent-5090"] < row["imgstore-glacier"] < row["imgstore"]

    def test_linear_growth_values(self):
        growth = GrowthModel(mode="linear", ramp_months=24.548)
        table = horizon_table(growth=growth, years=(2050,)).set_index("strategy")["normalized"]
        assert table["imgstore"] == pytest.approx(156.2, rel=2e-3)
        assert table["latent-h100"] == pytest.approx(100.9, rel=2e-3)
        assert table["imgstore-glacier"] == pytest.approx(74.1, rel=5e-3)
        assert table["latent-5090"] == pytest.approx(50.9, rel=2e-3)

    def test_glacier_never_above_imgstore(self):
        glacier = project("imgstore-glacier", horizon_months=120)
        plain = project("imgstore", horizon_months=120)
        assert (glacier["cumulative_usd"] <= plain["cumulative_usd"] + 1e-6).all()

    def test_trace_period_ratios(self):
        ratios = trace_period_ratios()
        assert ratios["imgstore"] == pytest.approx(1.0)
        assert ratios["imgstore-glacier"] == pytest.approx(1.0)
        assert ratios["latent-5090"] == pytest.approx(0.3256, abs=1e-3)

    def test_horizon_months(self):
        assert horizon_months(2050) == 288
        assert horizon_months(2026) == 0
        with pytest.raises(ConfigError):
            horizon_months(2020)


class TestScenarios:
    """Bundled scenario file"""

    def test_bundled_names(self):
        assert set(load_cost_scenarios()) == {"constant", "decay", "linear", "linear-decay"}

    def test_models(self):
        scenarios = load_cost_scenarios()
        params, growth, decay = scenario_models(scenarios["linear-decay"])
        assert decay.enabled
        assert growth.mode == "linear"
        assert growth.monthly_images == 3.76e6
        assert growth.ramp_months == pytest.approx(24.548)
        assert params == CostParams()

    def test_default_scenarios_compound(self):
        scenarios = load_cost_scenarios()
        for name in ("constant", "decay"):
            _, growth, _ = scenario_models(scenarios[name])
            assert growth == GrowthModel()

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            scenario_models({"s3_price": 1.0})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_cost_scenarios(tmp_path / "none.yaml")
