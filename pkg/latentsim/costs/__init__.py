"""Cumulative storage and decode cost projection."""

from .costmodel import (
    CostParams,
    GrowthModel,
    PriceDecay,
    MonthlyCost,
    STRATEGIES,
    HORIZON_YEARS,
    PROJECTION_COLUMNS,
    monthly_cost,
    decay_share,
    project,
    project_all,
    horizon_months,
    horizon_table,
    trace_end_cost,
    trace_period_ratios,
    load_cost_scenarios,
    scenario_models,
)

__all__ = [
    "CostParams",
    "GrowthModel",
    "PriceDecay",
    "MonthlyCost",
    "STRATEGIES",
    "HORIZON_YEARS",
    "PROJECTION_COLUMNS",
    "monthly_cost",
    "decay_share",
    "project",
    "project_all",
    "horizon_months",
    "horizon_table",
    "trace_end_cost",        # normalization unit
    "trace_period_ratios",
    "load_cost_scenarios",   # named scenarios from cost_scenarios.yaml
    "scenario_models",
]
