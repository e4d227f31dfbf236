"""Storage and decode cost projection.

Monthly cost of serving ``N`` images:

  imgstore          N * S_px * P_S3
  imgstore-glacier  like imgstore, but images older than the archive cutoff
                    are billed at P_glacier plus retrieval of their (rare) reads
  latent-<gpu>      N * (S_lat + f * S_px) * P_S3  +  M * t_dec * P_gpu
                    with monthly decodes M = m_gpu * lambda * N / 12

Timeline: months 1..T cover the trace (T = 35 by default), month T is the
trace end. Image counts during the trace grow linearly from zero to N0; after
it they follow the growth model. Storage and GPU prices optionally decay from
the trace end; archive retrieval fees stay fixed.
Cumulative costs are normalized to ImgStore's cumulative cost at the trace end.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import pandas as pd
import yaml

from latentsim.config import apply_overrides
from latentsim.errors import ConfigError

logger = logging.getLogger(__name__)

MB_PER_GB = 1024.0
MS_PER_HOUR = 3_600_000.0
TRACE_END_YEAR = 2026
HORIZON_YEARS = (2026, 2030, 2040, 2050)

IMGSTORE = "imgstore"
GLACIER = "imgstore-glacier"
LATENT_H100 = "latent-h100"
LATENT_5090 = "latent-5090"
STRATEGIES = (IMGSTORE, GLACIER, LATENT_H100, LATENT_5090)

PROJECTION_COLUMNS = [
    "month", "strategy", "N_images", "storage_usd", "decode_usd", "retrieval_usd",
    "cumulative_usd", "normalized",
]


@dataclass(frozen=True)
class CostParams:
    """Unit prices and workload parameters.

    Attributes:
        image_mb: Decoded image size S_px (MB)
        latent_mb: Latent size S_lat (MB)
        s3_gb_month: Standard storage $/GB-month
        glacier_gb_month: Archive storage $/GB-month
        glacier_retrieval_gb: Archive retrieval $/GB
        glacier_retrieval_request: Archive retrieval $/request
        gpu_hour_h100: H100 rental $/hour
        gpu_hour_5090: RTX 5090 rental $/hour
        decode_ms: Decode time per image t_dec
        pixel_cache_fraction: f, share of images also kept decoded
        decode_trigger_fraction: m_gpu, share of views that need a decode
        views_per_year: lambda, mean views per image per year
        archive_after_months: Age at which imgstore-glacier archives an image
        access_decay: Exponent d of the (age+1)^-d access-rate decay
    """
    image_mb: float = 1.5
    latent_mb: float = 0.29
    s3_gb_month: float = 0.023
    glacier_gb_month: float = 0.004
    glacier_retrieval_gb: float = 0.01
    glacier_retrieval_request: float = 0.0001
    gpu_hour_h100: float = 2.50
    gpu_hour_5090: float = 0.69
    decode_ms: float = 40.0
    pixel_cache_fraction: float = 0.01
    decode_trigger_fraction: float = 0.632
    views_per_year: float = 10.2
    archive_after_months: int = 60
    access_decay: float = 1.3

    def validate(self) -> None:
        for name in ("image_mb", "latent_mb", "s3_gb_month", "glacier_gb_month",
                     "gpu_hour_h100", "gpu_hour_5090", "decode_ms", "views_per_year"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", field=name)
        for name in ("glacier_retrieval_gb", "glacier_retrieval_request", "access_decay"):
            if getattr(self, name) < 0:
                raise ConfigError("must be >= 0", field=name)
        for name in ("pixel_cache_fraction", "decode_trigger_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError("must be in [0, 1]", field=name)
        if self.archive_after_months < 1:
            raise ConfigError("must be >= 1", field="archive_after_months")

    def gpu_hour(self, strategy: str) -> float:
        if strategy == LATENT_H100:
            return self.gpu_hour_h100
        if strategy == LATENT_5090:
            return self.gpu_hour_5090
        raise ConfigError(f"strategy '{strategy}' does not decode", field="strategy")


@dataclass(frozen=True)
class GrowthModel:
    """Image count per timeline month.

    During the trace the count ramps linearly from zero to ``n0`` over the
    last ``ramp_months`` months, ending at month ``trace_months``. After it:

      - ``cagr``:   ``n0 + compounding_images * ((1 + cagr) ** years - 1)``
      - ``linear``: ``n0 + monthly_images * months``

    ``compounding_images`` is the part of the trace-end catalog that keeps
    growing at ``cagr`` per year; the rest stays flat.

    Examples:
        >>> g = GrowthModel()
        >>> g.images(35) == g.n0, round(g.images(35 + 12) - g.n0)
        (True, 3810000)
        >>> g.images(-100)
        0.0
    """
    mode: str = "cagr"
    monthly_images: float = 3.76e6
    cagr: float = 0.127
    n0: float = 92.3e6
    compounding_images: float = 30e6
    ramp_months: float = 9.0
    trace_months: int = 35

    def validate(self) -> None:
        if self.mode not in ("linear", "cagr"):
            raise ConfigError("must be 'linear' or 'cagr'", field="growth_mode")
        if not (self.monthly_images > 0 and self.cagr > 0 and self.n0 > 0):
            raise ConfigError("growth parameters must be > 0", field="growth")
        if self.compounding_images <= 0:
            raise ConfigError("must be > 0", field="compounding_images")
        if self.trace_months < 1:
            raise ConfigError("must be >= 1", field="trace_months")
        if self.ramp_months <= 0:
            raise ConfigError("must be > 0", field="ramp_months")

    def images(self, month: int) -> float:
        if month <= self.trace_months:
            return max(0.0, self.n0 * (1.0 - (self.trace_months - month) / self.ramp_months))
        k = month - self.trace_months
        if self.mode == "linear":
            return self.n0 + self.monthly_images * k
        return self.n0 + self.compounding_images * ((1.0 + self.cagr) ** (k / 12.0) - 1.0)


@dataclass(frozen=True)
class PriceDecay:
    """Yearly price declines applied from the trace end.

    Examples:
        >>> round(PriceDecay(enabled=True).storage_factor(12), 2)
        0.9
        >>> PriceDecay().gpu_factor(120)
        1.0
    """
    enabled: bool = False
    gpu_decay: float = 0.20
    storage_decay: float = 0.10

    def validate(self) -> None:
        for name in ("gpu_decay", "storage_decay"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError("must be in [0, 1)", field=name)

    def _factor(self, rate: float, k: int) -> float:
        if not self.enabled or k <= 0:
            return 1.0
        return (1.0 - rate) ** (k / 12.0)

    def storage_factor(self, k: int) -> float:
        return self._factor(self.storage_decay, k)

    def gpu_factor(self, k: int) -> float:
        return self._factor(self.gpu_decay, k)


class MonthlyCost(NamedTuple):
    storage: float
    decode: float
    retrieval: float

    @property
    def total(self) -> float:
        return self.storage + self.decode + self.retrieval


def decay_share(params: CostParams) -> float:
    """Read rate of an image at the archive cutoff, relative to its first-year
    mean rate, under ``(age_days + 1) ** -d`` decay.

    Examples:
        >>> round(decay_share(CostParams()), 4)
        0.0076
    """
    d = params.access_decay
    age_days = params.archive_after_months * 365.25 / 12.0
    at_cutoff = (age_days + 1.0) ** -d
    if d == 1.0:
        first_year = math.log(366.0) / 365.0
    else:
        first_year = (1.0 - 366.0 ** (1.0 - d)) / ((d - 1.0) * 365.0)
    return at_cutoff / first_year


def monthly_cost(strategy: str, n_images: float, month: int, params: CostParams,
                 decay: PriceDecay, n_archived: float = 0.0) -> MonthlyCost:
    """Cost of one month.

    Args:
        strategy: One of :data:`STRATEGIES`
        n_images: Images stored (N)
        month: Months after the trace end (<= 0 during the trace); drives price decay
        params: Unit prices
        decay: Price decline
        n_archived: Of ``n_images``, those past the archive cutoff (glacier only)

    Raises:
        ConfigError: unknown strategy or negative counts

    Examples:
        >>> round(monthly_cost("imgstore", 92.3e6, 0, CostParams(), PriceDecay()).total)
        3110
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy '{strategy}', expected one of {STRATEGIES}",
                          field="strategy")
    if n_images < 0 or n_archived < 0 or n_archived > n_images:
        raise ConfigError("need 0 <= n_archived <= n_images", field="n_images")
    s = decay.storage_factor(month)
    image_gb = params.image_mb / MB_PER_GB

    if strategy == IMGSTORE:
        return MonthlyCost(n_images * image_gb * params.s3_gb_month * s, 0.0, 0.0)

    if strategy == GLACIER:
        live = n_images - n_archived
        storage = (live * params.s3_gb_month + n_archived * params.glacier_gb_month) * image_gb * s
        requests = params.views_per_year * decay_share(params) * n_archived / 12.0
        per_request = image_gb * params.glacier_retrieval_gb + params.glacier_retrieval_request
        return MonthlyCost(storage, 0.0, requests * per_request)

    stored_mb = params.latent_mb + params.pixel_cache_fraction * params.image_mb
    storage = n_images * stored_mb / MB_PER_GB * params.s3_gb_month * s
    decodes = params.decode_trigger_fraction * params.views_per_year * n_images / 12.0
    gpu_hours = decodes * params.decode_ms / MS_PER_HOUR
    decode = gpu_hours * params.gpu_hour(strategy) * decay.gpu_factor(month)
    return MonthlyCost(storage, decode, 0.0)


def _month_cost(strategy: str, m: int, growth: GrowthModel, params: CostParams,
                decay: PriceDecay) -> MonthlyCost:
    n = growth.images(m)
    archived = growth.images(m - params.archive_after_months) if strategy == GLACIER else 0.0
    return monthly_cost(strategy, n, m - growth.trace_months, params, decay, archived)


def trace_end_cost(growth: GrowthModel, params: CostParams) -> float:
    """ImgStore cumulative cost over the trace months (the normalization unit)."""
    flat = PriceDecay()
    return sum(_month_cost(IMGSTORE, m, growth, params, flat).total
               for m in range(1, growth.trace_months + 1))


def project(strategy: str, growth: GrowthModel = GrowthModel(), params: CostParams = CostParams(),
            decay: PriceDecay = PriceDecay(), horizon_months: int = 12,
            include_trace_period: bool = True) -> pd.DataFrame:
    """Month-by-month cumulative cost.

    Args:
        strategy: One of :data:`STRATEGIES`
        growth: Image count model
        params: Unit prices
        decay: Price decline after the trace end
        horizon_months: Months projected past the trace end
        include_trace_period: Start accumulating at month 1 instead of the
            first month after the trace

    Returns:
        DataFrame with :data:`PROJECTION_COLUMNS`; ``normalized`` is
        ``cumulative_usd`` over ImgStore's trace-end cumulative cost.

    Examples:
        >>> df = project("imgstore", horizon_months=1, include_trace_period=False)
        >>> bool(df["cumulative_usd"].iloc[0] == df["storage_usd"].iloc[0])
        True
    """
    if horizon_months < 0 or (horizon_months == 0 and not include_trace_period):
        raise ConfigError("must be >= 1", field="horizon_months")
    for part in (growth, params, decay):
        part.validate()
    unit = trace_end_cost(growth, params)
    first = 1 if include_trace_period else growth.trace_months + 1
    last = growth.trace_months + horizon_months
    rows = []
    cumulative = 0.0
    for m in range(first, last + 1):
        cost = _month_cost(strategy, m, growth, params, decay)
        cumulative += cost.total
        rows.append({
            "month": m,
            "strategy": strategy,
            "N_images": growth.images(m),
            "storage_usd": cost.storage,
            "decode_usd": cost.decode,
            "retrieval_usd": cost.retrieval,
            "cumulative_usd": cumulative,
            "normalized": cumulative / unit,
        })
    return pd.DataFrame(rows, columns=PROJECTION_COLUMNS)


def project_all(strategies: Iterable[str] = STRATEGIES, **kwargs) -> pd.DataFrame:
    """:func:`project` for several strategies, stacked."""
    return pd.concat([project(s, **kwargs) for s in strategies], ignore_index=True)


def horizon_months(year: int) -> int:
    """Projection months from the trace end to the end of ``year``.

    Examples:
        >>> horizon_months(2050)
        288
    """
    if year < TRACE_END_YEAR:
        raise ConfigError(f"horizon year must be >= {TRACE_END_YEAR}", field="horizon")
    return 12 * (year - TRACE_END_YEAR)


def horizon_table(growth: GrowthModel = GrowthModel(), params: CostParams = CostParams(),
                  decay: PriceDecay = PriceDecay(), years: Sequence[int] = HORIZON_YEARS,
                  strategies: Sequence[str] = STRATEGIES) -> pd.DataFrame:
    """Normalized cumulative cost per strategy at each horizon year.

    Returns:
        DataFrame with columns ``year, strategy, cumulative_usd, normalized``
    """
    longest = horizon_months(max(years))
    rows = []
    for strategy in strategies:
        df = project(strategy, growth, params, decay, longest, include_trace_period=True)
        by_month = df.set_index("month")
        for year in years:
            row = by_month.loc[growth.trace_months + horizon_months(year)]
            rows.append({
                "year": year,
                "strategy": strategy,
                "cumulative_usd": float(row["cumulative_usd"]),
                "normalized": float(row["normalized"]),
            })
    return pd.DataFrame(rows, columns=["year", "strategy", "cumulative_usd", "normalized"])


def trace_period_ratios(growth: GrowthModel = GrowthModel(),
                        params: CostParams = CostParams()) -> Dict[str, float]:
    """Each strategy's trace-period cumulative cost relative to ImgStore."""
    unit = trace_end_cost(growth, params)
    flat = PriceDecay()
    return {
        s: sum(_month_cost(s, m, growth, params, flat).total
               for m in range(1, growth.trace_months + 1)) / unit
        for s in STRATEGIES
    }


# ---- Scenario files ----

def load_cost_scenarios(config_path: Optional[Union[str, Path]] = None) -> Dict[str, Dict]:
    """Load named scenarios (defaults to ``cost_scenarios.yaml`` next to this module)."""
    if config_path is None:
        config_path = Path(__file__).parent / "cost_scenarios.yaml"
    path = Path(config_path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}", field="scenarios")
    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def scenario_models(scenario: Dict) -> Tuple[CostParams, GrowthModel, PriceDecay]:
    """(CostParams, GrowthModel, PriceDecay) for one scenario mapping."""
    values = {k: v for k, v in scenario.items() if k != "description"}
    decay_keys = {"decay_enabled": "enabled", "gpu_decay": "gpu_decay", "storage_decay": "storage_decay"}
    growth_keys = {"growth_mode": "mode", "monthly_images": "monthly_images", "cagr": "cagr",
                   "n0": "n0", "compounding_images": "compounding_images",
                   "ramp_months": "ramp_months", "trace_months": "trace_months"}
    decay = apply_overrides(PriceDecay(), {decay_keys[k]: v for k, v in values.items() if k in decay_keys})
    growth = apply_overrides(GrowthModel(), {growth_keys[k]: v for k, v in values.items() if k in growth_keys})
    rest = {k: v for k, v in values.items() if k not in decay_keys and k not in growth_keys}
    params = apply_overrides(CostParams(), rest)
    for part in (params, growth, decay):
        part.validate()
    return params, growth, decay
