"""Synthetic workload generation.

Procedure:
  1. Catalog: ``n_objects_initial`` objects born at t=0 plus arrivals over the
     trace (linear or compound-growth arrival model).
  2. Lifetime counts: the request budget is split over popularity ranks by a
     largest-remainder allocation of Zipf weights, so realized ranks follow the
     configured law exactly (ties allowed). Ranks are assigned to objects by a
     seeded permutation.
  3. Timing: each request of an object lands at ``birth + age`` with age drawn
     from the density ``(age + 1) ** -d`` truncated to the rest of the trace.
     Objects are therefore born hot and cool off by a power law.
  4. Identity: object ids are splitmix64 of (seed, index); model ids follow a
     Zipf law over models, drawn with an alias table.

API:
  generate_trace(cfg) -> (trace, catalog)
  concat_traces(first, second, gap_ms=0) -> trace
  zipf_counts(total, n, exponent) -> np.ndarray
"""

from __future__ import annotations

import logging
import math
from typing import Tuple

import numpy as np
import pandas as pd

from latentsim.errors import ConfigError
from latentsim.traces.tracetypes import (
    MS_PER_DAY,
    TRACE_COLUMNS,
    Catalog,
    ObjectMeta,
    SizeModel,
    SynthConfig,
    empty_trace,
)

logger = logging.getLogger(__name__)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


# ---- Helper: 64-bit mixing ----
def splitmix64(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer (a bijection on uint64)."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _object_ids(seed: int, n: int) -> np.ndarray:
    offset = splitmix64(np.full(1, seed, dtype=np.uint64))[0]
    return splitmix64(np.arange(n, dtype=np.uint64) + offset)


# ---- Helper: Walker alias table ----
class AliasTable:
    """O(1) sampling from a discrete distribution (Vose's alias method).

    Examples:
        >>> table = AliasTable.zipf(100, 1.11)
        >>> draws = table.sample(np.random.default_rng(0), 5)
        >>> bool(((draws >= 0) & (draws < 100)).all())
        True
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or len(w) == 0 or np.any(w < 0) or w.sum() <= 0:
            raise ConfigError("weights must be a non-empty, non-negative vector", field="weights")
        n = len(w)
        scaled = w * n / w.sum()
        prob = np.zeros(n)
        alias = np.zeros(n, dtype=np.int64)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = scaled[g] + scaled[s] - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        for i in large + small:
            prob[i] = 1.0
        self.prob = prob
        self.alias = alias

    @classmethod
    def zipf(cls, n: int, exponent: float) -> "AliasTable":
        return cls(np.arange(1, n + 1, dtype=float) ** -exponent)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        n = len(self.prob)
        column = rng.integers(0, n, size=size)
        coin = rng.random(size)
        return np.where(coin < self.prob[column], column, self.alias[column])


def zipf_counts(total: int, n: int, exponent: float) -> np.ndarray:
    """Split ``total`` requests over ``n`` ranks proportionally to rank ** -exponent.

    Largest-remainder rounding keeps the result non-increasing in rank and
    summing exactly to ``total``.

    Examples:
        >>> zipf_counts(10, 3, 1.0).tolist()
        [5, 3, 2]
    """
    weights = np.arange(1, n + 1, dtype=float) ** -exponent
    quota = total * weights / weights.sum()
    counts = np.floor(quota).astype(np.int64)
    remainder = int(total - counts.sum())
    if remainder > 0:
        order = np.argsort(-(quota - counts), kind="stable")
        counts[order[:remainder]] += 1
    return counts


# ---- Helper: arrivals and ages ----
def _arrival_count(cfg: SynthConfig) -> int:
    if cfg.arrival_model == "cagr":
        growth = (1.0 + cfg.arrival_cagr) ** (cfg.duration_days / 365.0) - 1.0
        return int(round(cfg.n_objects_initial * growth))
    return int(round(cfg.arrival_rate * cfg.duration_days))


def _arrival_days(cfg: SynthConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    u = np.sort(rng.random(n))
    if cfg.arrival_model == "cagr" and cfg.arrival_cagr > 0:
        log_g = math.log1p(cfg.arrival_cagr)
        span = math.expm1(log_g * cfg.duration_days / 365.0)
        return 365.0 * np.log1p(u * span) / log_g
    return u * cfg.duration_days


def sample_ages(u: np.ndarray, horizon_days: np.ndarray, decay_exponent: float) -> np.ndarray:
    """Inverse-CDF draw of ages in ``[0, horizon]`` with density ∝ (age+1)^-d."""
    horizon = np.maximum(horizon_days, 1e-9)
    d = decay_exponent
    if abs(d - 1.0) < 1e-12:
        return np.power(horizon + 1.0, u) - 1.0
    k = 1.0 - d
    tail = 1.0 - np.power(horizon + 1.0, k)
    return np.power(1.0 - u * tail, 1.0 / k) - 1.0


def decay_ratio(decay_exponent: float, age_days: float = 365.0) -> float:
    """Intensity at ``age_days`` relative to age 0."""
    return float((age_days + 1.0) ** -decay_exponent)


# ---- Helper: sizes ----
def _draw_sizes(model: SizeModel, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    if model.kind == "fixed":
        return (np.full(n, model.image_bytes, dtype=np.int64),
                np.full(n, model.latent_bytes, dtype=np.int64))
    s = model.sigma
    img_factor = np.exp(s * rng.standard_normal(n) - 0.5 * s * s)
    lat_factor = np.exp(s * rng.standard_normal(n) - 0.5 * s * s)
    image = np.maximum(np.rint(model.image_bytes * img_factor).astype(np.int64), 2)
    latent = np.rint(model.latent_bytes * lat_factor).astype(np.int64)
    latent = np.clip(latent, 1, image - 1)
    return image, latent


# ---- Public API ----
def generate_trace(cfg: SynthConfig) -> Tuple[pd.DataFrame, Catalog]:
    """Generate a synthetic trace and its catalog.

    The result is a pure function of ``cfg``. The generator's self-report is
    attached as ``trace.attrs["generation"]``.

    Args:
        cfg: Generator parameters

    Returns:
        (trace, catalog) where catalog covers exactly the ids in the trace

    Raises:
        ConfigError: invalid config; the message names the field

    Examples:
        >>> trace, catalog = generate_trace(SynthConfig(n_objects_initial=1, requests_per_day=5))
        >>> trace["object_id"].nunique()
        1
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    n_arrivals = _arrival_count(cfg)
    n_objects = cfg.n_objects_initial + n_arrivals
    births = np.zeros(n_objects)
    births[cfg.n_objects_initial:] = _arrival_days(cfg, n_arrivals, rng)

    total = cfg.total_requests
    rank_of_object = rng.permutation(n_objects)
    counts = zipf_counts(total, n_objects, cfg.zipf_exponent)[rank_of_object]

    obj_idx = np.repeat(np.arange(n_objects), counts)
    horizon = cfg.duration_days - births[obj_idx]
    ages = sample_ages(rng.random(obj_idx.size), horizon, cfg.decay_exponent)
    end_ms = cfg.duration_days * MS_PER_DAY
    ts = np.floor((births[obj_idx] + ages) * MS_PER_DAY)
    ts = np.clip(ts, 0, end_ms - 1).astype(np.uint64)
    order = np.lexsort((obj_idx, ts))
    obj_idx = obj_idx[order]
    ts = ts[order]

    n_models = max(1, math.ceil(n_objects / cfg.images_per_model))
    model_of = AliasTable.zipf(n_models, cfg.zipf_exponent).sample(rng, n_objects)
    version_of = rng.integers(0, cfg.max_versions, size=n_objects)
    image, latent = _draw_sizes(cfg.size_model, n_objects, rng)
    ids = _object_ids(cfg.seed, n_objects)

    if obj_idx.size == 0:
        trace = empty_trace()
    else:
        trace = pd.DataFrame({
            "ts_ms": ts,
            "object_id": ids[obj_idx],
            "model_id": model_of[obj_idx].astype(np.uint32),
            "model_version": version_of[obj_idx].astype(np.uint32),
        }, columns=TRACE_COLUMNS)

    present = np.flatnonzero(counts > 0)
    catalog: Catalog = {
        int(ids[i]): ObjectMeta(int(image[i]), int(latent[i])) for i in present
    }
    trace.attrs["generation"] = {
        "seed": int(cfg.seed),
        "n_objects": int(n_objects),
        "n_objects_requested": int(present.size),
        "n_arrivals": int(n_arrivals),
        "n_requests": int(total),
        "zipf_exponent": float(cfg.zipf_exponent),
        "decay_exponent": float(cfg.decay_exponent),
        "decay_ratio_365d": decay_ratio(cfg.decay_exponent, 365.0),
    }
    logger.debug("generated %d requests over %d objects", total, present.size)
    return trace, catalog


def concat_traces(first: pd.DataFrame, second: pd.DataFrame, gap_ms: int = 0) -> pd.DataFrame:
    """Append ``second`` after ``first``, shifting its timestamps.

    The second trace starts ``gap_ms`` after the last record of the first.
    Used to build multi-regime workloads.
    """
    if gap_ms < 0:
        raise ConfigError("must be >= 0", field="gap_ms")
    if len(first) == 0:
        return second.reset_index(drop=True)
    shift = int(first["ts_ms"].iloc[-1]) + int(gap_ms)
    moved = second.copy()
    moved["ts_ms"] = (moved["ts_ms"].to_numpy(dtype=np.uint64) + np.uint64(shift))
    out = pd.concat([first, moved], ignore_index=True)
    out.attrs = {}
    return out
