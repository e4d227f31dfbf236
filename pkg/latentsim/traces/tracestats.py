"""Trace statistics: popularity, re-access intervals, age decay, Zipf fit.

API:
  fit_zipf(trace) -> float
  trace_stats(trace) -> TraceStats
  write_trace_stats(stats, out_dir, header=None) -> list[Path]
  data_reduction_ratio(catalog) -> float
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from latentsim.artifacts import write_csv, write_json
from latentsim.errors import EmptyTraceError, InsufficientDataError
from latentsim.traces.tracetypes import MS_PER_DAY, MS_PER_HOUR, Catalog

MIN_DISTINCT_FOR_FIT = 10


def _object_counts(trace: pd.DataFrame) -> np.ndarray:
    """Per-object request counts, descending."""
    counts = trace["object_id"].value_counts(sort=False).to_numpy()
    return np.sort(counts)[::-1]


def fit_zipf(trace: pd.DataFrame) -> float:
    """Fit a Zipf exponent by rank-frequency regression.

    Least-squares slope of log(count) against log(rank), negated, over ranks
    whose count is at least 2 (single-access objects flatten the tail).

    Args:
        trace: Trace DataFrame

    Returns:
        Fitted exponent (0 for a flat distribution, including one where
        every object was requested once)

    Raises:
        EmptyTraceError: trace has no records
        InsufficientDataError: fewer than 10 distinct objects, or counts
            that differ while fewer than two objects have count >= 2
    """
    if len(trace) == 0:
        raise EmptyTraceError("fit_zipf needs a non-empty trace")
    counts = _object_counts(trace)
    if len(counts) < MIN_DISTINCT_FOR_FIT:
        raise InsufficientDataError(
            f"fit_zipf needs at least {MIN_DISTINCT_FOR_FIT} distinct objects, got {len(counts)}"
        )
    if counts.max() == counts.min():
        return 0.0
    ranks = np.arange(1, len(counts) + 1, dtype=float)
    keep = counts >= 2
    if keep.sum() < 2:
        raise InsufficientDataError("fewer than two objects were requested more than once")
    log_c = np.log(counts[keep].astype(float))
    if np.all(log_c == log_c[0]):
        return 0.0
    slope = np.polyfit(np.log(ranks[keep]), log_c, 1)[0]
    return float(-slope) + 0.0


@dataclass
class TraceStats:
    """Result of :func:`trace_stats`.

    The three frames are the popularity CDF, the re-access interval CDF and
    the mean per-object access rate by age and lifetime-popularity quartile
    (quartile 1 = most popular).
    """
    n_requests: int
    n_objects: int
    share_top_1pct: float
    share_top_10pct: float
    share_single_access: float
    share_under_ten_views: float
    repeat_objects: int
    reaccess_within_hour: float
    reaccess_within_day: float
    reaccess_beyond_30d: float
    popularity_cdf: pd.DataFrame
    reaccess_interval_cdf: pd.DataFrame
    per_age_access_rate: pd.DataFrame

    def summary(self) -> Dict[str, Any]:
        return {
            "n_requests": self.n_requests,
            "n_objects": self.n_objects,
            "share_top_1pct": self.share_top_1pct,
            "share_top_10pct": self.share_top_10pct,
            "share_single_access": self.share_single_access,
            "share_under_ten_views": self.share_under_ten_views,
            "repeat_objects": self.repeat_objects,
            "reaccess_within_hour": self.reaccess_within_hour,
            "reaccess_within_day": self.reaccess_within_day,
            "reaccess_beyond_30d": self.reaccess_beyond_30d,
        }


def _top_share(cumulative: np.ndarray, fraction: float, n_requests: int) -> float:
    k = max(1, math.ceil(len(cumulative) * fraction))
    return float(cumulative[k - 1] / n_requests)


def _reaccess_intervals(trace: pd.DataFrame) -> np.ndarray:
    by_object = trace[["object_id", "ts_ms"]].sort_values(
        ["object_id", "ts_ms"], kind="mergesort"
    )
    ids = by_object["object_id"].to_numpy()
    ts = by_object["ts_ms"].to_numpy().astype(np.int64)
    same = ids[1:] == ids[:-1]
    return (ts[1:] - ts[:-1])[same]


def _interval_cdf(intervals: np.ndarray) -> pd.DataFrame:
    if intervals.size == 0:
        return pd.DataFrame({"interval_ms": pd.Series([], dtype=np.int64),
                             "interval_hours": pd.Series([], dtype=float),
                             "cdf": pd.Series([], dtype=float)})
    values, counts = np.unique(intervals, return_counts=True)
    return pd.DataFrame({
        "interval_ms": values.astype(np.int64),
        "interval_hours": values / MS_PER_HOUR,
        "cdf": np.cumsum(counts) / intervals.size,
    })


def _per_age_rate(trace: pd.DataFrame) -> pd.DataFrame:
    df = trace[["object_id", "ts_ms"]].copy()
    df["ts_ms"] = df["ts_ms"].astype(np.int64)
    first = df.groupby("object_id")["ts_ms"].transform("min")
    df["age_days"] = (df["ts_ms"] - first) // MS_PER_DAY

    per_object = df.groupby("object_id").agg(first_ms=("ts_ms", "min"), count=("ts_ms", "size"))
    per_object = per_object.sort_values(["count", "first_ms"], ascending=[False, True], kind="mergesort")
    n = len(per_object)
    per_object["quartile"] = 1 + (np.arange(n) * 4) // max(n, 1)
    df["quartile"] = df["object_id"].map(per_object["quartile"])

    accesses = df.groupby(["quartile", "age_days"]).size().rename("accesses").reset_index()
    end_ms = int(df["ts_ms"].max())
    # objects whose age window reaches each day
    max_age = (end_ms - per_object["first_ms"]) // MS_PER_DAY
    alive_rows = []
    for q, ages in max_age.groupby(per_object["quartile"]):
        horizon = np.sort(ages.to_numpy())
        for a in accesses.loc[accesses["quartile"] == q, "age_days"].to_numpy():
            alive = horizon.size - np.searchsorted(horizon, a, side="left")
            alive_rows.append((q, a, alive))
    alive_df = pd.DataFrame(alive_rows, columns=["quartile", "age_days", "objects"])
    out = accesses.merge(alive_df, on=["quartile", "age_days"], how="left")
    out["access_rate"] = out["accesses"] / out["objects"].clip(lower=1)
    out["quartile"] = out["quartile"].astype(np.int64)
    out["age_days"] = out["age_days"].astype(np.int64)
    return out[["quartile", "age_days", "accesses", "objects", "access_rate"]]


def trace_stats(trace: pd.DataFrame) -> TraceStats:
    """Compute popularity, re-access and age-decay statistics.

    Shares are fractions of the total request count. The re-access CDF covers
    intervals between consecutive accesses to the same object.

    Raises:
        EmptyTraceError: trace has no records

    Examples:
        >>> from latentsim.traces.tracetypes import make_trace
        >>> s = trace_stats(make_trace([0, 3_600_000], [5, 5]))
        >>> s.reaccess_interval_cdf["interval_hours"].tolist()
        [1.0]
    """
    if len(trace) == 0:
        raise EmptyTraceError("trace_stats needs a non-empty trace")
    n_requests = len(trace)
    counts = _object_counts(trace)
    n_objects = len(counts)
    cumulative = np.cumsum(counts)

    popularity = pd.DataFrame({
        "object_fraction": np.arange(1, n_objects + 1) / n_objects,
        "request_share": cumulative / n_requests,
    })
    intervals = _reaccess_intervals(trace)
    n_int = intervals.size

    def _frac(mask: np.ndarray) -> float:
        return float(mask.sum() / n_int) if n_int else 0.0

    return TraceStats(
        n_requests=n_requests,
        n_objects=n_objects,
        share_top_1pct=_top_share(cumulative, 0.01, n_requests),
        share_top_10pct=_top_share(cumulative, 0.10, n_requests),
        share_single_access=float((counts == 1).sum() / n_objects),
        share_under_ten_views=float((counts < 10).sum() / n_objects),
        repeat_objects=int((counts > 1).sum()),
        reaccess_within_hour=_frac(intervals <= MS_PER_HOUR),
        reaccess_within_day=_frac(intervals <= MS_PER_DAY),
        reaccess_beyond_30d=_frac(intervals > 30 * MS_PER_DAY),
        popularity_cdf=popularity,
        reaccess_interval_cdf=_interval_cdf(intervals),
        per_age_access_rate=_per_age_rate(trace),
    )


def write_trace_stats(
    stats: TraceStats, out_dir: Union[str, Path], header: Optional[str] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> List[Path]:
    """Write the three CDF/decay tables as CSV and the scalars (plus ``extra``) as JSON."""
    out = Path(out_dir)
    return [
        write_csv(stats.popularity_cdf, out / "popularity_cdf.csv", header=header),
        write_csv(stats.reaccess_interval_cdf, out / "reaccess_cdf.csv", header=header),
        write_csv(stats.per_age_access_rate, out / "age_decay.csv", header=header),
        write_json({**stats.summary(), **(extra or {})}, out / "trace_stats.json", header=header),
    ]


def data_reduction_ratio(catalog: Catalog) -> float:
    """Fraction of image-format bytes eliminated by storing latents instead.

    Examples:
        >>> from latentsim.traces.tracetypes import ObjectMeta
        >>> round(data_reduction_ratio({1: ObjectMeta(100, 25)}), 2)
        0.75
    """
    if not catalog:
        raise InsufficientDataError("empty catalog")
    image = sum(m.image_bytes for m in catalog.values())
    latent = sum(m.latent_bytes for m in catalog.values())
    return (image - latent) / image
