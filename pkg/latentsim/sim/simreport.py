"""Simulation results: per-request table, tuner windows, summary."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from latentsim.artifacts import write_csv, write_json
from latentsim.caches.dualcache import Outcome

REQUEST_COLUMNS = [
    "req_idx", "ts_ms", "object_id", "outcome", "queue_ms", "fetch_ms", "decode_ms",
    "net_ms", "total_ms", "node", "spilled", "coalesce_ms", "transfer_ms", "owner", "coalesced",
]

STAGES = ["queue_ms", "fetch_ms", "decode_ms", "net_ms", "coalesce_ms", "transfer_ms"]


def _percentiles(values: np.ndarray) -> Dict[str, float]:
    if len(values) == 0:
        return {"mean": 0.0, "p50": 0.0, "p95": 0.0, "p99": 0.0, "max": 0.0}
    p50, p95, p99 = np.percentile(values, [50, 95, 99])
    return {
        "mean": float(values.mean()),
        "p50": float(p50),
        "p95": float(p95),
        "p99": float(p99),
        "max": float(values.max()),
    }


def summarize(requests: pd.DataFrame, warmup_requests: int, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Summary statistics over the requests after warmup.

    Args:
        requests: Per-request table (REQUEST_COLUMNS)
        warmup_requests: Leading requests excluded from the statistics
        extra: Run-level entries merged into the result (event counts etc.)
    """
    measured = requests.iloc[warmup_requests:]
    n = len(measured)
    fractions = {
        o.value: (float((measured["outcome"] == o.value).sum()) / n if n else 0.0)
        for o in Outcome
    }
    decoded = measured[(~measured["coalesced"]) & (measured["decode_ms"] > 0)]
    by_outcome = {}
    for o in Outcome:
        part = measured[measured["outcome"] == o.value]
        entry: Dict[str, Any] = {"count": int(len(part))}
        for stage in STAGES + ["total_ms"]:
            entry[stage] = float(part[stage].mean()) if len(part) else 0.0
        by_outcome[o.value] = entry

    summary: Dict[str, Any] = {
        "n_requests": int(len(requests)),
        "warmup_requests": int(warmup_requests),
        "measured_requests": int(n),
        "latency_ms": _percentiles(measured["total_ms"].to_numpy(dtype=float)),
        "queue_wait_ms": _percentiles(decoded["queue_ms"].to_numpy(dtype=float)),
        "outcome_fractions": fractions,
        "stage_means_ms": {s: (float(measured[s].mean()) if n else 0.0) for s in STAGES},
        "breakdown_by_outcome": by_outcome,
    }
    if extra:
        summary.update(extra)
    return summary


@dataclass
class SimReport:
    """Result of one simulation run.

    Attributes:
        requests: One row per trace request (REQUEST_COLUMNS)
        windows: One row per closed tuner window and node (alpha trajectory)
        summary: Latency percentiles, outcome fractions, stage breakdowns,
            event counts, per-node decode counts and final alphas
    """
    requests: pd.DataFrame
    windows: pd.DataFrame
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def mean_ms(self) -> float:
        return self.summary["latency_ms"]["mean"]

    @property
    def p99_ms(self) -> float:
        return self.summary["latency_ms"]["p99"]

    @property
    def p99_queue_ms(self) -> float:
        return self.summary["queue_wait_ms"]["p99"]

    def outcome_fraction(self, outcome: Union[Outcome, str]) -> float:
        return self.summary["outcome_fractions"][Outcome(outcome).value]

    def measured(self) -> pd.DataFrame:
        """Requests after warmup."""
        return self.requests.iloc[self.summary["warmup_requests"]:]

    def write(self, out_dir: Union[str, Path], header: Optional[str] = None) -> Dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return {
            "report": write_json(self.summary, out / "report.json", header),
            "requests": write_csv(self.requests, out / "requests.csv", header),
            "alpha_trajectory": write_csv(self.windows, out / "alpha_trajectory.csv", header),
        }
