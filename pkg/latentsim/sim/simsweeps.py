"""Multi-run experiments: static alpha sweep, spillover comparison,
cache-size crossover, parameter sensitivity and the descent-direction check.

Every run is an independent, deterministic :func:`~latentsim.sim.simengine.run`.
"""

from __future__ import annotations

import copy
import dataclasses
import logging
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from latentsim.caches.dualcache import DualCache, DualCacheConfig, Outcome
from latentsim.config import apply_overrides
from latentsim.errors import ConfigError
from latentsim.routing.routerring import Ring
from latentsim.sim.simconfig import ClusterConfig, Policy
from latentsim.sim.simengine import check_replay_inputs, run
from latentsim.traces.tracetypes import Catalog
from latentsim.tuning.tuner import AlphaTuner, desk_window

logger = logging.getLogger(__name__)

CROSSOVER_POLICIES = (Policy.LATENT_CACHE, Policy.IMG_CACHE, Policy.ADAPTIVE)

# Short names accepted by sweep_parameter
PARAMETER_ALIASES = {
    "delta": "tuner_step",
    "step": "tuner_step",
    "window": "tuner_window",
    "tau": "tail_fraction",
    "h": "promotion_threshold",
}


def sweep_alpha(trace: pd.DataFrame, catalog: Catalog, cfg: ClusterConfig,
                alphas: Sequence[float], progress: bool = False) -> pd.DataFrame:
    """One static-alpha run per value.

    Returns:
        DataFrame with columns ``alpha, mean_ms, p99_ms``
    """
    rows = []
    for alpha in tqdm(list(alphas), desc="alpha sweep", disable=not progress):
        report = run(trace, catalog, cfg.with_policy(Policy.STATIC, alpha=float(alpha)))
        rows.append({"alpha": float(alpha), "mean_ms": report.mean_ms, "p99_ms": report.p99_ms})
    return pd.DataFrame(rows, columns=["alpha", "mean_ms", "p99_ms"])


def best_static(sweep: pd.DataFrame) -> Dict[str, float]:
    """Row of the lowest mean latency in a :func:`sweep_alpha` table."""
    row = sweep.loc[sweep["mean_ms"].idxmin()]
    return {"alpha": float(row["alpha"]), "mean_ms": float(row["mean_ms"])}


def compare_spillover(trace: pd.DataFrame, catalog: Catalog, cfg: ClusterConfig,
                      thetas: Iterable[float], progress: bool = False) -> pd.DataFrame:
    """Latency and queue-wait statistics per spill threshold.

    An ``inf`` baseline (spillover off) is always included and listed first.
    """
    values = [float(t) for t in thetas]
    values = [math.inf] + [t for t in values if not math.isinf(t)]
    rows = []
    for theta in tqdm(values, desc="spillover", disable=not progress):
        report = run(trace, catalog, dataclasses.replace(cfg, theta=theta))
        events = report.summary["events"]
        rows.append({
            "theta": theta,
            "mean_ms": report.mean_ms,
            "p99_ms": report.p99_ms,
            "queue_mean_ms": report.summary["queue_wait_ms"]["mean"],
            "queue_p99_ms": report.p99_queue_ms,
            "spills": events["spills"],
            "writebacks": events["writebacks"],
        })
    return pd.DataFrame(rows)


def footprint_bytes(trace: pd.DataFrame, catalog: Catalog) -> int:
    """Image-format bytes of all distinct objects in ``trace``."""
    ids = np.unique(trace["object_id"].to_numpy())
    return int(sum(catalog[int(oid)].image_bytes for oid in ids))


def sweep_cache_sizes(trace: pd.DataFrame, catalog: Catalog, cfg: ClusterConfig,
                      fractions: Sequence[float],
                      policies: Sequence[Policy] = CROSSOVER_POLICIES,
                      progress: bool = False) -> pd.DataFrame:
    """Mean latency per policy at cluster cache sizes given as fractions of the
    trace footprint (split evenly over the nodes).

    Returns:
        DataFrame with columns ``fraction, per_node_cache_bytes, policy,
        mean_ms, p99_ms, image_hit, latent_hit, full_miss``
    """
    footprint = footprint_bytes(trace, catalog)
    jobs = [(f, Policy(p)) for f in fractions for p in policies]
    rows = []
    for fraction, policy in tqdm(jobs, desc="cache sizes", disable=not progress):
        if not fraction > 0:
            raise ConfigError("cache fractions must be > 0", field="fractions")
        per_node = int(fraction * footprint / cfg.n_nodes)
        report = run(trace, catalog, cfg.with_policy(policy, per_node_cache_bytes=per_node))
        fractions_ = report.summary["outcome_fractions"]
        rows.append({
            "fraction": float(fraction),
            "per_node_cache_bytes": per_node,
            "policy": policy.value,
            "mean_ms": report.mean_ms,
            "p99_ms": report.p99_ms,
            "image_hit": fractions_[Outcome.IMAGE_HIT.value],
            "latent_hit": fractions_[Outcome.LATENT_HIT.value],
            "full_miss": fractions_[Outcome.FULL_MISS.value],
        })
    return pd.DataFrame(rows)


def sweep_parameter(trace: pd.DataFrame, catalog: Catalog, cfg: ClusterConfig,
                    name: str, values: Sequence[Any], progress: bool = False) -> pd.DataFrame:
    """Sensitivity of latency to one ClusterConfig field.

    ``name`` is a field name or one of :data:`PARAMETER_ALIASES`
    (``delta``, ``window``, ``tau``, ``h``).
    """
    field_name = PARAMETER_ALIASES.get(name, name)
    rows = []
    for value in tqdm(list(values), desc=f"sweep {field_name}", disable=not progress):
        if field_name == "tuner_window":
            value = int(value)
        run_cfg = apply_overrides(cfg, {field_name: value})
        report = run(trace, catalog, run_cfg)
        alphas = list(report.summary["final_alpha"].values())
        rows.append({
            "parameter": field_name,
            "value": value,
            "mean_ms": report.mean_ms,
            "p99_ms": report.p99_ms,
            "mean_final_alpha": float(np.mean(alphas)) if alphas else float("nan"),
        })
    return pd.DataFrame(rows, columns=["parameter", "value", "mean_ms", "p99_ms", "mean_final_alpha"])


# ---- Descent-direction oracle ----

def _replay_cost(cache: DualCache, object_ids: List[int], catalog: Catalog,
                 decode_ms: float, fetch_ms: float) -> float:
    """Mean decode/fetch cost of replaying ``object_ids`` through ``cache``."""
    total = 0.0
    for oid in object_ids:
        meta = catalog[oid]
        outcome = cache.lookup(oid, meta).outcome
        if outcome is Outcome.LATENT_HIT:
            total += decode_ms
        elif outcome is Outcome.FULL_MISS:
            total += decode_ms + fetch_ms
            cache.admit_fetched(oid, meta)
    return total / len(object_ids)


def shadow_gradient_check(trace: pd.DataFrame, catalog: Catalog, cfg: ClusterConfig,
                          delta: Optional[float] = None, progress: bool = False) -> pd.DataFrame:
    """Compare the tuner's D against shadow replays of each window.

    Cache-only replay per owner node with constant latencies. Before each
    window the cache is cloned at alpha - delta and alpha + delta; the window
    is replayed on both clones and on the live cache, then the tuner steps.

    Returns:
        One row per window: ``node, window_idx, alpha, D, cost_minus,
        cost_base, cost_plus, better, agrees``. ``better`` names the cheaper
        neighbour (``minus``, ``plus`` or ``tie``); ``agrees`` is true when the
        step direction of D points at it.
    """
    cfg.validate()
    check_replay_inputs(trace, catalog)
    delta = cfg.tuner_step if delta is None else float(delta)
    ring = Ring.build(range(cfg.n_nodes), cfg.vnodes_per_node)
    tuner_cfg = dataclasses.replace(cfg.tuner_config(), alpha_bounds=(cfg.alpha_min, cfg.alpha_max))
    lat = cfg.latency

    per_node: Dict[int, List[int]] = {n: [] for n in ring.nodes}
    for oid in trace["object_id"].tolist():
        per_node[ring.owner_of(oid)].append(oid)

    rows = []
    for node, ids in per_node.items():
        cache = DualCache(DualCacheConfig(
            capacity_bytes=cfg.per_node_cache_bytes,
            alpha=cfg.alpha,
            tail_fraction=cfg.tail_fraction,
            promotion_threshold=cfg.promotion_threshold,
        ))
        tuner = AlphaTuner.create(tuner_cfg, cfg.alpha)
        window = cfg.tuner_window or desk_window(len(ids))
        chunks = [ids[k:k + window] for k in range(0, len(ids) - window + 1, window)]
        for chunk in tqdm(chunks, desc=f"shadow node {node}", disable=not progress):
            alpha = cache.alpha
            shadows = {}
            for side, a in (("minus", alpha - delta), ("plus", alpha + delta)):
                clone = copy.deepcopy(cache)
                clone.set_alpha(min(1.0, max(0.0, a)))
                shadows[side] = _replay_cost(clone, chunk, catalog, lat.decode_ms, lat.fetch_ms)
            base = _replay_cost(cache, chunk, catalog, lat.decode_ms, lat.fetch_ms)
            record = tuner.end_window(cache.snapshot_and_reset_counters())
            cache.set_alpha(record.new_alpha)

            if shadows["plus"] < shadows["minus"]:
                better = "plus"
            elif shadows["minus"] < shadows["plus"]:
                better = "minus"
            else:
                better = "tie"
            agrees = (record.d < 0 and better == "plus") or (record.d > 0 and better == "minus")
            rows.append({
                "node": node,
                "window_idx": record.window_idx,
                "alpha": alpha,
                "D": record.d,
                "cost_minus": shadows["minus"],
                "cost_base": base,
                "cost_plus": shadows["plus"],
                "better": better,
                "agrees": agrees,
            })
    return pd.DataFrame(rows, columns=[
        "node", "window_idx", "alpha", "D", "cost_minus", "cost_base", "cost_plus", "better", "agrees",
    ])


def gradient_agreement(check: pd.DataFrame, top_fraction: float = 0.5) -> float:
    """Share of decisive windows, among the largest ``|D|``, where D points
    at the cheaper neighbour.

    A window is decisive when D is non-zero and the neighbours' costs differ.
    Returns NaN when there is none.
    """
    decisive = check[(check["D"] != 0) & (check["better"] != "tie")]
    if decisive.empty:
        return float("nan")
    magnitude = decisive["D"].abs()
    cutoff = magnitude.quantile(1.0 - top_fraction)
    top = decisive[magnitude >= cutoff]
    return float(top["agrees"].mean())
