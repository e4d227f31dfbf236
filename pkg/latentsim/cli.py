"""Command-line entry point: ``latentsim <command> [flags]``.

Commands write their artifacts under ``--out`` (default ``$LB_OUT_DIR`` or
``./out``) and print one summary line. Exit status: 0 on success, 2 on a
configuration or usage error, 1 on any other failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from latentsim.artifacts import write_csv, write_json
from latentsim.config import load_config
from latentsim.costs.costmodel import (
    HORIZON_YEARS,
    STRATEGIES,
    horizon_months,
    horizon_table,
    load_cost_scenarios,
    project_all,
    scenario_models,
    trace_period_ratios,
)
from latentsim.errors import ConfigError, InsufficientDataError, LatentSimError
from latentsim.sim.simconfig import ClusterConfig, Policy
from latentsim.sim.simengine import run
from latentsim.sim.simsweeps import (
    best_static,
    compare_spillover,
    sweep_alpha,
    sweep_cache_sizes,
    sweep_parameter,
)
from latentsim.traces.traceapi import load_workload, synthetic_workload
from latentsim.traces.traceio import read_trace, write_catalog, write_trace
from latentsim.traces.tracemrc import miss_ratio_curve
from latentsim.traces.tracesample import downsample
from latentsim.traces.tracestats import data_reduction_ratio, fit_zipf, trace_stats, write_trace_stats

logger = logging.getLogger("latentsim")

OUT_ENV = "LB_OUT_DIR"


# ---- Helper: flag parsing ----

def _floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from e


def _words(text: str) -> List[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _invocation(argv: Sequence[str], seed: int) -> str:
    return " ".join(["latentsim", *argv, f"seed={seed}"])


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help=f"Output directory (default: ${OUT_ENV} or ./out)")
    p.add_argument("--seed", type=int, default=0, help="Seed for every random draw (default: 0)")


def _add_workload(p: argparse.ArgumentParser, catalog_required: bool = True) -> None:
    p.add_argument("--trace", required=True, help="Trace file (.csv, .lbtr, .parquet)")
    p.add_argument("--catalog", required=catalog_required, default=None, help="Catalog CSV")


def _add_cluster(p: argparse.ArgumentParser) -> None:
    _add_workload(p)
    p.add_argument("--config", default=None, help="Flat YAML file of cluster settings")
    p.add_argument("--policy", choices=[x.value for x in Policy], default=None)
    p.add_argument("--nodes", dest="n_nodes", type=int, default=None)
    p.add_argument("--cache-mb", type=float, default=None, help="Per-node cache size in MiB")
    p.add_argument("--theta", type=float, default=None, help="Spill threshold (inf disables)")
    p.add_argument("--gpus", dest="gpus_per_node", type=int, default=None)
    p.add_argument("--gpu", default=None, help="Decode-time preset: h100, rtx5090, rtx4090")
    p.add_argument("--alpha", type=float, default=None, help="Initial / static alpha")
    p.add_argument("--window", dest="tuner_window", type=int, default=None, help="Tuner window (lookups)")
    p.add_argument("--step", dest="tuner_step", type=float, default=None, help="Alpha step per window")
    p.add_argument("--tail", dest="tail_fraction", type=float, default=None)
    p.add_argument("--promote", dest="promotion_threshold", type=int, default=None)
    p.add_argument("--decode-ms", dest="decode_ms", type=float, default=None)
    p.add_argument("--fetch-ms", dest="fetch_ms", type=float, default=None)
    p.add_argument("--net-ms", dest="net_transfer_ms", type=float, default=None)
    p.add_argument("--fetch-dist", dest="fetch_dist",
                   choices=["constant", "lognormal", "empirical"], default=None)
    p.add_argument("--fetch-sigma", dest="fetch_sigma", type=float, default=None)
    p.add_argument("--fetch-table", dest="fetch_table", type=_floats, default=None,
                   help="Fetch samples in ms for --fetch-dist empirical, e.g. 90,140,400")
    p.add_argument("--warmup", dest="warmup_fraction", type=float, default=None)
    p.add_argument("--time-scale", dest="time_scale", type=float, default=None)
    p.add_argument("--progress", action="store_true", help="Show progress bars")


CLUSTER_FLAGS = (
    "policy", "n_nodes", "theta", "gpus_per_node", "gpu", "alpha", "tuner_window", "tuner_step",
    "tail_fraction", "promotion_threshold", "decode_ms", "fetch_ms", "net_transfer_ms",
    "fetch_dist", "fetch_sigma", "fetch_table", "warmup_fraction", "time_scale",
)


def cluster_config(args: argparse.Namespace) -> ClusterConfig:
    """Defaults, then ``--config`` file, then explicit flags."""
    mapping: Dict[str, Any] = load_config(args.config)
    mapping.pop("alphas", None)
    for name in CLUSTER_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            mapping[name] = value
    if args.cache_mb is not None:
        mapping["per_node_cache_bytes"] = int(args.cache_mb * 1024 * 1024)
    mapping["seed"] = args.seed
    return ClusterConfig.from_mapping(mapping)


# ---- Commands ----

def cmd_trace_gen(args: argparse.Namespace, header: str) -> str:
    trace, catalog = synthetic_workload(
        n_objects_initial=args.objects,
        duration_days=args.days,
        requests_per_day=args.requests_per_day,
        zipf_exponent=args.zipf,
        decay_exponent=args.decay,
        arrival_rate=args.arrival_rate,
        arrival_model=args.arrival_model,
        size_kind=args.size_kind,
        seed=args.seed,
    )
    out = _out_dir(args)
    trace_path = write_trace(trace, out / f"trace.{args.format}", header=header)
    write_catalog(catalog, out / "catalog.csv", header=header)
    return f"trace-gen: {len(trace)} requests, {len(catalog)} objects -> {trace_path}"


def cmd_trace_stats(args: argparse.Namespace, header: str) -> str:
    if args.catalog:
        trace, catalog = load_workload(args.trace, args.catalog)
    else:
        trace, catalog = read_trace(args.trace), None
    stats = trace_stats(trace)
    extra: Dict[str, Any] = {}
    try:
        extra["zipf_exponent"] = fit_zipf(trace)
    except InsufficientDataError as e:
        logger.warning("zipf fit skipped: %s", e)
        extra["zipf_exponent"] = None
    if catalog:
        extra["data_reduction_ratio"] = data_reduction_ratio(catalog)
    write_trace_stats(stats, _out_dir(args), header=header, extra=extra)
    return (f"trace-stats: {stats.n_requests} requests, {stats.n_objects} objects, "
            f"top 1% share {stats.share_top_1pct:.3f}")


def cmd_mrc(args: argparse.Namespace, header: str) -> str:
    catalog = None
    if args.catalog:
        trace, catalog = load_workload(args.trace, args.catalog)
    else:
        trace = read_trace(args.trace)
    curve = miss_ratio_curve(trace, args.capacities, policy=args.policy, unit=args.unit,
                             catalog=catalog, progress=args.progress)
    path = write_csv(curve, _out_dir(args) / f"mrc_{args.policy}.csv", header)
    return f"mrc: {len(curve)} points -> {path}"


def cmd_trace_downsample(args: argparse.Namespace, header: str) -> str:
    trace, catalog = load_workload(args.trace, args.catalog)
    small = downsample(trace, args.objects, seed=args.seed)
    kept = {int(oid): catalog[int(oid)] for oid in small["object_id"].unique()}
    out = _out_dir(args)
    path = write_trace(small, out / f"trace.{args.format}", header=header)
    write_catalog(kept, out / "catalog.csv", header=header)
    return f"trace-downsample: {len(small)} requests, {len(kept)} objects -> {path}"


def cmd_sim_run(args: argparse.Namespace, header: str) -> str:
    trace, catalog = load_workload(args.trace, args.catalog)
    cfg = cluster_config(args)
    report = run(trace, catalog, cfg, progress=args.progress)
    report.write(_out_dir(args), header)
    fr = report.summary["outcome_fractions"]
    return (f"sim-run [{cfg.policy.value}]: mean {report.mean_ms:.2f} ms, p99 {report.p99_ms:.2f} ms, "
            f"image {fr['image_hit']:.3f} / latent {fr['latent_hit']:.3f} / miss {fr['full_miss']:.3f}")


def cmd_sim_sweep_alpha(args: argparse.Namespace, header: str) -> str:
    trace, catalog = load_workload(args.trace, args.catalog)
    cfg = cluster_config(args)
    alphas = args.alphas
    if alphas is None:
        alphas = [float(a) for a in load_config(args.config).get("alphas", [0.3, 0.4, 0.5, 0.6, 0.7])]
    table = sweep_alpha(trace, catalog, cfg, alphas, progress=args.progress)
    write_csv(table, _out_dir(args) / "alpha_sweep.csv", header)
    best = best_static(table)
    return f"sim-sweep-alpha: {len(table)} runs, best alpha {best['alpha']:.2f} at {best['mean_ms']:.2f} ms"


def cmd_sim_spillover(args: argparse.Namespace, header: str) -> str:
    trace, catalog = load_workload(args.trace, args.catalog)
    cfg = cluster_config(args)
    table = compare_spillover(trace, catalog, cfg, args.thetas, progress=args.progress)
    write_csv(table, _out_dir(args) / "spillover.csv", header)
    base, best = table.iloc[0], table.loc[table["queue_p99_ms"].idxmin()]
    return (f"sim-spillover: p99 queue wait {base['queue_p99_ms']:.1f} ms (off) -> "
            f"{best['queue_p99_ms']:.1f} ms (theta={best['theta']:g})")


def cmd_sim_cache_sizes(args: argparse.Namespace, header: str) -> str:
    trace, catalog = load_workload(args.trace, args.catalog)
    cfg = cluster_config(args)
    policies = [Policy(p) for p in args.policies]
    table = sweep_cache_sizes(trace, catalog, cfg, args.fractions, policies, progress=args.progress)
    write_csv(table, _out_dir(args) / "cache_sizes.csv", header)
    return f"sim-cache-sizes: {len(args.fractions)} sizes x {len(policies)} policies"


def cmd_sim_sensitivity(args: argparse.Namespace, header: str) -> str:
    trace, catalog = load_workload(args.trace, args.catalog)
    cfg = cluster_config(args)
    table = sweep_parameter(trace, catalog, cfg, args.parameter, args.values, progress=args.progress)
    name = table["parameter"].iloc[0] if len(table) else args.parameter
    write_csv(table, _out_dir(args) / f"sensitivity_{name}.csv", header)
    spread = table["mean_ms"].max() - table["mean_ms"].min() if len(table) else 0.0
    return f"sim-sensitivity: {name} over {len(table)} values, mean latency spread {spread:.2f} ms"


def cmd_cost_project(args: argparse.Namespace, header: str) -> str:
    scenarios = load_cost_scenarios(args.scenarios)
    name = args.scenario or ("decay" if args.prices == "decay" else "constant")
    if name not in scenarios:
        raise ConfigError(f"unknown scenario '{name}', known: {sorted(scenarios)}", field="scenario")
    params, growth, decay = scenario_models(scenarios[name])
    if args.growth:
        growth = dataclasses.replace(growth, mode=args.growth)
    if args.prices and not args.scenario:
        decay = dataclasses.replace(decay, enabled=args.prices == "decay")
    strategies = list(STRATEGIES) if args.strategy == "all" else _words(args.strategy)
    months = horizon_months(args.horizon)
    projection = project_all(strategies, growth=growth, params=params, decay=decay,
                             horizon_months=months)
    years = sorted({y for y in HORIZON_YEARS if y <= args.horizon} | {args.horizon})
    horizons = horizon_table(growth, params, decay, years, strategies)
    out = _out_dir(args)
    write_csv(projection, out / "cost_projection.csv", header)
    write_csv(horizons, out / "cost_horizons.csv", header)
    write_json({"scenario": name, "trace_period_ratios": trace_period_ratios(growth, params)},
               out / "cost_summary.json", header)
    final = horizons[horizons["year"] == args.horizon]
    parts = ", ".join(f"{r.strategy} {r.normalized:.1f}x" for r in final.itertuples())
    return f"cost-project [{name}, {growth.mode}] {args.horizon}: {parts}"


# ---- Parser ----

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentsim",
        description="Dual-format image/latent cache simulator and cost model",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace-gen", help="Generate a synthetic trace and catalog")
    _add_common(p)
    p.add_argument("--objects", type=int, default=10_000, help="Objects present at t=0")
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--requests-per-day", type=int, default=10_000)
    p.add_argument("--zipf", type=float, default=1.11)
    p.add_argument("--decay", type=float, default=1.3)
    p.add_argument("--arrival-rate", type=float, default=0.0, help="New objects per day")
    p.add_argument("--arrival-model", choices=["linear", "cagr"], default="linear")
    p.add_argument("--size-kind", choices=["fixed", "lognormal"], default="fixed")
    p.add_argument("--format", choices=["csv", "lbtr", "parquet"], default="csv")
    p.set_defaults(func=cmd_trace_gen)

    p = sub.add_parser("trace-stats", help="Popularity, re-access and age-decay statistics")
    _add_common(p)
    _add_workload(p, catalog_required=False)
    p.set_defaults(func=cmd_trace_stats)

    p = sub.add_parser("mrc", help="Miss-ratio curve (LRU or Belady)")
    _add_common(p)
    _add_workload(p, catalog_required=False)
    p.add_argument("--policy", choices=["lru", "belady"], default="lru")
    p.add_argument("--unit", choices=["objects", "bytes"], default="objects")
    p.add_argument("--capacities", type=_floats, required=True, help="e.g. 10,100,1000")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_mrc)

    p = sub.add_parser("trace-downsample", help="Keep a random subset of objects")
    _add_common(p)
    _add_workload(p)
    p.add_argument("--objects", type=int, required=True)
    p.add_argument("--format", choices=["csv", "lbtr", "parquet"], default="csv")
    p.set_defaults(func=cmd_trace_downsample)

    p = sub.add_parser("sim-run", help="Replay a trace through the cluster")
    _add_common(p)
    _add_cluster(p)
    p.set_defaults(func=cmd_sim_run)

    p = sub.add_parser("sim-sweep-alpha", help="Static alpha sweep")
    _add_common(p)
    _add_cluster(p)
    p.add_argument("--alphas", type=_floats, default=None, help="e.g. 0.3,0.5,0.7")
    p.set_defaults(func=cmd_sim_sweep_alpha)

    p = sub.add_parser("sim-spillover", help="Latency with and without spillover")
    _add_common(p)
    _add_cluster(p)
    p.add_argument("--thetas", type=_floats, default=[4.0], help="Spill thresholds besides inf")
    p.set_defaults(func=cmd_sim_spillover)

    p = sub.add_parser("sim-cache-sizes", help="Latency per policy across cache sizes")
    _add_common(p)
    _add_cluster(p)
    p.add_argument("--fractions", type=_floats, default=[0.001, 0.005, 0.01, 0.02, 0.05, 0.10],
                   help="Cluster cache as fractions of the trace footprint")
    p.add_argument("--policies", type=_words, default=["latent-cache", "img-cache", "adaptive"])
    p.set_defaults(func=cmd_sim_cache_sizes)

    p = sub.add_parser("sim-sensitivity", help="Sweep one tuner/cache parameter")
    _add_common(p)
    _add_cluster(p)
    p.add_argument("--parameter", required=True, help="delta, window, tau, h or a config field")
    p.add_argument("--values", type=_floats, required=True)
    p.set_defaults(func=cmd_sim_sensitivity)

    p = sub.add_parser("cost-project", help="Cumulative cost projection")
    _add_common(p)
    p.add_argument("--strategy", default="all", help=f"all or comma list of {', '.join(STRATEGIES)}")
    p.add_argument("--horizon", type=int, default=2050, help="Final year")
    p.add_argument("--prices", choices=["constant", "decay"], default=None)
    p.add_argument("--growth", choices=["linear", "cagr"], default=None)
    p.add_argument("--scenario", default=None, help="Named scenario from the scenario file")
    p.add_argument("--scenarios", default=None, help="Scenario YAML (default: bundled)")
    p.set_defaults(func=cmd_cost_project)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    func: Callable[[argparse.Namespace, str], str] = args.func
    try:
        line = func(args, _invocation(argv, args.seed))
    except ConfigError as e:
        logger.error("%s", e)
        return 2
    except (LatentSimError, OSError) as e:
        logger.error("%s", e)
        return 1
    except ValueError as e:
        logger.error("invalid value: %s", e)
        return 2
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
