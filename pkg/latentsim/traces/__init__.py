"""Workload traces: format, synthesis, statistics, miss-ratio curves, sampling."""

from .tracetypes import (
    TraceRecord,
    ObjectMeta,
    SizeModel,
    SynthConfig,
    Catalog,
    make_trace,
    iter_records,
    uniform_catalog,
)
from .tracegen import (
    generate_trace,   # (trace, catalog) from SynthConfig
    concat_traces,    # multi-regime workloads
    AliasTable,
    zipf_counts,
)
from .tracestats import (
    fit_zipf,
    trace_stats,
    write_trace_stats,
    data_reduction_ratio,
    TraceStats,
)
from .tracemrc import miss_ratio_curve, lru_misses, belady_misses
from .tracesample import downsample
from .traceio import (
    read_trace,
    write_trace,
    read_catalog,
    write_catalog,
    read_invocation,
)
from .traceapi import synth_config, synthetic_workload, load_workload, check_catalog

__all__ = [
    "TraceRecord",
    "ObjectMeta",
    "SizeModel",
    "SynthConfig",
    "Catalog",
    "make_trace",
    "iter_records",
    "uniform_catalog",
    "generate_trace",
    "concat_traces",
    "AliasTable",
    "zipf_counts",
    "fit_zipf",
    "trace_stats",
    "write_trace_stats",
    "data_reduction_ratio",
    "TraceStats",
    "miss_ratio_curve",
    "lru_misses",
    "belady_misses",
    "downsample",
    "read_trace",
    "write_trace",
    "read_catalog",
    "write_catalog",
    "read_invocation",
    "synth_config",        # flat kwargs -> SynthConfig
    "synthetic_workload",
    "load_workload",       # trace + catalog with coverage check
    "check_catalog",
]
