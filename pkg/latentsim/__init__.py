"""latentsim - dual-format (image / latent) cache simulation and cost projection"""

__version__ = "0.1.0"

# Workloads
from .traces import (
    generate_trace,        # (trace, catalog) from SynthConfig
    synthetic_workload,    # same, from keyword arguments
    load_workload,
    read_trace,
    write_trace,
    trace_stats,
    miss_ratio_curve,
    SynthConfig,
    ObjectMeta,
)

# Cache and tuner
from .caches import DualCache, DualCacheConfig, Outcome
from .tuning import AlphaTuner, TunerConfig

# Routing
from .routing import Ring, route, InFlightMap

# Simulation
from .sim import (
    run,
    ClusterConfig,
    LatencyModel,
    Policy,
    SimReport,
    sweep_alpha,
    compare_spillover,
)

# Costs
from .costs import project, horizon_table, monthly_cost, CostParams

__all__ = [
    "__version__",
    # Workloads
    "generate_trace",
    "synthetic_workload",
    "load_workload",
    "read_trace",
    "write_trace",
    "trace_stats",
    "miss_ratio_curve",
    "SynthConfig",
    "ObjectMeta",
    # Cache / tuner
    "DualCache",
    "DualCacheConfig",
    "Outcome",
    "AlphaTuner",
    "TunerConfig",
    # Routing
    "Ring",
    "route",
    "InFlightMap",
    # Simulation
    "run",                 # primary entry point
    "ClusterConfig",
    "LatencyModel",
    "Policy",
    "SimReport",
    "sweep_alpha",
    "compare_spillover",
    # Costs
    "project",
    "horizon_table",
    "monthly_cost",
    "CostParams",
]
