"""Discrete-event cluster simulation and multi-run experiments."""

from .simconfig import LatencyModel, Policy, ClusterConfig, GPU_DECODE_MS
from .simengine import run, ClusterSim
from .simreport import SimReport, REQUEST_COLUMNS
from .simsweeps import (
    sweep_alpha,
    best_static,
    compare_spillover,
    sweep_cache_sizes,
    sweep_parameter,
    footprint_bytes,
    shadow_gradient_check,
    gradient_agreement,
)

__all__ = [
    "LatencyModel",
    "Policy",
    "ClusterConfig",
    "GPU_DECODE_MS",
    "run",
    "ClusterSim",
    "SimReport",
    "REQUEST_COLUMNS",
    "sweep_alpha",
    "best_static",
    "compare_spillover",
    "sweep_cache_sizes",      # cache-size crossover table
    "sweep_parameter",        # sensitivity to delta / window / tau / h
    "footprint_bytes",
    "shadow_gradient_check",  # descent-direction oracle
    "gradient_agreement",
]
