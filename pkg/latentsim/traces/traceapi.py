"""Public API for workloads: synthesize and load.

Thin wrappers over the trace modules that take plain keyword arguments.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Tuple, Union

import pandas as pd

from latentsim.config import apply_overrides
from latentsim.errors import UnknownObjectError
from latentsim.traces.tracegen import generate_trace
from latentsim.traces.traceio import read_catalog, read_trace
from latentsim.traces.tracetypes import Catalog, SizeModel, SynthConfig

_SIZE_KEYS = {f.name for f in dataclasses.fields(SizeModel)}
_SIZE_ALIASES = {"size_kind": "kind", "size_sigma": "sigma"}


def synth_config(**overrides: Any) -> SynthConfig:
    """Build a validated :class:`SynthConfig` from flat keyword arguments.

    Size-model fields can be given directly (``image_bytes``, ``latent_bytes``)
    or with a ``size_`` prefix (``size_kind``, ``size_sigma``).

    Examples:
        >>> cfg = synth_config(n_objects_initial=50, size_kind="lognormal")
        >>> cfg.size_model.kind
        'lognormal'
    """
    size_changes = {}
    for key in list(overrides):
        name = _SIZE_ALIASES.get(key, key)
        if name in _SIZE_KEYS and key not in ("kind", "sigma"):
            size_changes[name] = overrides.pop(key)
    cfg = apply_overrides(SynthConfig(), overrides)
    if size_changes:
        cfg = dataclasses.replace(cfg, size_model=apply_overrides(cfg.size_model, size_changes))
    cfg.validate()
    return cfg


def synthetic_workload(**overrides: Any) -> Tuple[pd.DataFrame, Catalog]:
    """Generate a synthetic (trace, catalog) pair.

    Args:
        **overrides: Any :class:`SynthConfig` field (see :func:`synth_config`)

    Returns:
        (trace, catalog)

    Examples:
        >>> trace, catalog = synthetic_workload(n_objects_initial=100, duration_days=2,
        ...                                     requests_per_day=500, seed=7)
        >>> len(trace)
        1000
        >>> set(trace["object_id"]) <= set(catalog)
        True
    """
    return generate_trace(synth_config(**overrides))


def load_workload(
    trace_path: Union[str, Path], catalog_path: Union[str, Path],
) -> Tuple[pd.DataFrame, Catalog]:
    """Load a trace and catalog and check the catalog covers every id.

    Raises:
        FileNotFoundError: either file missing
        UnknownObjectError: an id in the trace has no catalog entry
    """
    trace = read_trace(trace_path)
    catalog = read_catalog(catalog_path)
    check_catalog(trace, catalog)
    return trace, catalog


def check_catalog(trace: pd.DataFrame, catalog: Catalog) -> None:
    """Raise :class:`UnknownObjectError` for the first id missing from ``catalog``."""
    for oid in trace["object_id"].unique().tolist():
        if int(oid) not in catalog:
            raise UnknownObjectError(int(oid))
