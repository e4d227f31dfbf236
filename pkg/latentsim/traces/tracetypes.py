"""Trace and catalog types.

A trace is a ``pandas.DataFrame`` with the columns in ``TRACE_COLUMNS``,
sorted by non-decreasing ``ts_ms``. :class:`TraceRecord` is the row type used
when iterating. A catalog maps ``object_id -> ObjectMeta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, NamedTuple

import numpy as np
import pandas as pd

from latentsim.errors import ConfigError

MIB = 1024 * 1024
MS_PER_DAY = 86_400_000
MS_PER_HOUR = 3_600_000

TRACE_COLUMNS = ["ts_ms", "object_id", "model_id", "model_version"]
TRACE_DTYPES = {
    "ts_ms": np.uint64,
    "object_id": np.uint64,
    "model_id": np.uint32,
    "model_version": np.uint32,
}
CATALOG_COLUMNS = ["object_id", "image_bytes", "latent_bytes"]

DEFAULT_IMAGE_BYTES = int(1.5 * MIB)
DEFAULT_LATENT_BYTES = int(0.29 * MIB)


class TraceRecord(NamedTuple):
    """One access event."""
    ts_ms: int
    object_id: int
    model_id: int
    model_version: int


@dataclass(frozen=True)
class ObjectMeta:
    """Byte sizes of one object in decoded-image and compressed-latent form."""
    image_bytes: int
    latent_bytes: int

    def __post_init__(self):
        if not 0 < self.latent_bytes < self.image_bytes:
            raise ConfigError(
                f"need 0 < latent_bytes < image_bytes, got "
                f"latent_bytes={self.latent_bytes}, image_bytes={self.image_bytes}",
                field="latent_bytes",
            )


Catalog = Dict[int, ObjectMeta]


@dataclass(frozen=True)
class SizeModel:
    """How object sizes are drawn.

    ``fixed`` gives every object the same sizes. ``lognormal`` scales both sizes
    by independent mean-one lognormal factors with shape ``sigma``; the latent
    size is clipped into ``[1, image_bytes - 1]``.
    """
    kind: str = "fixed"
    image_bytes: int = DEFAULT_IMAGE_BYTES
    latent_bytes: int = DEFAULT_LATENT_BYTES
    sigma: float = 0.25

    def validate(self) -> None:
        if self.kind not in ("fixed", "lognormal"):
            raise ConfigError(f"unknown size model '{self.kind}'", field="size_model")
        if not 0 < self.latent_bytes < self.image_bytes:
            raise ConfigError("need 0 < latent_bytes < image_bytes", field="latent_bytes")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0", field="sigma")


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic workload generator.

    Attributes:
        n_objects_initial: Objects present at t=0
        arrival_rate: New objects per simulated day (linear arrival model)
        zipf_exponent: Exponent of the lifetime popularity law
        decay_exponent: Per-object intensity decays as (age_days + 1) ** -decay_exponent
        duration_days: Trace length in days
        requests_per_day: Mean request volume
        seed: 64-bit seed; the only source of randomness
        size_model: Object size distribution
        arrival_model: ``linear`` or ``cagr``
        arrival_cagr: Yearly catalog growth used by the ``cagr`` model
        images_per_model: Mean objects per generating model
        max_versions: Model versions are drawn from ``range(max_versions)``
    """
    n_objects_initial: int = 10_000
    arrival_rate: float = 0.0
    zipf_exponent: float = 1.11
    decay_exponent: float = 1.3
    duration_days: int = 30
    requests_per_day: int = 10_000
    seed: int = 0
    size_model: SizeModel = field(default_factory=SizeModel)
    arrival_model: str = "linear"
    arrival_cagr: float = 0.127
    images_per_model: int = 130
    max_versions: int = 4

    def validate(self) -> None:
        if self.n_objects_initial < 1:
            raise ConfigError("must be >= 1", field="n_objects_initial")
        if self.arrival_rate < 0:
            raise ConfigError("must be >= 0", field="arrival_rate")
        if not self.zipf_exponent > 0:
            raise ConfigError("must be > 0", field="zipf_exponent")
        if self.decay_exponent < 0:
            raise ConfigError("must be >= 0", field="decay_exponent")
        if self.duration_days < 1:
            raise ConfigError("must be >= 1", field="duration_days")
        if self.requests_per_day < 1:
            raise ConfigError("must be >= 1", field="requests_per_day")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("must fit in 64 bits", field="seed")
        if self.arrival_model not in ("linear", "cagr"):
            raise ConfigError(f"unknown arrival model '{self.arrival_model}'", field="arrival_model")
        if self.arrival_cagr < 0:
            raise ConfigError("must be >= 0", field="arrival_cagr")
        if self.images_per_model < 1:
            raise ConfigError("must be >= 1", field="images_per_model")
        if self.max_versions < 1:
            raise ConfigError("must be >= 1", field="max_versions")
        self.size_model.validate()

    @property
    def total_requests(self) -> int:
        return int(round(self.duration_days * self.requests_per_day))


def empty_trace() -> pd.DataFrame:
    return pd.DataFrame({c: pd.Series([], dtype=TRACE_DTYPES[c]) for c in TRACE_COLUMNS})


def make_trace(
    ts_ms, object_id, model_id=None, model_version=None,
) -> pd.DataFrame:
    """Build a trace DataFrame from column sequences.

    ``model_id`` and ``model_version`` default to zeros, which is convenient
    for hand-written test traces.

    Examples:
        >>> t = make_trace([0, 10, 20], [7, 8, 7])
        >>> list(t["object_id"])
        [7, 8, 7]
    """
    n = len(ts_ms)
    if len(object_id) != n:
        raise ConfigError("ts_ms and object_id lengths differ", field="object_id")
    model_id = np.zeros(n) if model_id is None else model_id
    model_version = np.zeros(n) if model_version is None else model_version
    return pd.DataFrame({
        "ts_ms": np.asarray(ts_ms, dtype=np.uint64),
        "object_id": np.asarray(object_id, dtype=np.uint64),
        "model_id": np.asarray(model_id, dtype=np.uint32),
        "model_version": np.asarray(model_version, dtype=np.uint32),
    })


def iter_records(trace: pd.DataFrame) -> Iterator[TraceRecord]:
    """Yield :class:`TraceRecord` rows in trace order."""
    for row in zip(
        trace["ts_ms"].tolist(),
        trace["object_id"].tolist(),
        trace["model_id"].tolist(),
        trace["model_version"].tolist(),
    ):
        yield TraceRecord(*row)


def is_sorted(trace: pd.DataFrame) -> bool:
    ts = trace["ts_ms"].to_numpy()
    return bool(np.all(ts[1:] >= ts[:-1])) if len(ts) > 1 else True


def uniform_catalog(object_ids, image_bytes: int = DEFAULT_IMAGE_BYTES,
                    latent_bytes: int = DEFAULT_LATENT_BYTES) -> Catalog:
    """Catalog giving every id the same sizes."""
    meta = ObjectMeta(image_bytes, latent_bytes)
    return {int(oid): meta for oid in object_ids}
