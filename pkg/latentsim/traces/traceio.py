"""Trace and catalog file formats.

Formats:
  - CSV trace: header ``ts_ms,object_id,model_id,model_version``; ``#`` lines skipped
  - Binary trace (``.lbtr``): magic ``LBTR``, version byte 0x01, then packed
    little-endian records {u64 ts_ms, u64 object_id, u32 model_id, u32 model_version}
  - Parquet trace (``.parquet``): same columns, requires pyarrow; the invocation
    header is kept in the schema metadata under ``invocation``
  - Catalog CSV: ``object_id,image_bytes,latent_bytes``
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from latentsim.artifacts import write_csv
from latentsim.errors import TraceFormatError
from latentsim.traces.tracetypes import (
    CATALOG_COLUMNS,
    TRACE_COLUMNS,
    TRACE_DTYPES,
    Catalog,
    ObjectMeta,
    is_sorted,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b"LBTR"
FORMAT_VERSION = 1
RECORD_DTYPE = np.dtype([
    ("ts_ms", "<u8"),
    ("object_id", "<u8"),
    ("model_id", "<u4"),
    ("model_version", "<u4"),
])
assert RECORD_DTYPE.itemsize == 24
INVOCATION_KEY = b"invocation"


# ---- Trace: CSV ----
def write_trace_csv(trace: pd.DataFrame, path: PathLike, header: Optional[str] = None) -> Path:
    return write_csv(trace[TRACE_COLUMNS], path, header=header)


def read_trace_csv(path: PathLike) -> pd.DataFrame:
    df = pd.read_csv(path, comment="#", dtype=TRACE_DTYPES)
    missing = [c for c in TRACE_COLUMNS if c not in df.columns]
    if missing:
        raise TraceFormatError(f"{path}: missing trace columns {missing}")
    return df[TRACE_COLUMNS]


# ---- Trace: binary ----
def write_trace_binary(trace: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = np.empty(len(trace), dtype=RECORD_DTYPE)
    for column in TRACE_COLUMNS:
        records[column] = trace[column].to_numpy()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(bytes([FORMAT_VERSION]))
        f.write(records.tobytes())
    return path


def read_trace_binary(path: PathLike) -> pd.DataFrame:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise TraceFormatError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < 5 or raw[4] != FORMAT_VERSION:
        raise TraceFormatError(f"{path}: unsupported format version")
    body = raw[5:]
    if len(body) % RECORD_DTYPE.itemsize:
        raise TraceFormatError(f"{path}: truncated record ({len(body)} payload bytes)")
    records = np.frombuffer(body, dtype=RECORD_DTYPE)
    return pd.DataFrame({c: records[c].astype(TRACE_DTYPES[c]) for c in TRACE_COLUMNS})


# ---- Trace: parquet ----
def write_trace_parquet(trace: pd.DataFrame, path: PathLike, header: Optional[str] = None) -> Path:
    try:
        import pyarrow as pa
        import pyarrow.parquet as pq
    except ImportError as e:
        raise ImportError("pyarrow not installed. pip install pyarrow") from e
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = pa.Table.from_pandas(trace[TRACE_COLUMNS], preserve_index=False)
    if header:
        metadata = dict(table.schema.metadata or {})
        metadata[INVOCATION_KEY] = header.encode("utf-8")
        table = table.replace_schema_metadata(metadata)
    pq.write_table(table, path)
    return path


def read_trace_parquet(path: PathLike) -> pd.DataFrame:
    df = pd.read_parquet(path)
    return df[TRACE_COLUMNS].astype(TRACE_DTYPES)


def read_invocation(path: PathLike) -> Optional[str]:
    """Invocation header of a CSV or parquet artifact, or None."""
    path = Path(path)
    if path.suffix.lower() == ".parquet":
        import pyarrow.parquet as pq

        metadata = pq.read_schema(path).metadata or {}
        raw = metadata.get(INVOCATION_KEY)
        return raw.decode("utf-8") if raw is not None else None
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    return first[2:].rstrip("\n") if first.startswith("# ") else None


# ---- Trace: dispatch ----
def write_trace(trace: pd.DataFrame, path: PathLike, header: Optional[str] = None) -> Path:
    """Write a trace; format chosen by suffix (.csv, .lbtr, .parquet)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return write_trace_csv(trace, path, header=header)
    if suffix in (".lbtr", ".bin"):
        return write_trace_binary(trace, path)
    if suffix == ".parquet":
        return write_trace_parquet(trace, path, header=header)
    raise TraceFormatError(f"unsupported trace suffix '{suffix}'")


def read_trace(path: PathLike) -> pd.DataFrame:
    """Read a trace in any supported format and check it is time-sorted.

    Raises:
        FileNotFoundError: path does not exist
        TraceFormatError: unknown suffix, bad header, or unsorted records
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trace not found: {path}")
    suffix = path.suffix.lower()
    if suffix == ".csv":
        trace = read_trace_csv(path)
    elif suffix in (".lbtr", ".bin"):
        trace = read_trace_binary(path)
    elif suffix == ".parquet":
        trace = read_trace_parquet(path)
    else:
        raise TraceFormatError(f"unsupported trace suffix '{suffix}'")
    if not is_sorted(trace):
        raise TraceFormatError(f"{path}: records are not sorted by ts_ms")
    logger.debug("read %d records from %s", len(trace), path)
    return trace


# ---- Catalog ----
def catalog_frame(catalog: Catalog) -> pd.DataFrame:
    ids = sorted(catalog)
    return pd.DataFrame({
        "object_id": np.asarray(ids, dtype=np.uint64),
        "image_bytes": np.asarray([catalog[i].image_bytes for i in ids], dtype=np.int64),
        "latent_bytes": np.asarray([catalog[i].latent_bytes for i in ids], dtype=np.int64),
    }, columns=CATALOG_COLUMNS)


def write_catalog(catalog: Catalog, path: PathLike, header: Optional[str] = None) -> Path:
    return write_csv(catalog_frame(catalog), path, header=header)


def read_catalog(path: PathLike) -> Catalog:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Catalog not found: {path}")
    df = pd.read_csv(path, comment="#", dtype={"object_id": np.uint64})
    missing = [c for c in CATALOG_COLUMNS if c not in df.columns]
    if missing:
        raise TraceFormatError(f"{path}: missing catalog columns {missing}")
    return {
        int(oid): ObjectMeta(int(img), int(lat))
        for oid, img, lat in zip(
            df["object_id"].tolist(), df["image_bytes"].tolist(), df["latent_bytes"].tolist()
        )
    }
