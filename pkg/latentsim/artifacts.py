"""Writers for CSV / JSON artifacts with an invocation header.

Every CSV artifact starts with one ``# ...`` comment line recording how it was
produced; JSON artifacts carry the same text under ``"invocation"``. Output is
byte-stable: fixed float formatting, ``\\n`` line endings, sorted JSON keys.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping, Optional, Union

import numpy as np
import pandas as pd

PathLike = Union[str, Path]


def write_csv(df: pd.DataFrame, path: PathLike, header: Optional[str] = None) -> Path:
    """Write ``df`` as CSV, preceded by ``# header`` when given."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header:
            f.write(f"# {header}\n")
        df.to_csv(f, index=False, lineterminator="\n", float_format="%.6f")
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(data: Mapping[str, Any], path: PathLike, header: Optional[str] = None) -> Path:
    """Write ``data`` as sorted, indented JSON; non-finite floats become null."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(_jsonable(data))
    if header:
        payload["invocation"] = header
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
