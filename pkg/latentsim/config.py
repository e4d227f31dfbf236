"""Flat key-value configuration files.

Config files are YAML mappings of scalar values, e.g.::

    n_nodes: 3
    policy: adaptive
    decode_ms: 40
    fetch_sigma: 0.3

The keys mirror dataclass field names. Nested config objects are addressed by
the names of their own fields (see ``ClusterConfig.from_mapping``).
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, TypeVar, Union

import yaml

from latentsim.errors import ConfigError

T = TypeVar("T")


def load_config(config_path: Optional[Union[str, Path]]) -> Dict[str, Any]:
    """Load a flat key-value YAML file.

    Args:
        config_path: Path to the file. ``None`` returns an empty mapping.

    Returns:
        Dict of key -> scalar value

    Raises:
        ConfigError: file missing, not a mapping, or contains nested values
    """
    if config_path is None:
        return {}
    path = Path(config_path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}", field="config")
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a key-value mapping", field="config")
    for key, value in data.items():
        if isinstance(value, (dict, list)) and key != "alphas":
            raise ConfigError(f"nested value not allowed in {path}", field=str(key))
    return {str(k): v for k, v in data.items()}


def apply_overrides(cfg: T, overrides: Mapping[str, Any], strict: bool = True) -> T:
    """Return a copy of dataclass ``cfg`` with matching fields replaced.

    Values are coerced to the type of the current field value where that is a
    plain scalar (int, float, bool, str), so YAML ``40`` can fill a float field.

    Args:
        cfg: Dataclass instance
        overrides: key -> value
        strict: Raise on keys that are not fields of ``cfg``

    Returns:
        New dataclass instance
    """
    names = {f.name for f in dataclasses.fields(cfg)}
    changes: Dict[str, Any] = {}
    for key, value in overrides.items():
        if key not in names:
            if strict:
                raise ConfigError(f"unknown configuration key '{key}'", field=key)
            continue
        if value is None:
            continue
        changes[key] = _coerce(key, getattr(cfg, key), value)
    return dataclasses.replace(cfg, **changes)


def _coerce(key: str, current: Any, value: Any) -> Any:
    if isinstance(current, bool):
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ConfigError(f"expected boolean, got {value!r}", field=key)
        return bool(value)
    try:
        if isinstance(current, int) and not isinstance(value, bool):
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(f"expected integer, got {value!r}", field=key)
            return int(value)
        if isinstance(current, float):
            return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"cannot convert {value!r}", field=key) from e
    return value
