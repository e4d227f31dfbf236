"""Object-level downsampling: keep every access of a random subset of objects."""

from __future__ import annotations

import numpy as np
import pandas as pd

from latentsim.errors import ConfigError


def downsample(trace: pd.DataFrame, k_objects: int, seed: int = 0) -> pd.DataFrame:
    """Uniformly sample ``k_objects`` distinct ids and keep all their records.

    Record order, timestamps and therefore inter-access gaps of the retained
    objects are unchanged.

    Args:
        trace: Trace DataFrame
        k_objects: Number of objects to keep (1..distinct count)
        seed: Sampling seed

    Returns:
        Filtered trace with a fresh index

    Raises:
        ConfigError: k_objects is 0 or exceeds the distinct object count
    """
    if k_objects <= 0:
        raise ConfigError("must be >= 1", field="k_objects")
    ids = np.unique(trace["object_id"].to_numpy())
    if k_objects > ids.size:
        raise ConfigError(
            f"requested {k_objects} objects but the trace has {ids.size}", field="k_objects"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(ids, size=k_objects, replace=False)
    kept = trace[trace["object_id"].isin(chosen)].reset_index(drop=True)
    kept.attrs = {}
    return kept
