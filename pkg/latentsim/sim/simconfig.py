"""Simulation configuration: latency model, policies, cluster parameters."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np

from latentsim.config import apply_overrides
from latentsim.errors import ConfigError
from latentsim.tuning.tuner import TunerConfig

# Per-image VAE decode time by GPU (ms)
GPU_DECODE_MS: Dict[str, float] = {
    "h100": 32.6,
    "rtx5090": 47.3,
    "rtx4090": 67.2,
}

FETCH_DISTRIBUTIONS = ("constant", "lognormal", "empirical")


@dataclass(frozen=True)
class LatencyModel:
    """Service times in milliseconds.

    Attributes:
        net_transfer_ms: Response transfer to the client
        decode_ms: GPU decode service time
        fetch_ms: Mean object-store fetch time
        fetch_dist: ``constant``, ``lognormal`` (mean ``fetch_ms``, log-sd
            ``fetch_sigma``) or ``empirical`` (uniform draw from ``fetch_table``)
        intra_cluster_transfer_ms: Node-to-node latent transfer and write-back
    """
    net_transfer_ms: float = 10.0
    decode_ms: float = 40.0
    fetch_ms: float = 140.0
    fetch_dist: str = "constant"
    fetch_sigma: float = 0.3
    fetch_table: Tuple[float, ...] = ()
    intra_cluster_transfer_ms: float = 5.0

    @classmethod
    def for_gpu(cls, name: str, **kwargs: Any) -> "LatencyModel":
        """Latency model with the decode time of a known GPU.

        Examples:
            >>> LatencyModel.for_gpu("H100").decode_ms
            32.6
        """
        key = name.lower().replace(" ", "").replace("-", "")
        if key not in GPU_DECODE_MS:
            raise ConfigError(f"unknown GPU '{name}', known: {sorted(GPU_DECODE_MS)}", field="gpu")
        return cls(decode_ms=GPU_DECODE_MS[key], **kwargs)

    def validate(self) -> None:
        for name in ("net_transfer_ms", "decode_ms", "fetch_ms", "intra_cluster_transfer_ms"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", field=name)
        if self.fetch_dist not in FETCH_DISTRIBUTIONS:
            raise ConfigError(f"must be one of {FETCH_DISTRIBUTIONS}", field="fetch_dist")
        if self.fetch_dist == "lognormal" and not self.fetch_sigma > 0:
            raise ConfigError("must be > 0", field="fetch_sigma")
        if self.fetch_dist == "empirical":
            if not self.fetch_table or min(self.fetch_table) <= 0:
                raise ConfigError("needs positive samples", field="fetch_table")

    def sample_fetch(self, rng: np.random.Generator) -> float:
        if self.fetch_dist == "constant":
            return self.fetch_ms
        if self.fetch_dist == "lognormal":
            mu = math.log(self.fetch_ms) - self.fetch_sigma ** 2 / 2.0
            return float(rng.lognormal(mu, self.fetch_sigma))
        return float(self.fetch_table[int(rng.integers(len(self.fetch_table)))])


class Policy(str, Enum):
    IMG_STORE = "img-store"
    DECODE_ALL = "decode-all"
    IMG_CACHE = "img-cache"
    LATENT_CACHE = "latent-cache"
    ADAPTIVE = "adaptive"
    STATIC = "static"

    @property
    def dual_cache(self) -> bool:
        """Policies served by the dual-format cache and GPU decode path."""
        return self in (Policy.IMG_CACHE, Policy.LATENT_CACHE, Policy.ADAPTIVE, Policy.STATIC)


@dataclass(frozen=True)
class ClusterConfig:
    """Everything one simulation run needs besides the trace.

    ``alpha`` is the starting split for ``adaptive`` and the pinned split for
    ``static``. ``theta`` of ``inf`` disables spillover. ``time_scale``
    multiplies trace timestamps (0.1 replays ten times faster).
    """
    n_nodes: int = 3
    per_node_cache_bytes: int = 2 * 1024 ** 3
    theta: float = math.inf
    gpus_per_node: int = 1
    policy: Policy = Policy.ADAPTIVE
    alpha: float = 0.5
    tail_fraction: float = 0.10
    promotion_threshold: int = 8
    tuner_window: Optional[int] = None
    tuner_step: float = 0.005
    ewma_weight: float = 0.1
    alpha_min: float = 0.0
    alpha_max: float = 1.0
    latency: LatencyModel = field(default_factory=LatencyModel)
    seed: int = 0
    warmup_fraction: float = 0.2
    time_scale: float = 1.0
    vnodes_per_node: int = 128
    promotion_extra_decode: bool = False

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise ConfigError("must be >= 1", field="n_nodes")
        if self.gpus_per_node < 1:
            raise ConfigError("must be >= 1", field="gpus_per_node")
        if self.per_node_cache_bytes < 0:
            raise ConfigError("must be >= 0", field="per_node_cache_bytes")
        if self.theta < 0:
            raise ConfigError("must be >= 0", field="theta")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError("must be in [0, 1)", field="warmup_fraction")
        if not self.time_scale > 0:
            raise ConfigError("must be > 0", field="time_scale")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("must be in [0, 1]", field="alpha")
        Policy(self.policy)
        self.latency.validate()
        self.tuner_config().validate()

    def pinned_alpha(self) -> Optional[float]:
        """Fixed alpha of the policy, or None when the tuner moves it."""
        policy = Policy(self.policy)
        if policy in (Policy.IMG_CACHE, Policy.IMG_STORE):
            return 1.0
        if policy is Policy.LATENT_CACHE:
            return 0.0
        if policy is Policy.STATIC:
            return self.alpha
        return None

    def start_alpha(self) -> float:
        pinned = self.pinned_alpha()
        return self.alpha if pinned is None else pinned

    def tuner_config(self) -> TunerConfig:
        pinned = self.pinned_alpha()
        bounds = (self.alpha_min, self.alpha_max) if pinned is None else (pinned, pinned)
        return TunerConfig(
            window=self.tuner_window,
            step=self.tuner_step,
            ewma_weight=self.ewma_weight,
            alpha_bounds=bounds,
            prior_decode_ms=self.latency.decode_ms,
            prior_fetch_ms=self.latency.fetch_ms,
        )

    def with_policy(self, policy: Policy, **changes: Any) -> "ClusterConfig":
        return dataclasses.replace(self, policy=Policy(policy), **changes)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], base: Optional["ClusterConfig"] = None) -> "ClusterConfig":
        """Build from flat keys; latency keys (and ``gpu``) fill the LatencyModel.

        Examples:
            >>> cfg = ClusterConfig.from_mapping({"n_nodes": 2, "decode_ms": 30, "policy": "static"})
            >>> (cfg.n_nodes, cfg.latency.decode_ms, cfg.policy.value)
            (2, 30.0, 'static')
        """
        base = base or cls()
        latency_names = {f.name for f in dataclasses.fields(LatencyModel)}
        top: Dict[str, Any] = {}
        lat: Dict[str, Any] = {}
        gpu = None
        for key, value in mapping.items():
            if value is None:
                continue
            if key == "gpu":
                gpu = str(value)
            elif key in latency_names:
                lat[key] = tuple(float(v) for v in value) if key == "fetch_table" else value
            else:
                top[key] = value
        latency = base.latency
        if gpu is not None:
            latency = dataclasses.replace(latency, decode_ms=LatencyModel.for_gpu(gpu).decode_ms)
        latency = apply_overrides(latency, lat)
        if "policy" in top:
            try:
                top["policy"] = Policy(str(top["policy"]))
            except ValueError as e:
                raise ConfigError(f"unknown policy {top['policy']!r}", field="policy") from e
        if "theta" in top:
            top["theta"] = float(top["theta"])
        if "tuner_window" in top:
            top["tuner_window"] = int(top["tuner_window"])
        cfg = apply_overrides(base, top)
        cfg = dataclasses.replace(cfg, latency=latency)
        cfg.validate()
        return cfg
