"""Online tuning of the image/latent split alpha.

Per window the cache counters give four rates:

    MR_img    = image_misses / total
    delta_img = image_tail_hits / total
    MR_lat    = full_misses / image_misses      (0 if no image misses)
    delta_lat = latent_tail_hits / image_misses (0 if no image misses)

Expected per-request cost (image hits are free):

    E = MR_img * (T_decode + MR_lat * T_fetch)

and its sensitivity to alpha:

    D = -delta_img * (T_decode + T_fetch * MR_lat) + T_fetch * MR_img * delta_lat

Only the sign of D is used: D < 0 grows the image tier by one step, D > 0
shrinks it. T_decode and T_fetch are exponentially weighted averages of
observed latencies.

Raw tail hits grow with the size of the tail they are counted on, and each
tail is tau of its own tier. Left as is, D would favour whichever tier is
already larger. The tuner therefore evaluates D on marginal rates: each delta
divided by the mean share of capacity its tail held during the window (see
:func:`marginal_rates`). Counters that carry no occupancy (capacity 0) are
used raw.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import pandas as pd

from latentsim.caches.dualcache import WindowCounters
from latentsim.errors import ConfigError, EmptyWindowError

logger = logging.getLogger(__name__)

# windows per node over a desk-scale run, and the smallest window allowed
DESK_WINDOWS = 200
MIN_DESK_WINDOW = 50

WINDOW_COLUMNS = [
    "window_idx", "alpha", "MR_img", "MR_lat", "delta_img", "delta_lat", "D",
    "T_decode", "T_fetch",
]
# history_frame adds these after the per-window CSV columns
RECORD_COLUMNS = WINDOW_COLUMNS + ["requests", "expected_ms", "new_alpha", "tail_img", "tail_lat"]


class LatencyKind(str, Enum):
    DECODE = "decode"
    FETCH = "fetch"


@dataclass(frozen=True)
class TunerConfig:
    """Tuning parameters.

    ``window`` of None means "derive from per-node traffic" (see
    :func:`desk_window`). The priors stand in for T_decode / T_fetch until
    the first observation of each.
    """
    window: Optional[int] = None
    step: float = 0.005
    ewma_weight: float = 0.1
    alpha_bounds: Tuple[float, float] = (0.0, 1.0)
    prior_decode_ms: float = 40.0
    prior_fetch_ms: float = 140.0

    def validate(self) -> None:
        if self.window is not None and self.window < 1:
            raise ConfigError("must be >= 1", field="window")
        if not 0.0 < self.step < 1.0:
            raise ConfigError("must be in (0, 1)", field="step")
        if not 0.0 < self.ewma_weight <= 1.0:
            raise ConfigError("must be in (0, 1]", field="ewma_weight")
        lo, hi = self.alpha_bounds
        if not 0.0 <= lo <= hi <= 1.0:
            raise ConfigError("need 0 <= lo <= hi <= 1", field="alpha_bounds")
        if self.prior_decode_ms <= 0 or self.prior_fetch_ms <= 0:
            raise ConfigError("priors must be > 0", field="prior_decode_ms")


def desk_window(node_lookups: int) -> int:
    """Window size for a node that will see ``node_lookups`` cache lookups.

    Examples:
        >>> desk_window(40_000)
        200
        >>> desk_window(3_000)
        50
    """
    return max(node_lookups // DESK_WINDOWS, MIN_DESK_WINDOW)


@dataclass
class TunerState:
    alpha: float
    t_decode: Optional[float] = None
    t_fetch: Optional[float] = None
    last_d: float = 0.0


@dataclass(frozen=True)
class WindowRates:
    mr_img: float
    mr_lat: float
    delta_img: float
    delta_lat: float


def rates_from_counters(c: WindowCounters) -> WindowRates:
    """Turn window counters into the four rates.

    Raises:
        EmptyWindowError: the window saw no requests

    Examples:
        >>> r = rates_from_counters(WindowCounters(100, 34, 10, 2, 1))
        >>> (r.mr_img, round(r.mr_lat, 4), r.delta_img, round(r.delta_lat, 4))
        (0.34, 0.2941, 0.02, 0.0294)
    """
    if c.total_requests <= 0:
        raise EmptyWindowError("window closed with zero requests")
    total = c.total_requests
    if c.image_misses > 0:
        mr_lat = c.full_misses / c.image_misses
        delta_lat = c.latent_tail_hits / c.image_misses
    else:
        mr_lat = delta_lat = 0.0
    return WindowRates(
        mr_img=c.image_misses / total,
        mr_lat=mr_lat,
        delta_img=c.image_tail_hits / total,
        delta_lat=delta_lat,
    )


def tail_shares(c: WindowCounters) -> Tuple[float, float]:
    """Mean tail occupancy of the (image, latent) tier over the window, as a
    fraction of capacity. Zero when the counters carry no occupancy.
    """
    if c.total_requests <= 0 or c.capacity_bytes <= 0:
        return 0.0, 0.0
    scale = c.total_requests * c.capacity_bytes
    return c.image_tail_bytes / scale, c.latent_tail_bytes / scale


def marginal_rates(r: WindowRates, c: WindowCounters) -> WindowRates:
    """Tail-hit rates per unit share of capacity held by each tail.

    A tier whose tail stayed empty contributes no marginal hits. Counters
    without occupancy (``capacity_bytes == 0``) return ``r`` unchanged.

    Examples:
        >>> c = WindowCounters(100, 50, 10, 2, 1, image_tail_bytes=500,
        ...                    latent_tail_bytes=2000, capacity_bytes=100)
        >>> m = marginal_rates(rates_from_counters(c), c)
        >>> (round(m.delta_img, 6), round(m.delta_lat, 6))
        (0.4, 0.1)
    """
    if c.capacity_bytes <= 0:
        return r
    img_share, lat_share = tail_shares(c)
    return dataclasses.replace(
        r,
        delta_img=r.delta_img / img_share if img_share > 0 else 0.0,
        delta_lat=r.delta_lat / lat_share if lat_share > 0 else 0.0,
    )


def expected_latency(r: WindowRates, t_decode: float, t_fetch: float) -> float:
    """Expected per-request cost in ms.

    Examples:
        >>> round(expected_latency(WindowRates(0.337, 0.294, 0, 0), 40, 140), 2)
        27.35
    """
    return r.mr_img * (t_decode + r.mr_lat * t_fetch)


def gradient_d(r: WindowRates, t_decode: float, t_fetch: float) -> float:
    """Signed sensitivity of expected cost to alpha; negative favours images."""
    return -r.delta_img * (t_decode + t_fetch * r.mr_lat) + t_fetch * r.mr_img * r.delta_lat


def step_alpha(state: TunerState, d: float, config: TunerConfig) -> float:
    """Move alpha one step against the sign of ``d``, clamped to the bounds.

    Examples:
        >>> step_alpha(TunerState(alpha=0.5), -1.151, TunerConfig())
        0.505
        >>> step_alpha(TunerState(alpha=0.3), 0.4, TunerConfig())
        0.295
    """
    lo, hi = config.alpha_bounds
    if d < 0:
        alpha = state.alpha + config.step
    elif d > 0:
        alpha = state.alpha - config.step
    else:
        alpha = state.alpha
    return round(min(hi, max(lo, alpha)), 9)


def observe_latency(state: TunerState, kind: LatencyKind, sample_ms: float, weight: float) -> None:
    """Fold one latency sample into the EWMA for ``kind``.

    The first sample initializes the average directly.

    Raises:
        ValueError: non-positive sample
    """
    if not sample_ms > 0:
        raise ConfigError(f"latency sample must be > 0, got {sample_ms}", field="sample_ms")
    attr = "t_decode" if LatencyKind(kind) is LatencyKind.DECODE else "t_fetch"
    current = getattr(state, attr)
    value = sample_ms if current is None else (1.0 - weight) * current + weight * sample_ms
    setattr(state, attr, value)


@dataclass(frozen=True)
class WindowRecord:
    window_idx: int
    alpha: float
    rates: WindowRates
    d: float
    t_decode: float
    t_fetch: float
    requests: int
    expected_ms: float
    new_alpha: float
    tail_img: float = 0.0
    tail_lat: float = 0.0

    def as_row(self) -> dict:
        return {
            "window_idx": self.window_idx,
            "alpha": self.alpha,
            "MR_img": self.rates.mr_img,
            "MR_lat": self.rates.mr_lat,
            "delta_img": self.rates.delta_img,
            "delta_lat": self.rates.delta_lat,
            "D": self.d,
            "T_decode": self.t_decode,
            "T_fetch": self.t_fetch,
            "requests": self.requests,
            "expected_ms": self.expected_ms,
            "new_alpha": self.new_alpha,
            "tail_img": self.tail_img,
            "tail_lat": self.tail_lat,
        }


@dataclass
class AlphaTuner:
    """Owns a :class:`TunerState` and runs the per-window procedure.

    Call :meth:`observe` per decode/fetch and :meth:`end_window` with the
    counters snapshot every ``window`` requests; apply the returned
    ``new_alpha`` to the cache.
    """
    config: TunerConfig
    state: TunerState
    history: List[WindowRecord] = field(default_factory=list)

    @classmethod
    def create(cls, config: TunerConfig, alpha: float) -> "AlphaTuner":
        config.validate()
        lo, hi = config.alpha_bounds
        return cls(config=config, state=TunerState(alpha=min(hi, max(lo, alpha))))

    def observe(self, kind: LatencyKind, sample_ms: float) -> None:
        observe_latency(self.state, kind, sample_ms, self.config.ewma_weight)

    @property
    def t_decode(self) -> float:
        s = self.state.t_decode
        return self.config.prior_decode_ms if s is None else s

    @property
    def t_fetch(self) -> float:
        s = self.state.t_fetch
        return self.config.prior_fetch_ms if s is None else s

    def end_window(self, counters: WindowCounters) -> WindowRecord:
        """Close a window: compute D on marginal rates and step alpha.

        The record keeps the raw rates; ``expected_ms`` uses them too.
        """
        rates = rates_from_counters(counters)
        t_dec, t_fet = self.t_decode, self.t_fetch
        d = gradient_d(marginal_rates(rates, counters), t_dec, t_fet)
        tail_img, tail_lat = tail_shares(counters)
        new_alpha = step_alpha(self.state, d, self.config)
        record = WindowRecord(
            window_idx=len(self.history),
            alpha=self.state.alpha,
            rates=rates,
            d=d,
            t_decode=t_dec,
            t_fetch=t_fet,
            requests=counters.total_requests,
            expected_ms=expected_latency(rates, t_dec, t_fet),
            new_alpha=new_alpha,
            tail_img=tail_img,
            tail_lat=tail_lat,
        )
        self.history.append(record)
        self.state.last_d = d
        self.state.alpha = new_alpha
        logger.debug("window %d: D=%.4f alpha %.3f -> %.3f",
                     record.window_idx, d, record.alpha, new_alpha)
        return record

    def history_frame(self) -> pd.DataFrame:
        rows = [r.as_row() for r in self.history]
        return pd.DataFrame(rows, columns=RECORD_COLUMNS)
