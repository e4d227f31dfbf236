"""Online alpha tuning from tail-hit marginal estimates."""

from .tuner import (
    TunerConfig,
    TunerState,
    WindowRates,
    WindowRecord,
    AlphaTuner,
    LatencyKind,
    rates_from_counters,
    expected_latency,
    gradient_d,
    marginal_rates,
    tail_shares,
    step_alpha,
    observe_latency,
    desk_window,
    WINDOW_COLUMNS,
    RECORD_COLUMNS,
)

__all__ = [
    "TunerConfig",
    "TunerState",
    "WindowRates",
    "WindowRecord",
    "AlphaTuner",
    "LatencyKind",
    "rates_from_counters",
    "expected_latency",   # E = MR_img * (T_decode + MR_lat * T_fetch)
    "gradient_d",         # sign drives the alpha step
    "marginal_rates",     # tail hits per share of capacity
    "tail_shares",
    "step_alpha",
    "observe_latency",
    "desk_window",
    "WINDOW_COLUMNS",
    "RECORD_COLUMNS",
]
