"""Median-window change alerts and Delay / false-alarm-rate evaluation.

Time indices are 1-based throughout, matching the stream timestamps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import InvalidInputError

DELAY_CAP = 50


class AlertMode(enum.Enum):
    MC_SEQUENCE = "mc"
    K_SEQUENCE = "k"


@dataclass(frozen=True)
class AlertConfig:
    window: int = 5
    mc_threshold: float = 0.01
    min_gap: int = 5
    start_t: int = 10
    mode: AlertMode = AlertMode.MC_SEQUENCE

    def __post_init__(self):
        if self.window < 1:
            raise InvalidInputError("window must be >= 1")
        if not self.mc_threshold > 0:
            raise InvalidInputError("mc_threshold must be > 0")
        if self.min_gap < 1:
            raise InvalidInputError("min_gap must be >= 1")
        if self.start_t < 2 * self.window:
            raise InvalidInputError("start_t must be >= 2 * window")


def detect_changes(sequence: Sequence[float], config: AlertConfig = AlertConfig()) -> List[int]:
    """Scan t = start_t..T and return the (1-based) times that raise an alert.

    At time t the medians of y[t-2w+1 .. t-w] and y[t-w+1 .. t] are compared;
    an alert closer than ``min_gap`` to the previous alert is dropped.
    """
    y = np.asarray(sequence, dtype=float)
    if y.ndim != 1 or y.shape[0] < config.start_t:
        raise InvalidInputError(
            f"sequence of length {y.shape[0]} is shorter than start_t={config.start_t}"
        )
    w = config.window
    alerts = []
    for t in range(config.start_t, y.shape[0] + 1):
        before = np.median(y[t - 2 * w : t - w])
        after = np.median(y[t - w : t])
        if config.mode is AlertMode.MC_SEQUENCE:
            fire = abs(before - after) > config.mc_threshold
        else:
            fire = before != after
        if fire and (not alerts or t - alerts[-1] >= config.min_gap):
            alerts.append(t)
    return alerts


@dataclass(frozen=True)
class EvalResult:
    delay: int
    far: float
    alerts: Tuple[int, ...]
    first_alert: int = None


def accept_interval(transaction=(51, 100), window: int = 5) -> Tuple[int, int]:
    """Times whose two comparison windows touch the transaction period."""
    return transaction[0], transaction[1] + 2 * window - 1


def evaluate(
    alerts: Iterable[int],
    transaction: Tuple[int, int] = (51, 100),
    horizon: Tuple[int, int] = (10, 150),
    window: int = 5,
) -> EvalResult:
    t_begin, t_end = transaction
    t_min, t_max = horizon
    if not (t_begin <= t_end and t_min <= t_max):
        raise InvalidInputError("intervals must satisfy begin <= end")
    alerts = tuple(sorted(set(int(a) for a in alerts)))
    if any(a < t_min or a > t_max for a in alerts):
        raise InvalidInputError(f"alerts must lie within the horizon [{t_min}, {t_max}]")
    acc_lo, acc_hi = accept_interval(transaction, window)

    in_transaction = [a for a in alerts if t_begin <= a <= t_end]
    first = in_transaction[0] if in_transaction else None
    delay = DELAY_CAP if first is None else min(first - t_begin, DELAY_CAP)

    outside = [t for t in range(t_min, t_max + 1) if not acc_lo <= t <= acc_hi]
    false_alerts = sum(1 for a in alerts if not acc_lo <= a <= acc_hi)
    far = false_alerts / len(outside) if outside else 0.0
    return EvalResult(delay=delay, far=far, alerts=alerts, first_alert=first)
