"""Sequential dynamic model selection over a stream of windows, and MC tracking."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .em import Criterion, FitConfig, FittedModel, PARAM_COUNTS, em_fit
from .errors import (
    FitFailureError,
    InsufficientDataError,
    InvalidInputError,
    NumericalDomainError,
    StepFailureError,
)
from .mixture import DataLike, as_dataset, mc

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SdmsConfig:
    k_max: int = 10
    beta: float = 0.01
    criterion: Criterion = Criterion.BIC_OBSERVED
    fit: FitConfig = field(default_factory=FitConfig)
    param_count: str = "standard"

    def __post_init__(self):
        if self.k_max < 1:
            raise InvalidInputError("k_max must be >= 1")
        if not 0 < self.beta < 1:
            raise InvalidInputError("beta must lie in (0, 1)")
        if self.param_count not in PARAM_COUNTS:
            raise InvalidInputError(f"param_count must be one of {PARAM_COUNTS}")


def change_code_length(k_t: int, k_prev: Optional[int], config: SdmsConfig) -> float:
    """-log p(K_t | K_{t-1}); uniform over 1..k_max at the first step."""
    if not 1 <= k_t <= config.k_max:
        raise InvalidInputError(f"k_t={k_t} outside [1, {config.k_max}]")
    if k_prev is None:
        return math.log(config.k_max)
    if not 1 <= k_prev <= config.k_max:
        raise InvalidInputError(f"k_prev={k_prev} outside [1, {config.k_max}]")
    beta = config.beta
    if k_t != k_prev:
        return -math.log(beta / 2)
    if k_prev in (1, config.k_max):
        return -math.log(1 - beta / 2)
    return -math.log(1 - beta)


def candidate_set(k_prev: Optional[int], k_max: int) -> List[int]:
    if k_prev is None:
        return list(range(1, k_max + 1))
    return [k for k in (k_prev - 1, k_prev, k_prev + 1) if 1 <= k <= k_max]


@dataclass(frozen=True, eq=False)
class StepResult:
    selected_k: int
    fitted: FittedModel
    total_cost: float
    change_cost: float


def sdms_step(
    data_t: DataLike,
    k_prev: Optional[int],
    config: SdmsConfig = SdmsConfig(),
    t: int = 1,
) -> StepResult:
    """Fit every candidate K and keep the one with the smallest total code length.

    ``t`` only selects the random substream used by the EM restarts.
    """
    data_t = as_dataset(data_t)
    best = None
    for k in candidate_set(k_prev, config.k_max):
        try:
            fitted = em_fit(
                data_t,
                k,
                config.fit,
                criterion=config.criterion,
                param_count=config.param_count,
                stream_key=(t,),
            )
        except (FitFailureError, InsufficientDataError) as exc:
            log.debug("t=%d: candidate k=%d failed: %s", t, k, exc)
            continue
        change = change_code_length(k, k_prev, config)
        total = fitted.criterion_score + change
        # strict comparison keeps the smaller K on ties
        if best is None or total < best.total_cost:
            best = StepResult(k, fitted, total, change)
    if best is None:
        raise StepFailureError(f"no candidate mixture size could be fitted at t={t}", t=t)
    return best


@dataclass(frozen=True, eq=False)
class TrackResult:
    """Per-window trajectory of selected K, fitted model, MC and cost."""

    selected_k: List[int]
    fitted: List[FittedModel]
    mc: List[float]
    total_cost: List[float]
    change_cost: List[float]
    flagged: List[bool]

    def __len__(self):
        return len(self.selected_k)

    @property
    def exp_mc(self) -> np.ndarray:
        return np.exp(np.asarray(self.mc))


def track_mc(stream: Sequence[DataLike], config: SdmsConfig = SdmsConfig()) -> TrackResult:
    """Run SDMS window by window and record the MC of every selected model.

    A window on which no candidate can be fitted keeps the previous model
    and is flagged; a failure on the very first window is raised.
    """
    if len(stream) == 0:
        raise InvalidInputError("stream is empty")
    ks, fits, mcs, costs, changes, flags = [], [], [], [], [], []
    k_prev = None
    for t, window in enumerate(stream, start=1):
        window = as_dataset(window)
        try:
            step = sdms_step(window, k_prev, config, t=t)
        except StepFailureError as exc:
            if k_prev is None:
                raise StepFailureError(str(exc), t=t) from exc
            log.warning("t=%d: all fits failed, carrying the previous model forward", t)
            ks.append(k_prev)
            fits.append(fits[-1])
            try:
                mcs.append(mc(fits[-1].model, window))
            except NumericalDomainError:
                mcs.append(float("nan"))
            costs.append(float("nan"))
            changes.append(float("nan"))
            flags.append(True)
            continue
        try:
            value = mc(step.fitted.model, window)
        except NumericalDomainError as exc:
            raise NumericalDomainError(f"t={t}: {exc}", index=exc.index) from exc
        ks.append(step.selected_k)
        fits.append(step.fitted)
        mcs.append(value)
        costs.append(step.total_cost)
        changes.append(step.change_cost)
        flags.append(False)
        k_prev = step.selected_k
    return TrackResult(ks, fits, mcs, costs, changes, flags)
