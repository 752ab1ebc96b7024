"""
Prequential (test-then-train) evaluation and the session metric suite.

Accuracy: rmse, rmse_st, smse, smse_st (the _st variants only count items predicted while the
learner was Stable). Bounds: icr, aiw, saiw. Time (ms): apt/hpt/tpt for predictions, aut/hut/tut
for updates, att/htt/ttt for tuning, tt, atpi and drmax (items per ms).

Degenerate denominators yield None instead of raising, so aggregation can skip them.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Dict, List

import numpy as np

from pydantic import BaseModel

from .core import LearnerState, PredictionTriple, StepTimings
from .numkit import Vector
from .settings import SETTINGS


logger = logging.getLogger(__name__)


class PrequentialMode(Enum):
    Plain = "plain"
    Fading = "fading"
    Window = "window"


class PrequentialAccumulator:
    """Accumulated loss S and item count N; the prequential error is S/N."""

    def __init__(self, mode: PrequentialMode = PrequentialMode.Plain, delta: float = 1.0, size: int = 0) -> None:
        if mode is PrequentialMode.Fading:
            assert 0.0 < delta <= 1.0, "fading factor must be in (0, 1]"
        if mode is PrequentialMode.Window:
            assert size > 0, "error window needs a positive size"
        self.mode = mode
        self.delta = delta
        self.s = 0.0
        self.n: float = 0
        self._buffer: Deque[float] = deque(maxlen=size or None)

    @classmethod
    def fading(cls, delta: float = SETTINGS.eval_fading) -> "PrequentialAccumulator":
        return cls(PrequentialMode.Fading, delta=delta)

    @classmethod
    def windowed(cls, size: int = SETTINGS.eval_window) -> "PrequentialAccumulator":
        return cls(PrequentialMode.Window, size=size)

    def observe(self, loss: float) -> "PrequentialAccumulator":
        assert loss >= 0.0, "losses are non-negative"
        if self.mode is PrequentialMode.Plain:
            self.s = self.s + loss
            self.n += 1
        elif self.mode is PrequentialMode.Fading:
            self.s = loss + self.delta * self.s
            self.n = 1 + self.delta * self.n
        else:
            self._buffer.append(loss)
            self.s = math.fsum(self._buffer)
            self.n = len(self._buffer)
        return self

    @property
    def mean(self) -> float | None:
        return self.s / self.n if self.n > 0 else None


def chernoff_halfwidth(mu_hat: float, n: int, delta_conf: float) -> float:
    """ε = sqrt(3·ln(2/δ)·μ̂/n): with probability 1−δ the true mean loss is within ε of μ̂."""
    assert n > 0 and 0.0 < delta_conf < 1.0
    return math.sqrt(3.0 * math.log(2.0 / delta_conf) * mu_hat / n)


def fading_delta_for(epsilon: float, horizon: int) -> float:
    """Fading factor whose weight decays to `epsilon` after `horizon` items."""
    return math.exp(math.log(epsilon) / horizon)


@dataclass
class SessionRecords:
    """Per-item log of one simulated session."""

    targets: List[float] = field(default_factory=list)
    lower: List[float] = field(default_factory=list)
    point: List[float] = field(default_factory=list)
    upper: List[float] = field(default_factory=list)
    phases: List[LearnerState] = field(default_factory=list)
    predict_ms: List[float] = field(default_factory=list)
    update_ms: List[float] = field(default_factory=list)
    tune_ms: List[float] = field(default_factory=list)
    updated: List[bool] = field(default_factory=list)
    tuned: List[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.targets)

    def record(
        self, target: float, triple: PredictionTriple, phase: LearnerState, predict_ms: float, step: StepTimings
    ) -> None:
        self.targets.append(target)
        self.lower.append(triple.lower)
        self.point.append(triple.point)
        self.upper.append(triple.upper)
        self.phases.append(phase)
        self.predict_ms.append(predict_ms)
        self.update_ms.append(step.update_ms)
        self.tune_ms.append(step.tune_ms)
        self.updated.append(step.updated)
        self.tuned.append(step.tuned)

    @property
    def stable_mask(self) -> np.ndarray:
        return np.array([phase is LearnerState.Stable for phase in self.phases], dtype=bool)

    def squared_errors(self) -> Vector:
        return (np.asarray(self.targets) - np.asarray(self.point)) ** 2


class SessionMetrics(BaseModel):
    rmse: float | None = None
    rmse_st: float | None = None
    smse: float | None = None
    smse_st: float | None = None
    icr: float | None = None
    aiw: float | None = None
    saiw: float | None = None
    apt: float = 0.0
    hpt: float = 0.0
    tpt: float = 0.0
    aut: float = 0.0
    hut: float = 0.0
    tut: float = 0.0
    att: float = 0.0
    htt: float = 0.0
    ttt: float = 0.0
    tt: float = 0.0
    atpi: float = 0.0
    drmax: float | None = None
    chernoff_eps: float | None = None
    item_count: int = 0
    stable_count: int = 0


def _ratio(numerator: float, denominator: float) -> float | None:
    return numerator / denominator if denominator != 0.0 else None


def compute_error_metrics(records: SessionRecords) -> Dict[str, float | None]:
    assert len(records) >= 2, "error metrics need at least two items"
    targets = np.asarray(records.targets)
    squared = records.squared_errors()
    variance = float(np.var(targets))
    mse = float(np.mean(squared))

    stable = records.stable_mask
    mse_st = float(np.mean(squared[stable])) if stable.any() else None
    return {
        "rmse": math.sqrt(mse),
        "rmse_st": math.sqrt(mse_st) if mse_st is not None else None,
        "smse": _ratio(mse, variance),
        "smse_st": _ratio(mse_st, variance) if mse_st is not None else None,
    }


def compute_bound_metrics(
    records: SessionRecords, sentinel: float = SETTINGS.sentinel_bound
) -> Dict[str, float | None]:
    """
    Interval coverage over every item; AIW/SAIW over the items whose bounds are not the sentinel.

    Items predicted with sentinel bounds (cold start, empty windows) only count towards AIW when
    no item has real bounds, in which case AIW is sentinel-large.
    """
    assert len(records) >= 1, "bound metrics need at least one item"
    targets = np.asarray(records.targets)
    lower, upper = np.asarray(records.lower), np.asarray(records.upper)
    bounded = (lower > -sentinel) & (upper < sentinel)
    if not bounded.any():
        bounded = np.ones_like(bounded)
    aiw = float(np.mean(upper[bounded] - lower[bounded]))
    return {
        "icr": float(np.mean((lower <= targets) & (targets <= upper))),
        "aiw": aiw,
        "saiw": _ratio(aiw, float(np.mean(targets[bounded]))),
    }


def _operation_stats(durations: Vector) -> tuple[float, float, float]:
    """(average, highest, total) over the operations that actually ran."""
    if durations.size == 0:
        return 0.0, 0.0, 0.0
    return float(np.mean(durations)), float(np.max(durations)), float(np.sum(durations))


def compute_time_metrics(records: SessionRecords) -> Dict[str, float | None]:
    item_count = len(records)
    assert item_count > 0
    updated, tuned = np.asarray(records.updated, dtype=bool), np.asarray(records.tuned, dtype=bool)
    apt, hpt, tpt = _operation_stats(np.asarray(records.predict_ms))
    aut, hut, tut = _operation_stats(np.asarray(records.update_ms)[updated])
    att, htt, ttt = _operation_stats(np.asarray(records.tune_ms)[tuned])
    tt = tpt + tut + ttt
    atpi = tt / item_count
    return {
        **dict(apt=apt, hpt=hpt, tpt=tpt, aut=aut, hut=hut, tut=tut, att=att, htt=htt, ttt=ttt),
        "tt": tt,
        "atpi": atpi,
        "drmax": 1.0 / atpi if atpi > 0.0 else None,
    }


def compute_session_metrics(
    records: SessionRecords, chernoff_delta: float = SETTINGS.chernoff_delta
) -> SessionMetrics:
    metrics: Dict[str, float | None] = {}
    if len(records) >= 2:
        metrics |= compute_error_metrics(records)
    metrics |= compute_bound_metrics(records)
    metrics |= compute_time_metrics(records)

    plain = PrequentialAccumulator()
    for loss in records.squared_errors():
        plain.observe(float(loss))
    if plain.mean is not None and math.isfinite(plain.mean):
        metrics["chernoff_eps"] = chernoff_halfwidth(plain.mean, len(records), chernoff_delta)
    return SessionMetrics(**metrics, item_count=len(records), stable_count=int(records.stable_mask.sum()))


def windowed_trace(losses: Vector, size: int = SETTINGS.eval_window) -> Vector:
    """Per-item RMSE over a sliding window of the last `size` squared errors."""
    acc = PrequentialAccumulator.windowed(size)
    trace = np.empty(losses.shape[0])
    for i, loss in enumerate(losses):
        mean = acc.observe(float(loss)).mean
        trace[i] = math.sqrt(mean) if mean is not None else math.nan
    return trace


def fading_trace(losses: Vector, delta: float = SETTINGS.eval_fading) -> Vector:
    """Per-item RMSE under the fading-factor prequential estimate."""
    acc = PrequentialAccumulator.fading(delta)
    trace = np.empty(losses.shape[0])
    for i, loss in enumerate(losses):
        mean = acc.observe(float(loss)).mean
        trace[i] = math.sqrt(mean) if mean is not None else math.nan
    return trace
