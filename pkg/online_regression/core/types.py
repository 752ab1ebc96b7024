import logging
from enum import Enum
from typing import NamedTuple, NewType

import numpy as np

from ..errors import DomainError
from ..numkit import Vector


logger = logging.getLogger(__name__)

DataPoint = Vector  # d finite features, e.g. operator input sizes
LearnerName = NewType("LearnerName", str)  # codename, e.g. BayesianMAPWindowedMapped_WS64
DatasetName = NewType("DatasetName", str)  # e.g. SYNTH_D_CD_2000_1_50_1_13


class ObservedPair(NamedTuple):
    point: DataPoint
    target: float


class PredictionTriple(NamedTuple):
    lower: float
    point: float
    upper: float

    @classmethod
    def symmetric(cls, point: float, half_width: float) -> "PredictionTriple":
        return cls(point - half_width, point, point + half_width)

    def clamped(self) -> "PredictionTriple":
        """Restores lower ≤ point ≤ upper by collapsing the offending bound onto the point."""
        return PredictionTriple(min(self.lower, self.point), self.point, max(self.upper, self.point))

    def contains(self, target: float) -> bool:
        return self.lower <= target <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


class LearnerState(Enum):
    ColdStart = "cold_start"
    Stable = "stable"
    HighError = "high_error"
    Tune = "tune"


LearnerState.ColdStart.__doc__ = "Window is filling; every item is absorbed"
LearnerState.Stable.__doc__ = "Predictions are accurate; updates are skipped"
LearnerState.HighError.__doc__ = "Drift detected; window is being recycled with fresh items"
LearnerState.Tune.__doc__ = "Hyperparameters are being refit on the current window"


class LearnerEvent(Enum):
    WindowFull = "window_full"
    TuneDone = "tune_done"
    DriftDetected = "drift_detected"
    WindowRecycled = "window_recycled"


def as_point(features: object) -> DataPoint:
    point = np.asarray(features, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(point)):
        raise DomainError(f"data points must be finite, got {point.tolist()}")
    return point
