import logging
import math
from typing import Mapping, Tuple

from ..errors import IllegalTransition
from .types import LearnerEvent, LearnerState


logger = logging.getLogger(__name__)

TRANSITIONS: Mapping[Tuple[LearnerState, LearnerEvent], LearnerState] = {
    (LearnerState.ColdStart, LearnerEvent.WindowFull): LearnerState.Tune,
    (LearnerState.Tune, LearnerEvent.TuneDone): LearnerState.Stable,
    (LearnerState.Stable, LearnerEvent.DriftDetected): LearnerState.HighError,
    (LearnerState.HighError, LearnerEvent.WindowRecycled): LearnerState.Tune,
}


def advance_state(state: LearnerState, event: LearnerEvent) -> LearnerState:
    try:
        return TRANSITIONS[(state, event)]
    except KeyError:
        raise IllegalTransition(f"No transition from {state.name} on {event.name}") from None


class DriftDetector:
    """
    Streak rule over stable-phase absolute errors.

    Fires when `m` consecutive errors each exceed max(k·RMSE, floor), RMSE being taken over
    the non-exceeding errors seen since the last `reset`. Stays silent until `min_samples`
    baseline errors were collected.
    """

    __slots__ = ("k", "m", "min_samples", "floor", "_sum_sq", "_count", "_streak")

    def __init__(self, k: float = 3.0, m: int = 5, min_samples: int = 10, floor: float = 0.0) -> None:
        self.k = k
        self.m = m
        self.min_samples = min_samples
        self.floor = floor
        self.reset()

    def reset(self) -> None:
        self._sum_sq = 0.0
        self._count = 0
        self._streak = 0

    @property
    def armed(self) -> bool:
        return self._count >= self.min_samples

    @property
    def baseline_rmse(self) -> float:
        return math.sqrt(self._sum_sq / self._count) if self._count else 0.0

    @property
    def threshold(self) -> float:
        return max(self.k * self.baseline_rmse, self.floor)

    def observe(self, abs_error: float) -> bool:
        if self.armed and abs_error > self.threshold:
            self._streak += 1
            if self._streak >= self.m:
                logger.debug(f"Drift fired: {self._streak} errors above {self.threshold:.4g}")
                self._streak = 0
                return True
            return False

        self._streak = 0
        self._sum_sq += abs_error * abs_error
        self._count += 1
        return False
