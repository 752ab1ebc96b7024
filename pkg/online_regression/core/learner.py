import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from timeit import default_timer as timer

from ..settings import SETTINGS
from .config import LearnerConfig
from .state import DriftDetector, advance_state
from .types import DataPoint, LearnerEvent, LearnerName, LearnerState, ObservedPair, PredictionTriple
from .window import SlidingWindow


logger = logging.getLogger(__name__)


@dataclass(slots=True)
class StepTimings:
    """What `observe` ran for one stream item, in milliseconds."""

    update_ms: float = 0.0
    tune_ms: float = 0.0
    updated: bool = False
    tuned: bool = False


def cold_start_triple() -> PredictionTriple:
    bound = SETTINGS.sentinel_bound
    return PredictionTriple(-bound, 0.0, bound)


class OnlineLearner(ABC):
    """
    Predict-then-observe contract shared by every learner.

    The caller emits `predict(x)` for an item before its target is revealed, then hands the
    observed pair and the emitted triple to `observe`.
    """

    def __init__(self, config: LearnerConfig, dims: int) -> None:
        self.config = config
        self.dims = dims

    @property
    def name(self) -> LearnerName:
        return self.config.name

    @property
    @abstractmethod
    def phase(self) -> LearnerState:
        ...

    @abstractmethod
    def predict(self, x: DataPoint) -> PredictionTriple:
        ...

    @abstractmethod
    def observe(self, pair: ObservedPair, last: PredictionTriple) -> StepTimings:
        ...

    def tune(self) -> None:
        """Refits hyperparameters on the retained data. No-op unless overridden."""


class ForgettingLearner(OnlineLearner):
    """
    Two-state learner: every prediction is followed by an update, and there is no tuning.

    Reports the Stable phase throughout, so every item counts towards stable-period metrics.
    """

    @property
    def phase(self) -> LearnerState:
        return LearnerState.Stable

    def observe(self, pair: ObservedPair, last: PredictionTriple) -> StepTimings:
        timings = StepTimings(updated=True)
        start = timer()
        self._update(pair, last)
        timings.update_ms = (timer() - start) * 1000.0
        return timings

    @abstractmethod
    def _update(self, pair: ObservedPair, last: PredictionTriple) -> None:
        ...


class WindowedLearner(OnlineLearner):
    """
    Sliding-window learner driven by the ColdStart → Tune → Stable ⇄ HighError lifecycle.

    Subclasses implement `_absorb` (push a pair into the window and maintain their model
    incrementally), `_tune` and `_predict`. Frozen learners (batch controls) stop after the
    first tune: no drift detection and no further updates.
    """

    def __init__(self, config: LearnerConfig, dims: int) -> None:
        super().__init__(config, dims)
        capacity = config.capacity
        assert capacity is not None, f"{config.kind.value} needs a window or training size"
        self.window = SlidingWindow(capacity, dims)
        self.detector = DriftDetector(
            k=config.drift_k, m=config.drift_m, min_samples=config.drift_min_samples, floor=SETTINGS.drift_abs_floor
        )
        self.frozen = config.frozen_after_training
        self._state = LearnerState.ColdStart
        self._recycled = 0

    @property
    def phase(self) -> LearnerState:
        return self._state

    def predict(self, x: DataPoint) -> PredictionTriple:
        if len(self.window) < 2:
            return cold_start_triple()
        return self._predict(x).clamped()

    def observe(self, pair: ObservedPair, last: PredictionTriple) -> StepTimings:
        timings = StepTimings()
        if self._state is LearnerState.ColdStart:
            self._timed_absorb(pair, timings)
            if self.window.full:
                self._advance(LearnerEvent.WindowFull)
                self._timed_tune(timings)
        elif self._state is LearnerState.Stable:
            if self.frozen:
                return timings
            if self.detector.observe(abs(pair.target - last.point)):
                self._advance(LearnerEvent.DriftDetected)
                self._recycled = 0
                self._recycle(pair, timings)
        elif self._state is LearnerState.HighError:
            self._recycle(pair, timings)
        return timings

    def tune(self) -> None:
        self._tune()
        self.detector.reset()

    def _recycle(self, pair: ObservedPair, timings: StepTimings) -> None:
        self._timed_absorb(pair, timings)
        self._recycled += 1
        if self._recycled >= self.window.capacity:
            self._advance(LearnerEvent.WindowRecycled)
            self._timed_tune(timings)

    def _timed_absorb(self, pair: ObservedPair, timings: StepTimings) -> None:
        start = timer()
        self._absorb(pair)
        timings.update_ms += (timer() - start) * 1000.0
        timings.updated = True

    def _timed_tune(self, timings: StepTimings) -> None:
        assert self._state is LearnerState.Tune
        start = timer()
        self.tune()
        timings.tune_ms += (timer() - start) * 1000.0
        timings.tuned = True
        self._advance(LearnerEvent.TuneDone)

    def _advance(self, event: LearnerEvent) -> None:
        previous = self._state
        self._state = advance_state(previous, event)
        logger.debug(f"{self.name}: {previous.name} --{event.name}--> {self._state.name}")

    @abstractmethod
    def _absorb(self, pair: ObservedPair) -> None:
        ...

    @abstractmethod
    def _tune(self) -> None:
        ...

    @abstractmethod
    def _predict(self, x: DataPoint) -> PredictionTriple:
        ...
