import logging
import math

from ..core import (
    DataPoint,
    ForgettingLearner,
    LearnerConfig,
    ObservedPair,
    PredictionTriple,
    cold_start_triple,
    z_value,
)


logger = logging.getLogger(__name__)


class MeanBaseline(ForgettingLearner):
    """Predicts the running mean of every target seen so far, bounded by z·std."""

    def __init__(self, config: LearnerConfig, dims: int) -> None:
        super().__init__(config, dims)
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def predict(self, x: DataPoint) -> PredictionTriple:
        if self.count < 2:
            return cold_start_triple()
        std = math.sqrt(self._m2 / self.count)
        return PredictionTriple.symmetric(self.mean, z_value(self.config.confidence) * std)

    def _update(self, pair: ObservedPair, last: PredictionTriple) -> None:
        # Welford
        self.count += 1
        delta = pair.target - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (pair.target - self.mean)
