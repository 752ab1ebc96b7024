from ..trace import trace
from .bounds import z_value
from .config import (
    BATCH_SIZES,
    FORGETTING_FACTORS,
    WINDOW_SIZES,
    LearnerConfig,
    LearnerKind,
    MeanKind,
    decode_learner,
    encode_learner,
    learner_names,
    shortlist,
)
from .learner import ForgettingLearner, OnlineLearner, StepTimings, WindowedLearner, cold_start_triple
from .state import DriftDetector, advance_state
from .types import (
    DataPoint,
    DatasetName,
    LearnerEvent,
    LearnerName,
    LearnerState,
    ObservedPair,
    PredictionTriple,
    as_point,
)
from .window import SlidingWindow
