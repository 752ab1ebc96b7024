import logging

from ..core import LearnerConfig, LearnerKind, OnlineLearner, decode_learner
from .baseline import MeanBaseline
from .gp import GaussianProcessLearner
from .kreg import KernelRegressionLearner
from .parametric import ParametricForgettingLearner, ParametricWindowedLearner


logger = logging.getLogger(__name__)


def build_learner(config: LearnerConfig | str, dims: int) -> OnlineLearner:
    """Instantiates the learner a config (or codename) describes for a d-dimensional stream."""
    if isinstance(config, str):
        config = decode_learner(config)
    kind = config.kind
    if kind is LearnerKind.MeanBaseline:
        return MeanBaseline(config, dims)
    if kind is LearnerKind.GPRegression:
        return GaussianProcessLearner(config, dims)
    if kind is LearnerKind.KernelRegression:
        return KernelRegressionLearner(config, dims)
    if config.forgetting_factor is not None:
        return ParametricForgettingLearner(config, dims)
    return ParametricWindowedLearner(config, dims)
