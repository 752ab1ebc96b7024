import pytest

from online_regression.core import (
    LearnerConfig,
    LearnerKind,
    MeanKind,
    decode_learner,
    encode_learner,
    learner_names,
    shortlist,
)
from online_regression.errors import UnknownLearner
from online_regression.learners import build_learner
from online_regression.learners.baseline import MeanBaseline
from online_regression.learners.gp import GaussianProcessLearner
from online_regression.learners.kreg import KernelRegressionLearner
from online_regression.learners.parametric import ParametricForgettingLearner, ParametricWindowedLearner


def test_roster_sizes() -> None:
    assert len(learner_names(batch=False)) == 52
    assert len(learner_names(online=False)) == 12
    assert len(set(learner_names())) == 64


@pytest.mark.parametrize("name", learner_names() + shortlist() + ["MeanBaseline"])
def test_codename_round_trip(name: str) -> None:
    assert encode_learner(decode_learner(name)) == name


@pytest.mark.parametrize(
    "name, fields",
    [
        (
            "BayesianMAPWindowedMapped_WS64",
            dict(kind=LearnerKind.BayesianMAP, window_size=64, feature_mapping=True),
        ),
        ("BayesianMAPForgettingMapped_FF0.05", dict(kind=LearnerKind.BayesianMAP, forgetting_factor=0.05)),
        (
            "GPRegressionGaussianKernelZeroMean_WS64",
            dict(kind=LearnerKind.GPRegression, mean_kind=MeanKind.Zero, window_size=64),
        ),
        ("GPRegressionBatch_TS32", dict(kind=LearnerKind.GPRegression, mean_kind=MeanKind.Zero, training_size=32)),
        ("KernelRegression_HighConf_WS96", dict(kind=LearnerKind.KernelRegression, high_conf=True, window_size=96)),
        ("KernelRegressionBatch_TS128", dict(kind=LearnerKind.KernelRegression, training_size=128)),
    ],
)
def test_decode_examples(name: str, fields: dict) -> None:
    config = decode_learner(name)
    for key, value in fields.items():
        assert getattr(config, key) == value


def test_long_gp_name_encodes_to_short_form() -> None:
    assert decode_learner("GPRegressionGaussianKernelOLSMean_WS48").name == "GPRegressionOLSMean_WS48"


def test_batch_controls_freeze() -> None:
    config = decode_learner("BayesianMLEBatch_TS64")
    assert config.frozen_after_training
    assert config.capacity == 64
    assert not decode_learner("BayesianMLEWindowed_WS64").frozen_after_training


def test_overrides_apply() -> None:
    config = decode_learner("GPRegressionAvgMean_WS32", seed=7)
    assert config.seed == 7
    assert config.family == "GPRegression"


@pytest.mark.parametrize(
    "name",
    [
        "",
        "Foo_WS32",
        "BayesianMLEWindowed_FF0.1",
        "BayesianMLEForgetting_WS32",
        "KernelRegression_TS64",
        "KernelRegressionBatch_WS64",
        "GPRegression_WS64",
        "GPRegressionBatchZeroMean_WS64",
        "KernelRegression_WS1",
        "BayesianMLEForgetting_FF1.0",
    ],
)
def test_unknown_codenames(name: str) -> None:
    with pytest.raises(UnknownLearner):
        decode_learner(name)


@pytest.mark.parametrize(
    "fields",
    [
        dict(kind=LearnerKind.GPRegression, forgetting_factor=0.1),
        dict(kind=LearnerKind.BayesianMLE),
        dict(kind=LearnerKind.BayesianMLE, window_size=32, forgetting_factor=0.1),
        dict(kind=LearnerKind.KernelRegression, window_size=32, feature_mapping=True),
        dict(kind=LearnerKind.BayesianMAP, window_size=32, high_conf=True),
        dict(kind=LearnerKind.BayesianMLE, window_size=32, mean_kind=MeanKind.OLS),
        dict(kind=LearnerKind.MeanBaseline, window_size=32),
        dict(kind=LearnerKind.BayesianMLE, window_size=32, confidence=1.0),
    ],
)
def test_invalid_configs(fields: dict) -> None:
    with pytest.raises(ValueError):
        LearnerConfig(**fields)


@pytest.mark.parametrize(
    "name, cls",
    [
        ("MeanBaseline", MeanBaseline),
        ("BayesianMLEForgetting_FF0.1", ParametricForgettingLearner),
        ("BayesianMAPWindowed_WS32", ParametricWindowedLearner),
        ("BayesianMLEBatchMapped_TS32", ParametricWindowedLearner),
        ("GPRegressionOLSMean_WS32", GaussianProcessLearner),
        ("KernelRegression_HighConf_WS32", KernelRegressionLearner),
    ],
)
def test_build_learner_dispatch(name: str, cls: type) -> None:
    learner = build_learner(name, dims=2)
    assert isinstance(learner, cls)
    assert learner.name == name
