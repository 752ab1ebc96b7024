import logging
import re
from enum import Enum
from typing import Any, Dict, List

from pydantic import BaseModel, Field, root_validator, validator

from ..errors import UnknownLearner
from ..settings import SETTINGS
from .types import LearnerName


logger = logging.getLogger(__name__)

WINDOW_SIZES = (32, 48, 64, 96, 128)
FORGETTING_FACTORS = (0.0, 0.05, 0.1)
BATCH_SIZES = (32, 64, 128)


class LearnerKind(Enum):
    BayesianMLE = "BayesianMLE"
    BayesianMAP = "BayesianMAP"
    GPRegression = "GPRegression"
    KernelRegression = "KernelRegression"
    MeanBaseline = "MeanBaseline"


class MeanKind(Enum):
    Zero = "ZeroMean"
    Average = "AvgMean"
    OLS = "OLSMean"


MeanKind.Zero.__doc__ = "Prior mean 0"
MeanKind.Average.__doc__ = "Prior mean is the average of every target observed so far"
MeanKind.OLS.__doc__ = "Prior mean is an embedded windowed least-squares fit"


class LearnerConfig(BaseModel):
    """
    Everything needed to build one learner.

    Exactly one of `window_size` (sliding-window learners), `forgetting_factor` (recursive
    learners) or `training_size` (frozen batch controls) is set, except for the mean baseline.
    """

    kind: LearnerKind
    window_size: int | None = Field(None, ge=2)
    forgetting_factor: float | None = Field(None, ge=0.0, lt=1.0)
    training_size: int | None = Field(None, ge=2)
    feature_mapping: bool = False
    mean_kind: MeanKind | None = None
    high_conf: bool = False
    confidence: float = Field(SETTINGS.confidence, gt=0.0, lt=1.0)
    drift_k: float = Field(SETTINGS.drift_k, gt=0.0)
    drift_m: int = Field(SETTINGS.drift_m, ge=1)
    drift_min_samples: int = Field(SETTINGS.drift_min_samples, ge=1)
    burn_in: int = Field(SETTINGS.ensemble_burn_in, ge=0)
    seed: int = SETTINGS.gp_seed

    class Config:
        frozen = True

    @validator("mean_kind", always=True)
    def gp_needs_mean(cls, v: MeanKind | None, values: Dict[str, Any]) -> MeanKind | None:
        kind = values.get("kind")
        if kind is LearnerKind.GPRegression:
            return v or MeanKind.Zero
        if v is not None:
            raise ValueError("mean_kind only applies to GPRegression")
        return v

    @root_validator(skip_on_failure=True)
    def one_memory_mode(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        kind = values["kind"]
        memory_fields = ("window_size", "forgetting_factor", "training_size")
        modes = [name for name in memory_fields if values.get(name) is not None]
        if kind is LearnerKind.MeanBaseline:
            if modes:
                raise ValueError("MeanBaseline takes no window, forgetting factor or training size")
            return values
        if len(modes) != 1:
            raise ValueError(f"Exactly one of window_size/forgetting_factor/training_size required, got {modes}")
        if modes[0] == "forgetting_factor" and kind not in (LearnerKind.BayesianMLE, LearnerKind.BayesianMAP):
            raise ValueError(f"{kind.value} has no forgetting flavor")
        if values.get("feature_mapping") and kind not in (LearnerKind.BayesianMLE, LearnerKind.BayesianMAP):
            raise ValueError("feature_mapping only applies to BayesianMLE/BayesianMAP")
        if values.get("high_conf") and kind is not LearnerKind.KernelRegression:
            raise ValueError("high_conf only applies to KernelRegression")
        return values

    @property
    def frozen_after_training(self) -> bool:
        return self.training_size is not None

    @property
    def capacity(self) -> int | None:
        return self.window_size if self.window_size is not None else self.training_size

    @property
    def name(self) -> LearnerName:
        return encode_learner(self)

    @property
    def family(self) -> str:
        return self.kind.value


_PARAMETRIC = re.compile(
    r"^Bayesian(?P<est>MLE|MAP)(?P<mode>Forgetting|Windowed|Batch)(?P<mapped>Mapped)?"
    r"_(?P<tag>FF|WS|TS)(?P<val>\d+(\.\d+)?)$"
)
_GP = re.compile(
    r"^GPRegression(?:GaussianKernel)?(?P<batch>Batch)?(?P<mean>ZeroMean|AvgMean|OLSMean)?"
    r"_(?P<tag>WS|TS)(?P<val>\d+)$"
)
_KREG = re.compile(r"^KernelRegression(?P<batch>Batch)?(?P<hc>_HighConf)?_(?P<tag>WS|TS)(?P<val>\d+)$")
_MODE_TAGS = {"Forgetting": "FF", "Windowed": "WS", "Batch": "TS"}


def encode_learner(config: LearnerConfig) -> LearnerName:
    kind = config.kind
    if kind is LearnerKind.MeanBaseline:
        return LearnerName("MeanBaseline")

    if config.training_size is not None:
        suffix = f"_TS{config.training_size}"
    elif config.window_size is not None:
        suffix = f"_WS{config.window_size}"
    else:
        suffix = f"_FF{config.forgetting_factor!r}"

    if kind in (LearnerKind.BayesianMLE, LearnerKind.BayesianMAP):
        mode = next(m for m, tag in _MODE_TAGS.items() if suffix.startswith(f"_{tag}"))
        mapped = "Mapped" if config.feature_mapping else ""
        return LearnerName(f"{kind.value}{mode}{mapped}{suffix}")

    if kind is LearnerKind.GPRegression:
        assert config.mean_kind is not None
        if config.training_size is not None:
            mean = "" if config.mean_kind is MeanKind.Zero else config.mean_kind.value
            return LearnerName(f"GPRegressionBatch{mean}{suffix}")
        return LearnerName(f"GPRegression{config.mean_kind.value}{suffix}")

    batch = "Batch" if config.training_size is not None else ""
    high_conf = "_HighConf" if config.high_conf else ""
    return LearnerName(f"KernelRegression{batch}{high_conf}{suffix}")


def decode_learner(name: str, **overrides: Any) -> LearnerConfig:
    """Parses a learner codename. Keyword overrides (e.g. `seed`) are applied on top."""
    fields: Dict[str, Any]
    if name == "MeanBaseline":
        fields = {"kind": LearnerKind.MeanBaseline}
    elif match := _PARAMETRIC.match(name):
        if _MODE_TAGS[match["mode"]] != match["tag"]:
            raise UnknownLearner(f"{name}: {match['mode']} learners take _{_MODE_TAGS[match['mode']]}")
        fields = {"kind": LearnerKind("Bayesian" + match["est"]), "feature_mapping": bool(match["mapped"])}
        size = float(match["val"]) if match["tag"] == "FF" else _int(name, match["val"])
        fields[_memory_field(match["tag"])] = size
    elif match := _GP.match(name):
        batch = bool(match["batch"])
        if batch != (match["tag"] == "TS") or (not batch and match["mean"] is None):
            raise UnknownLearner(f"{name}: malformed GPRegression codename")
        fields = {"kind": LearnerKind.GPRegression, "mean_kind": MeanKind(match["mean"] or "ZeroMean")}
        fields[_memory_field(match["tag"])] = _int(name, match["val"])
    elif match := _KREG.match(name):
        if bool(match["batch"]) != (match["tag"] == "TS"):
            raise UnknownLearner(f"{name}: malformed KernelRegression codename")
        fields = {"kind": LearnerKind.KernelRegression, "high_conf": bool(match["hc"])}
        fields[_memory_field(match["tag"])] = _int(name, match["val"])
    else:
        raise UnknownLearner(f"Unknown learner codename {name!r}")

    try:
        return LearnerConfig(**{**fields, **overrides})
    except ValueError as e:
        raise UnknownLearner(f"{name}: {e}") from e


def _memory_field(tag: str) -> str:
    return {"FF": "forgetting_factor", "WS": "window_size", "TS": "training_size"}[tag]


def _int(name: str, text: str) -> int:
    if not text.isdigit():
        raise UnknownLearner(f"{name}: expected an integer size, got {text}")
    return int(text)


def learner_names(online: bool = True, batch: bool = True) -> List[LearnerName]:
    """The benchmark roster: 52 online variants followed by the 12 batch controls."""
    names: List[LearnerName] = []
    if online:
        for est in ("MLE", "MAP"):
            for mapped in ("", "Mapped"):
                names += [LearnerName(f"Bayesian{est}Forgetting{mapped}_FF{ff!r}") for ff in FORGETTING_FACTORS]
                names += [LearnerName(f"Bayesian{est}Windowed{mapped}_WS{ws}") for ws in WINDOW_SIZES]
        for mean in MeanKind:
            names += [LearnerName(f"GPRegression{mean.value}_WS{ws}") for ws in WINDOW_SIZES]
        names += [LearnerName(f"KernelRegression_WS{ws}") for ws in WINDOW_SIZES]
    if batch:
        for mapped in ("", "Mapped"):
            names += [LearnerName(f"BayesianMLEBatch{mapped}_TS{ts}") for ts in BATCH_SIZES]
        names += [LearnerName(f"GPRegressionBatch_TS{ts}") for ts in BATCH_SIZES]
        names += [LearnerName(f"KernelRegressionBatch_TS{ts}") for ts in BATCH_SIZES]
    return names


def shortlist() -> List[LearnerName]:
    """Best-performing online variants, used for the full-suite matrix."""
    return [
        LearnerName("GPRegressionZeroMean_WS64"),
        LearnerName("GPRegressionAvgMean_WS64"),
        LearnerName("KernelRegression_HighConf_WS64"),
        LearnerName("KernelRegression_HighConf_WS96"),
        LearnerName("GPRegressionOLSMean_WS64"),
    ]
