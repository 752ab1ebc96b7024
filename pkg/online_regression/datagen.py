"""
Synthetic drift-stream suite: growth functions, discontinuity, concept drift and Gaussian noise.

Every dataset is fully determined by its `DatasetSpec` (including the seed). Randomness comes
from numpy's PCG64 generator, split per concern with `SeedSequence.spawn` so inputs, coefficients
and noise never share a stream.
"""
import csv
import logging
import re
from enum import Enum
from pathlib import Path
from typing import Iterable, List, NamedTuple, Tuple

import numpy as np

from pydantic import BaseModel, Field, root_validator

from .core import DatasetName, ObservedPair, trace
from .errors import DomainError, ParseError
from .numkit import Matrix, Vector


logger = logging.getLogger(__name__)

DEFAULT_SIZE = 2000
SUITE_DIMS = (1, 2, 4)
SUITE_SCALES = (10.0, 50.0, 100.0)
SUITE_NOISE = (0.0, 1.0, 3.0, 5.0)
COEFFICIENT_HIGH = 10.0


class GrowthKind(Enum):
    Linear = 1
    LogLinear = 2
    QuadV1 = 3
    QuadV2 = 4


GrowthKind.Linear.__doc__ = "xᵀb"
GrowthKind.LogLinear.__doc__ = "s·ln(s) with s = xᵀb"
GrowthKind.QuadV1.__doc__ = "Σ b_i·x_i²"
GrowthKind.QuadV2.__doc__ = "(xᵀb)²"

# Ordered (region 1, region 2) pairs; the faster growth always sits above the boundary.
DISCONTINUOUS_COMBOS: Tuple[Tuple[GrowthKind, GrowthKind], ...] = tuple(
    (GrowthKind(int(a)), GrowthKind(int(b))) for a, b in ("12", "13", "14", "23", "24")
)
# With one input the two quadratic variants have the same growth rate.
DISCONTINUOUS_COMBOS_1D = tuple(c for c in DISCONTINUOUS_COMBOS if GrowthKind.QuadV2 not in c)


def growth_eval(kind: GrowthKind, x: Vector, b: Vector) -> float:
    if kind is GrowthKind.QuadV1:
        return float(np.dot(b, x * x))
    s = float(np.dot(x, b))
    if kind is GrowthKind.Linear:
        return s
    if kind is GrowthKind.QuadV2:
        return s * s
    if s <= 0.0:
        raise DomainError(f"LogLinear growth needs xᵀb > 0, got {s}")
    return s * float(np.log(s))


class DatasetSpec(BaseModel):
    discontinuous: bool
    drifting: bool
    size: int = Field(DEFAULT_SIZE, ge=2)
    dims: int = Field(..., ge=1)
    input_scale: float = Field(..., gt=0.0)
    noise_var: float = Field(..., ge=0.0)
    growth1: GrowthKind
    growth2: GrowthKind
    seed: int = 0

    class Config:
        frozen = True

    @root_validator(skip_on_failure=True)
    def allowed_growth_pair(cls, values: dict) -> dict:
        pair = (values["growth1"], values["growth2"])
        if not values["discontinuous"]:
            if pair[0] is not pair[1]:
                raise ValueError("continuous datasets use a single growth function")
            if values["dims"] == 1 and pair[0] is GrowthKind.QuadV2:
                raise ValueError("QuadV2 duplicates QuadV1 for one input")
            return values
        allowed = DISCONTINUOUS_COMBOS_1D if values["dims"] == 1 else DISCONTINUOUS_COMBOS
        if pair not in allowed:
            raise ValueError(f"growth pair {pair[0].value}{pair[1].value} is not an allowed discontinuous combination")
        return values

    @property
    def name(self) -> DatasetName:
        return encode_name(self)

    @property
    def drift_index(self) -> int:
        return self.size // 2


class GeneratedStream(NamedTuple):
    """Inputs, targets and the generating coefficients (pre-drift, post-drift)."""

    points: Matrix
    targets: Vector
    coeffs: Tuple[Vector, Vector]

    def pairs(self) -> List[ObservedPair]:
        return [ObservedPair(point, float(target)) for point, target in zip(self.points, self.targets)]


def region_kind(spec: DatasetSpec, x: Vector) -> GrowthKind:
    """Inputs whose sum is strictly below half the summed scales belong to region 1."""
    return spec.growth1 if float(np.sum(x)) < spec.dims * spec.input_scale / 2.0 else spec.growth2


def noise_free_target(spec: DatasetSpec, x: Vector, b: Vector) -> float:
    return growth_eval(region_kind(spec, x), x, b)


@trace
def generate_stream(spec: DatasetSpec) -> GeneratedStream:
    inputs_seed, coeffs_seed, drift_seed, noise_seed = np.random.SeedSequence(spec.seed).spawn(4)
    points = np.random.default_rng(inputs_seed).uniform(size=(spec.size, spec.dims)) * spec.input_scale
    before = np.random.default_rng(coeffs_seed).uniform(0.0, COEFFICIENT_HIGH, size=spec.dims)
    after = before
    if spec.drifting:
        after = np.random.default_rng(drift_seed).uniform(0.0, COEFFICIENT_HIGH, size=spec.dims)
    noise = np.random.default_rng(noise_seed).normal(0.0, np.sqrt(spec.noise_var), size=spec.size)

    targets = np.empty(spec.size)
    for i, x in enumerate(points):
        b = after if i >= spec.drift_index else before
        targets[i] = noise_free_target(spec, x, b) + noise[i]
    return GeneratedStream(points, targets, (before, after))


def generate(spec: DatasetSpec) -> List[ObservedPair]:
    return generate_stream(spec).pairs()


def _bucket(discontinuous: bool, drifting: bool, dims: int, seeds: Iterable[int]) -> List[DatasetSpec]:
    if discontinuous:
        combos = DISCONTINUOUS_COMBOS_1D if dims == 1 else DISCONTINUOUS_COMBOS
    else:
        kinds = [k for k in GrowthKind if dims > 1 or k is not GrowthKind.QuadV2]
        combos = tuple((k, k) for k in kinds)
    seed_iter = iter(seeds)
    return [
        DatasetSpec(
            discontinuous=discontinuous,
            drifting=drifting,
            dims=dims,
            input_scale=scale,
            noise_var=noise,
            growth1=g1,
            growth2=g2,
            seed=next(seed_iter),
        )
        for g1, g2 in combos
        for scale in SUITE_SCALES
        for noise in SUITE_NOISE
    ]


def enumerate_suite(master_seed: int = 0) -> List[DatasetSpec]:
    """
    The 576-dataset benchmark suite.

    Ordered by input dimension, then ND_NCD, D_NCD, ND_CD, D_CD. The seed of the i-th dataset
    is derived from (master_seed, i), so the suite is reproducible and datasets are independent.
    """

    def seeds_from(start: int) -> Iterable[int]:
        index = start
        while True:
            yield int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])
            index += 1

    suite: List[DatasetSpec] = []
    for dims in SUITE_DIMS:
        for drifting in (False, True):
            for discontinuous in (False, True):
                suite += _bucket(discontinuous, drifting, dims, seeds_from(len(suite)))
    logger.debug(f"Enumerated {len(suite)} datasets from master seed {master_seed}")
    return suite


_NAME = re.compile(
    r"^SYNTH_(?P<d>D|ND)_(?P<cd>CD|NCD)_(?P<size>\d+)_(?P<dims>\d+)_(?P<scale>\d+(\.\d+)?)"
    r"_(?P<noise>\d+(\.\d+)?)_(?P<g1>[1-4])(?P<g2>[1-4])$"
)


def _number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def encode_name(spec: DatasetSpec) -> DatasetName:
    return DatasetName(
        f"SYNTH_{'D' if spec.discontinuous else 'ND'}_{'CD' if spec.drifting else 'NCD'}_{spec.size}_{spec.dims}"
        f"_{_number(spec.input_scale)}_{_number(spec.noise_var)}_{spec.growth1.value}{spec.growth2.value}"
    )


def decode_name(name: str, seed: int = 0) -> DatasetSpec:
    match = _NAME.match(name)
    if match is None:
        raise ParseError(f"malformed dataset name {name!r}")
    try:
        return DatasetSpec(
            discontinuous=match["d"] == "D",
            drifting=match["cd"] == "CD",
            size=int(match["size"]),
            dims=int(match["dims"]),
            input_scale=float(match["scale"]),
            noise_var=float(match["noise"]),
            growth1=GrowthKind(int(match["g1"])),
            growth2=GrowthKind(int(match["g2"])),
            seed=seed,
        )
    except ValueError as e:
        raise ParseError(f"invalid dataset name {name!r}: {e}") from e


def write_csv(stream: List[ObservedPair], path: Path) -> None:
    assert stream, "nothing to write"
    dims = len(stream[0].point)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"x{i + 1}" for i in range(dims)] + ["y"])
        for pair in stream:
            writer.writerow([f"{v:.17g}" for v in pair.point] + [f"{pair.target:.17g}"])


@trace
def read_csv(path: Path) -> List[ObservedPair]:
    """Reads a `x1,…,xd,y` dataset file back into a stream."""
    stream: List[ObservedPair] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or header[-1].strip() != "y":
            raise ParseError("expected header x1,...,xd,y", line=1)
        dims = len(header) - 1
        for row in reader:
            if not row:
                continue
            if len(row) != dims + 1:
                raise ParseError(f"expected {dims + 1} columns, got {len(row)}", line=reader.line_num)
            try:
                values = [float(v) for v in row]
            except ValueError as e:
                raise ParseError(str(e), line=reader.line_num) from e
            stream.append(ObservedPair(np.array(values[:-1]), values[-1]))
    return stream
