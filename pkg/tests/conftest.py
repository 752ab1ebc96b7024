from typing import Callable, List

import pytest

import numpy as np

from online_regression.core import ObservedPair


StreamFactory = Callable[..., List[ObservedPair]]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240229)


@pytest.fixture
def linear_stream(rng: np.random.Generator) -> StreamFactory:
    """Linear targets y = xᵀw (+ Gaussian noise) on inputs uniform in [low, high)."""

    def make(
        n: int, w: List[float], noise: float = 0.0, low: float = 1.0, high: float = 10.0
    ) -> List[ObservedPair]:
        coeffs = np.asarray(w, dtype=np.float64)
        points = rng.uniform(low, high, size=(n, coeffs.shape[0]))
        targets = points @ coeffs + rng.normal(0.0, noise, size=n) if noise else points @ coeffs
        return [ObservedPair(x, float(y)) for x, y in zip(points, targets)]

    return make
