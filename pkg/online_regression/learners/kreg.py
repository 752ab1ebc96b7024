"""
Sliding-window Nadaraya-Watson regression with a Gaussian product kernel.

Every stored pair carries two cached sums over the window: its kernel density mass and its
kernel-weighted target contribution. Caches are kept in arrays aligned with the window's
ring slots and are maintained incrementally on every replace; they are rebuilt from scratch
only when the bandwidth changes.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    DataPoint,
    LearnerConfig,
    ObservedPair,
    PredictionTriple,
    SlidingWindow,
    StepTimings,
    WindowedLearner,
    trace,
    z_value,
)
from ..errors import InsufficientData, NotPositiveDefinite, ZeroDensity
from ..numkit import Matrix, Vector, invert_psd, log_det_psd
from ..settings import SETTINGS


logger = logging.getLogger(__name__)

ZERO_DENSITY = 1e-300
DEGENERATE_VARIANCE = 1e-12


def gaussian_kernel(u: Vector) -> float:
    """(2π)^(−d/2)·exp(−½uᵀu) for a pre-scaled offset u = (x_i − x)H⁻¹."""
    d = u.shape[-1]
    return float((2.0 * math.pi) ** (-d / 2.0) * math.exp(-0.5 * float(u @ u)))


def kernel_masses(points: Matrix, x: DataPoint, h_inv: Matrix) -> Vector:
    """Gaussian kernel of every row of `points` against x."""
    d = points.shape[1]
    u = (points - x) @ h_inv
    return (2.0 * math.pi) ** (-d / 2.0) * np.exp(-0.5 * np.einsum("ij,ij->i", u, u))


def pairwise_masses(points: Matrix, h_inv: Matrix) -> Matrix:
    d = points.shape[1]
    u = (points[:, None, :] - points[None, :, :]) @ h_inv
    return (2.0 * math.pi) ** (-d / 2.0) * np.exp(-0.5 * np.einsum("ijk,ijk->ij", u, u))


def var_cov(points: Matrix) -> Matrix:
    """
    Population covariance of the window inputs.

    A vanishing variance (constant feature) gets its diagonal entry set to 1 so the
    bandwidth matrix stays invertible.
    """
    n = points.shape[0]
    if n < 2:
        raise InsufficientData(f"covariance needs at least 2 points, got {n}")
    centered = points - points.mean(axis=0)
    cov = centered.T @ centered / n
    degenerate = np.flatnonzero(np.diag(cov) < DEGENERATE_VARIANCE)
    if degenerate.size:
        logger.debug(f"Constant features {degenerate.tolist()}, patching covariance diagonal")
        cov[degenerate, degenerate] = 1.0
    return cov


@dataclass(slots=True)
class KregState:
    window: SlidingWindow
    density_estimates: Vector  # per ring slot: Σ_j k((x_i − x_j)H⁻¹)
    contributions: Vector  # per ring slot: Σ_j k((x_i − x_j)H⁻¹)·y_j
    h_inv: Matrix
    h_inv_det: float
    ase: float = 0.0
    ase_count: int = 0
    high_conf: bool = False
    confidence: float = SETTINGS.confidence

    @classmethod
    def empty(
        cls, window: SlidingWindow, high_conf: bool = False, confidence: float = SETTINGS.confidence
    ) -> "KregState":
        d = window.dims
        return cls(
            window=window,
            density_estimates=np.zeros(window.capacity),
            contributions=np.zeros(window.capacity),
            h_inv=np.eye(d),
            h_inv_det=1.0,
            high_conf=high_conf,
            confidence=confidence,
        )

    @property
    def z(self) -> float:
        return z_value(SETTINGS.high_confidence if self.high_conf else self.confidence)

    def set_bandwidth(self, h_inv: Matrix) -> None:
        self.h_inv = h_inv
        self.h_inv_det = math.exp(log_det_psd(h_inv))
        rebuild_caches(self)


def rebuild_caches(state: KregState) -> None:
    """O(w²) recomputation of densities and contributions for the current H⁻¹."""
    slots = state.window.slots()
    if slots.size == 0:
        return
    masses = pairwise_masses(state.window.raw_points[slots], state.h_inv)
    state.density_estimates[slots] = masses.sum(axis=1)
    state.contributions[slots] = masses @ state.window.raw_targets[slots]


def nw_predict(state: KregState, x_new: DataPoint) -> PredictionTriple:
    window = state.window
    n = len(window)
    assert n >= 1, "prediction needs a non-empty window"
    slots = window.slots()
    k = kernel_masses(window.raw_points[slots], x_new, state.h_inv)
    mass = float(k.sum())
    if mass < ZERO_DENSITY:
        raise ZeroDensity(f"kernel mass {mass:.3e} at {x_new}")

    point = float(k @ window.raw_targets[slots]) / mass
    d = window.dims
    density = mass * state.h_inv_det / n  # f̂ = Σk / (n·|H|), |H| = 1/|H⁻¹|
    variance = (4.0 * math.pi) ** (-d / 2.0) * state.ase / density
    return PredictionTriple.symmetric(point, state.z * math.sqrt(variance))


def update_ase(state: KregState, error: float) -> None:
    """Running mean of squared errors that turns into a 1/w moving average once w errors were seen."""
    state.ase_count += 1
    weight = 1.0 / min(state.ase_count, state.window.capacity)
    state.ase += (error * error - state.ase) * weight


def nw_update(state: KregState, new: ObservedPair, observed_minus_predicted: float) -> KregState:
    """Replaces the oldest pair (when full) by `new`, keeping the caches coherent."""
    window = state.window
    update_ase(state, observed_minus_predicted)

    if window.full:
        drop_slot = window.oldest_slot
        remaining = window.slots()[1:]
        k = kernel_masses(window.raw_points[remaining], window.raw_points[drop_slot], state.h_inv)
        state.density_estimates[remaining] -= k
        state.contributions[remaining] -= k * window.raw_targets[drop_slot]

    window.push(new)
    new_slot = window.newest_slot
    others = window.slots()[:-1]
    k = kernel_masses(window.raw_points[others], new.point, state.h_inv)
    state.density_estimates[others] += k
    state.contributions[others] += k * new.target

    self_mass = (2.0 * math.pi) ** (-window.dims / 2.0)
    state.density_estimates[new_slot] = float(k.sum()) + self_mass
    state.contributions[new_slot] = float(k @ window.raw_targets[others]) + self_mass * new.target
    return state


def hold_out_one_ase(masses: Matrix, targets: Vector) -> float:
    """Mean squared leave-one-out error given the full pairwise kernel matrix."""
    held_out = masses.copy()
    np.fill_diagonal(held_out, 0.0)
    density = held_out.sum(axis=1)
    defined = density >= ZERO_DENSITY
    predictions = np.full(targets.shape, float(targets.mean()))
    predictions[defined] = (held_out[defined] @ targets) / density[defined]
    residuals = targets - predictions
    return float(residuals @ residuals) / targets.shape[0]


def alpha_grid(
    alpha_min: float = SETTINGS.kreg_alpha_min,
    alpha_max: float = SETTINGS.kreg_alpha_max,
    alpha_step: float = SETTINGS.kreg_alpha_step,
) -> Vector:
    count = int(round((alpha_max - alpha_min) / alpha_step)) + 1
    return alpha_min + alpha_step * np.arange(count)


@trace
def kreg_tune(state: KregState, grid: Vector) -> KregState:
    """
    Picks H = α*·COV by hold-out-one cross-validation over the α grid.

    The first minimum wins ties. The winning CV error also seeds the running ASE, since it
    is an estimate of the squared prediction error under the new bandwidth.
    """
    window = state.window
    points, targets = window.points(), window.targets()
    cov = var_cov(points)

    best: tuple[float, Matrix] | None = None
    for alpha in grid:
        try:
            h_inv = invert_psd(alpha * cov)
        except NotPositiveDefinite:
            continue
        score = hold_out_one_ase(pairwise_masses(points, h_inv), targets)
        if best is None or score < best[0]:
            best = (score, h_inv)

    if best is None:
        logger.warning("No bandwidth on the grid was usable, keeping the current one")
        return state
    state.set_bandwidth(best[1])
    state.ase = best[0]
    state.ase_count = max(state.ase_count, window.capacity)
    return state


class KernelRegressionLearner(WindowedLearner):
    """KernelRegression[_HighConf]: Nadaraya-Watson with confidence-interval bounds."""

    def __init__(self, config: LearnerConfig, dims: int) -> None:
        super().__init__(config, dims)
        self.state = KregState.empty(self.window, high_conf=config.high_conf, confidence=config.confidence)
        self._last_error = 0.0

    def observe(self, pair: ObservedPair, last: PredictionTriple) -> StepTimings:
        self._last_error = pair.target - last.point
        return super().observe(pair, last)

    def _predict(self, x: DataPoint) -> PredictionTriple:
        try:
            return nw_predict(self.state, x)
        except ZeroDensity:
            bound = SETTINGS.sentinel_bound
            return PredictionTriple(-bound, float(self.window.targets().mean()), bound)

    def _absorb(self, pair: ObservedPair) -> None:
        nw_update(self.state, pair, self._last_error)

    def _tune(self) -> None:
        kreg_tune(self.state, alpha_grid())
