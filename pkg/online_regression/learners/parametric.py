"""
Linear learners: maximum-likelihood and maximum-a-posteriori estimates of y = wᵀφ(x) + ε.

Two ways of forgetting old data are provided. Forgetting learners run recursive least squares
with an exponential forgetting factor and bound their predictions with a three-learner
ensemble. Windowed learners keep the closed-form solution of the current sliding window
through rank-1 downdates/updates and bound predictions with asymptotic intervals.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from ..core import (
    DataPoint,
    ForgettingLearner,
    LearnerConfig,
    LearnerKind,
    ObservedPair,
    PredictionTriple,
    SlidingWindow,
    WindowedLearner,
    trace,
    z_value,
)
from ..errors import InsufficientData, NonPositiveFeature, NotPositiveDefinite, SingularUpdate
from ..numkit import Matrix, Vector, invert_psd, rank1_downdate_inverse, rank1_update_inverse
from ..settings import SETTINGS
from .kreg import var_cov


logger = logging.getLogger(__name__)


def feature_count(dims: int, mapped: bool) -> int:
    return dims + dims * (dims + 1) // 2 + 2 * dims if mapped else dims


def map_features(x: DataPoint) -> Vector:
    """Degree-1 and degree-2 monomials (i ≤ j), then ln(x_i) and sqrt(x_i) per dimension."""
    if np.any(x <= 0.0):
        raise NonPositiveFeature(f"ln/sqrt features need positive inputs, got {x}")
    upper = np.triu_indices(x.shape[0])
    return np.concatenate([x, np.outer(x, x)[upper], np.log(x), np.sqrt(x)])


@dataclass(slots=True)
class ParamState:
    m1: Matrix  # (XXᵀ + init)⁻¹
    m2: Vector  # X·y
    w: Vector
    s2: float | None = None  # None until the window holds more points than predictors
    n_seen: int = 0

    @property
    def p(self) -> int:
        return self.w.shape[0]

    @classmethod
    def initial(cls, p: int, init_k: float = SETTINGS.forgetting_init_k) -> "ParamState":
        """Uninformative start: m1 = k·I, i.e. an initial information matrix of I/k."""
        return cls(m1=init_k * np.eye(p), m2=np.zeros(p), w=np.zeros(p))

    def copy(self) -> "ParamState":
        return replace(self, m1=self.m1.copy(), m2=self.m2.copy(), w=self.w.copy())

    def predict(self, x: Vector) -> float:
        return float(self.w @ x)


@dataclass(slots=True)
class MapPrior:
    sigma_y: float
    sigma_w_inv_scaled: Matrix  # σ_y²·Σ_w⁻¹


@dataclass(slots=True)
class EnsembleState:
    base: ParamState
    upper: ParamState
    lower: ParamState
    burn_in_remaining: int


def mle_forgetting_update(state: ParamState, x: Vector, y: float, alpha: float) -> ParamState:
    """
    Exponentially weighted recursive least squares step.

    m1 ← ((1−α)·m1⁻¹ + x·xᵀ)⁻¹ and w ← w + m1·x·(y − xᵀw); with α = 0 this is plain
    recursive least squares.
    """
    residual = y - float(x @ state.w)
    state.m1 = rank1_update_inverse(state.m1 / (1.0 - alpha), x)
    state.m2 = (1.0 - alpha) * state.m2 + x * y
    state.w = state.w + (state.m1 @ x) * residual
    state.n_seen += 1
    return state


def windowed_add(state: ParamState, x: Vector, y: float) -> ParamState:
    state.m1 = rank1_update_inverse(state.m1, x)
    state.m2 = state.m2 + x * y
    state.w = state.m1 @ state.m2
    state.n_seen += 1
    return state


def windowed_replace(state: ParamState, dropped: ObservedPair, added: ObservedPair) -> ParamState:
    """Slides the closed-form solution by one pair. Both points are in feature space."""
    m1 = rank1_downdate_inverse(state.m1, dropped.point)
    state.m1 = rank1_update_inverse(m1, added.point)
    state.m2 = state.m2 - dropped.point * dropped.target + added.point * added.target
    state.w = state.m1 @ state.m2
    state.n_seen += 1
    return state


def batch_fit(points: Matrix, targets: Vector, regularizer: Matrix) -> ParamState:
    """Closed form on explicit data: m1 = (XXᵀ + regularizer)⁻¹, w = m1·X·y."""
    m1 = invert_psd(points.T @ points + regularizer)
    m2 = points.T @ targets
    return ParamState(m1=m1, m2=m2, w=m1 @ m2, n_seen=points.shape[0])


def residual_s2(window: SlidingWindow, w: Vector) -> float:
    """Σ(y_i − wᵀx_i)² / (n − p) over the window."""
    n, p = len(window), w.shape[0]
    if n <= p:
        raise InsufficientData(f"s² needs more than {p} points, window holds {n}")
    residuals = window.targets() - window.points() @ w
    return float(residuals @ residuals) / (n - p)


def asymptotic_bounds(x: Vector, state: ParamState, confidence: float) -> PredictionTriple:
    assert state.s2 is not None, "asymptotic bounds need s²"
    leverage = max(float(x @ state.m1 @ x), 0.0)
    half_width = z_value(confidence) * np.sqrt(state.s2 * leverage + state.s2)
    return PredictionTriple.symmetric(state.predict(x), float(half_width))


def ensemble_predict(ens: EnsembleState, x: Vector) -> PredictionTriple:
    return PredictionTriple(ens.lower.predict(x), ens.base.predict(x), ens.upper.predict(x)).clamped()


def ensemble_update(
    ens: EnsembleState, x: Vector, pair: ObservedPair, last: PredictionTriple, alpha: float
) -> EnsembleState:
    """
    Base always learns. After burn-in the upper learner only sees targets above the last lower
    bound and the lower learner only targets below the last upper bound.
    """
    y = pair.target
    mle_forgetting_update(ens.base, x, y, alpha)
    if ens.burn_in_remaining > 0:
        ens.burn_in_remaining -= 1
        mle_forgetting_update(ens.upper, x, y, alpha)
        mle_forgetting_update(ens.lower, x, y, alpha)
        return ens
    if y > last.lower:
        mle_forgetting_update(ens.upper, x, y, alpha)
    if y < last.upper:
        mle_forgetting_update(ens.lower, x, y, alpha)
    return ens


def map_init(p: int, sigma_w: Matrix | None = None, sigma_y: float = 1.0) -> tuple[MapPrior, ParamState]:
    """Prior-only state: m1 = (σ_y²·Σ_w⁻¹)⁻¹. A degenerate Σ_w falls back to the identity."""
    if sigma_w is None:
        sigma_w = np.eye(p)
    try:
        sigma_w_inv = invert_psd(sigma_w)
    except NotPositiveDefinite:
        logger.warning("Degenerate Σ_w, using identity prior")
        sigma_w_inv = np.eye(p)
    prior = MapPrior(sigma_y=sigma_y, sigma_w_inv_scaled=sigma_y**2 * sigma_w_inv)
    m1 = invert_psd(prior.sigma_w_inv_scaled)
    return prior, ParamState(m1=m1, m2=np.zeros(p), w=np.zeros(p))


def sigma_grid(
    sigma_min: float = SETTINGS.map_sigma_min,
    sigma_max: float = SETTINGS.map_sigma_max,
    sigma_step: float = SETTINGS.map_sigma_step,
) -> Vector:
    count = int(round((sigma_max - sigma_min) / sigma_step)) + 1
    return sigma_min + sigma_step * np.arange(count)


@trace
def map_tune(window: SlidingWindow, grid: Vector) -> tuple[MapPrior, ParamState]:
    """
    Exhaustive σ_y search with the window's own covariance as parameter prior.

    The parameters are refit from scratch for every grid value; the value with the smallest
    residual error on the window wins, earliest first on ties.
    """
    points, targets = window.points(), window.targets()
    p = points.shape[1]
    try:
        sigma_w_inv = invert_psd(var_cov(points))
    except NotPositiveDefinite:
        logger.warning("Window covariance not positive-definite, using identity prior")
        sigma_w_inv = np.eye(p)

    best: tuple[float, MapPrior, ParamState] | None = None
    for sigma_y in grid:
        regularizer = sigma_y**2 * sigma_w_inv
        try:
            state = batch_fit(points, targets, regularizer)
        except NotPositiveDefinite:
            continue
        residuals = targets - points @ state.w
        error = float(residuals @ residuals)
        if best is None or error < best[0]:
            best = (error, MapPrior(sigma_y=float(sigma_y), sigma_w_inv_scaled=regularizer), state)

    if best is None:
        logger.warning("No σ_y on the grid gave a positive-definite system, using identity prior")
        prior = MapPrior(sigma_y=1.0, sigma_w_inv_scaled=np.eye(p))
        return prior, batch_fit(points, targets, prior.sigma_w_inv_scaled)
    return best[1], best[2]


class ParametricForgettingLearner(ForgettingLearner):
    """BayesianMLE/BayesianMAP with a forgetting factor and ad-hoc ensemble bounds."""

    def __init__(self, config: LearnerConfig, dims: int) -> None:
        super().__init__(config, dims)
        assert config.forgetting_factor is not None
        self.alpha = config.forgetting_factor
        self.mapped = config.feature_mapping
        p = feature_count(dims, self.mapped)
        if config.kind is LearnerKind.BayesianMAP:
            _, start = map_init(p)
        else:
            start = ParamState.initial(p)
        self.ensemble = EnsembleState(
            base=start, upper=start.copy(), lower=start.copy(), burn_in_remaining=config.burn_in
        )

    def features(self, x: DataPoint) -> Vector:
        return map_features(x) if self.mapped else x

    def predict(self, x: DataPoint) -> PredictionTriple:
        return ensemble_predict(self.ensemble, self.features(x))

    def _update(self, pair: ObservedPair, last: PredictionTriple) -> None:
        ensemble_update(self.ensemble, self.features(pair.point), pair, last, self.alpha)


class ParametricWindowedLearner(WindowedLearner):
    """
    BayesianMLE/BayesianMAP over a sliding window with asymptotic bounds.

    The window stores feature-space points. MLE tuning is a no-op; MAP tuning refits σ_y and
    the prior covariance.
    """

    def __init__(self, config: LearnerConfig, dims: int) -> None:
        self.mapped = config.feature_mapping
        p = feature_count(dims, self.mapped)
        super().__init__(config, p)
        self.raw_dims = dims
        self.is_map = config.kind is LearnerKind.BayesianMAP
        self.prior: MapPrior | None = None
        if self.is_map:
            self.prior, self.state = map_init(p)
            self.regularizer = self.prior.sigma_w_inv_scaled
        else:
            self.state = ParamState.initial(p)
            self.regularizer = np.eye(p) / SETTINGS.forgetting_init_k

    def features(self, x: DataPoint) -> Vector:
        return map_features(x) if self.mapped else x

    def _predict(self, x: DataPoint) -> PredictionTriple:
        phi = self.features(x)
        if self.state.s2 is None:
            bound = SETTINGS.sentinel_bound
            return PredictionTriple(-bound, self.state.predict(phi), bound)
        return asymptotic_bounds(phi, self.state, self.config.confidence)

    def _absorb(self, pair: ObservedPair) -> None:
        added = ObservedPair(self.features(pair.point), pair.target)
        duplicate = self.window.find(added.point)
        try:
            if duplicate is not None:
                previous = self.window.overwrite_target(duplicate, added.target)
                self.state.m2 = self.state.m2 + added.point * (added.target - previous)
                self.state.w = self.state.m1 @ self.state.m2
            else:
                dropped = self.window.push(added)
                if dropped is None:
                    windowed_add(self.state, added.point, added.target)
                else:
                    windowed_replace(self.state, dropped, added)
        except SingularUpdate as e:
            logger.warning(f"{self.name}: {e.detail}, recomputing from window")
            self.refit()
        self._refresh_s2()

    def refit(self) -> None:
        """Dense recompute of the closed form on the current window."""
        n_seen = self.state.n_seen
        self.state = batch_fit(self.window.points(), self.window.targets(), self.regularizer)
        self.state.n_seen = n_seen

    def _refresh_s2(self) -> None:
        try:
            self.state.s2 = residual_s2(self.window, self.state.w)
        except InsufficientData:
            self.state.s2 = None

    def _tune(self) -> None:
        if not self.is_map:
            return
        self.prior, state = map_tune(self.window, sigma_grid())
        self.regularizer = self.prior.sigma_w_inv_scaled
        state.n_seen = self.state.n_seen
        self.state = state
        self._refresh_s2()
        logger.debug(f"{self.name}: tuned σ_y={self.prior.sigma_y:.2f}")
