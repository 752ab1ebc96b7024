"""
Sliding-window Gaussian process regression with a squared-exponential ARD kernel.

The kernel matrix of the window and its inverse are kept in window order (oldest first) and
maintained with partitioned-inverse updates: removing the oldest point drops the first
row/column, adding a point appends one. Hyperparameters are stored as log proxies
(σ = e^px) and tuned by gradient ascent on the log marginal likelihood with step decay and
random restarts.
"""
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..core import (
    DataPoint,
    LearnerConfig,
    MeanKind,
    ObservedPair,
    PredictionTriple,
    SlidingWindow,
    StepTimings,
    WindowedLearner,
    trace,
    z_value,
)
from ..errors import DegenerateScalar, NotPositiveDefinite, SingularUpdate
from ..numkit import Matrix, Vector, cholesky_lower, invert_psd, log_det_psd, rank1_downdate_inverse
from ..settings import SETTINGS
from .parametric import ParamState, batch_fit, windowed_add


logger = logging.getLogger(__name__)

DEGENERATE_PIVOT = 1e-12
LOG_2PI = math.log(2.0 * math.pi)
# proxies at or above this make σ² overflow a double
MAX_VARIANCE_PROXY = 0.5 * math.log(sys.float_info.max) - 1.0


@dataclass(slots=True)
class GpHyperParams:
    px_w: float
    px_y: float
    px_l: Vector

    @property
    def sigma_w(self) -> float:
        return math.exp(self.px_w)

    @property
    def sigma_y(self) -> float:
        return math.exp(self.px_y)

    @property
    def lengthscales(self) -> Vector:
        return np.exp(self.px_l)

    @property
    def prior_variance(self) -> float:
        return math.exp(2.0 * self.px_w) + math.exp(2.0 * self.px_y)

    @property
    def representable(self) -> bool:
        """Whether σ_w², σ_y² and the lengthscales are finite and non-zero floats."""
        if not (math.isfinite(self.px_w) and math.isfinite(self.px_y)):
            return False
        if max(self.px_w, self.px_y) >= MAX_VARIANCE_PROXY:
            return False
        return bool(np.all(np.abs(self.px_l) < 2.0 * MAX_VARIANCE_PROXY))

    def as_vector(self) -> Vector:
        return np.concatenate([[self.px_w, self.px_y], self.px_l])

    @classmethod
    def from_vector(cls, proxies: Vector) -> "GpHyperParams":
        return cls(px_w=float(proxies[0]), px_y=float(proxies[1]), px_l=np.array(proxies[2:], dtype=np.float64))

    @classmethod
    def from_sigmas(cls, sigma_w: float, sigma_y: float, lengthscales: Vector) -> "GpHyperParams":
        return cls(px_w=math.log(sigma_w), px_y=math.log(sigma_y), px_l=np.log(np.asarray(lengthscales, float)))


def sq_exp_kernel(xp: DataPoint, xq: DataPoint, h: GpHyperParams, same: bool = False) -> float:
    """σ_w²·exp(−½ Σ((xp_i − xq_i)/l_i)²), plus σ_y² when xp and xq are the same stored item."""
    scaled = (xp - xq) / h.lengthscales
    value = h.sigma_w**2 * math.exp(-0.5 * float(scaled @ scaled))
    return value + h.sigma_y**2 if same else value


def signal_matrix(points: Matrix, h: GpHyperParams) -> Matrix:
    scaled = points / h.lengthscales
    diffs = scaled[:, None, :] - scaled[None, :, :]
    return h.sigma_w**2 * np.exp(-0.5 * np.einsum("ijk,ijk->ij", diffs, diffs))


def kernel_matrix(points: Matrix, h: GpHyperParams) -> Matrix:
    return signal_matrix(points, h) + h.sigma_y**2 * np.eye(points.shape[0])


def kernel_vector(points: Matrix, x: DataPoint, h: GpHyperParams) -> Vector:
    scaled = (points - x) / h.lengthscales
    return h.sigma_w**2 * np.exp(-0.5 * np.einsum("ij,ij->i", scaled, scaled))


@dataclass
class GpState:
    window: SlidingWindow
    hyper: GpHyperParams
    mean_kind: MeanKind = MeanKind.Zero
    kernel_matrix: Matrix = field(default_factory=lambda: np.zeros((0, 0)))
    kernel_inverse: Matrix = field(default_factory=lambda: np.zeros((0, 0)))
    means: Vector = field(default_factory=lambda: np.zeros(0))  # per ring slot
    ols_substate: ParamState | None = None
    target_sum: float = 0.0
    target_count: int = 0
    jitter: float = 0.0  # added to the diagonal of kernel_matrix

    @classmethod
    def empty(
        cls, window: SlidingWindow, mean_kind: MeanKind = MeanKind.Zero, hyper: GpHyperParams | None = None
    ) -> "GpState":
        d = window.dims
        return cls(
            window=window,
            hyper=hyper or GpHyperParams(px_w=0.0, px_y=0.0, px_l=np.zeros(d)),
            mean_kind=mean_kind,
            means=np.zeros(window.capacity),
            ols_substate=ParamState.initial(d) if mean_kind is MeanKind.OLS else None,
        )

    def record_target(self, target: float) -> None:
        self.target_sum += target
        self.target_count += 1

    def stored_means(self) -> Vector:
        return self.means[self.window.slots()]

    def residuals(self) -> Vector:
        return self.window.targets() - self.stored_means()


def mean_value(kind: MeanKind, state: GpState, x: DataPoint) -> float:
    if kind is MeanKind.Zero:
        return 0.0
    if kind is MeanKind.Average:
        return state.target_sum / state.target_count if state.target_count else 0.0
    assert state.ols_substate is not None, "OLS mean needs an embedded least-squares state"
    return state.ols_substate.predict(x)


def _checked_kernel(state: GpState) -> Matrix:
    """K of the window without jitter; NotPositiveDefinite when the hyperparameters cannot produce a finite K."""
    if not state.hyper.representable:
        raise NotPositiveDefinite(f"hyperparameter proxies out of range: {state.hyper.as_vector().tolist()}")
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        k = kernel_matrix(state.window.points(), state.hyper)
    if not np.all(np.isfinite(k)):
        raise NotPositiveDefinite("kernel matrix has non-finite entries")
    return k


def _install_kernel(state: GpState, base: Matrix, jitter: float) -> None:
    k = base + jitter * np.eye(base.shape[0]) if jitter else base
    state.kernel_inverse = invert_psd(k) if k.size else k.copy()
    state.kernel_matrix = k
    state.jitter = jitter


def _recompute_with_jitter(state: GpState, max_attempts: int = SETTINGS.gp_max_jitter_attempts) -> None:
    """Dense rebuild that multiplies the diagonal jitter by 10 after each failed Cholesky, `max_attempts` tries."""
    base = _checked_kernel(state)
    jitter = 0.0
    for _ in range(max_attempts):
        try:
            _install_kernel(state, base, jitter)
            return
        except NotPositiveDefinite:
            failed, jitter = jitter, max(jitter * 10.0, 1e-10 * state.hyper.prior_variance)
            logger.warning(f"Kernel matrix not positive-definite with jitter {failed:.3e}")
    raise NotPositiveDefinite(
        f"kernel matrix not positive-definite after {max_attempts} attempts, last jitter {failed:.3e}"
    )


def _refit_ols(state: GpState) -> None:
    assert state.ols_substate is not None
    n_seen = state.ols_substate.n_seen
    d = state.window.dims
    if len(state.window):
        regularizer = np.eye(d) / SETTINGS.forgetting_init_k
        state.ols_substate = batch_fit(state.window.points(), state.window.targets(), regularizer)
    else:
        state.ols_substate = ParamState.initial(d)
    state.ols_substate.n_seen = n_seen


def kernel_inverse_remove_oldest(state: GpState) -> GpState:
    """Drops the oldest pair: K⁻¹ ← G − f·fᵀ/e for K⁻¹ partitioned as [[e, fᵀ], [f, G]]."""
    dropped = state.window.pop_oldest()
    inverse = state.kernel_inverse
    state.kernel_matrix = state.kernel_matrix[1:, 1:]
    e, f, g = inverse[0, 0], inverse[1:, 0], inverse[1:, 1:]
    try:
        if abs(e) < DEGENERATE_PIVOT:
            raise DegenerateScalar(f"partitioned-inverse pivot {e:.3e}")
        state.kernel_inverse = g - np.outer(f, f) / e
    except DegenerateScalar as err:
        logger.warning(f"{err.detail}, recomputing kernel inverse")
        _recompute_with_jitter(state)

    if state.ols_substate is not None:
        ols = state.ols_substate
        try:
            ols.m1 = rank1_downdate_inverse(ols.m1, dropped.point)
            ols.m2 = ols.m2 - dropped.point * dropped.target
            ols.w = ols.m1 @ ols.m2
        except SingularUpdate:
            _refit_ols(state)
    return state


def kernel_inverse_add(state: GpState, x_new: DataPoint, y_new: float) -> GpState:
    """
    Appends a pair. With b the kernel vector against the stored points:
    g = (k(x,x) − bᵀK⁻¹b)⁻¹, f = −K⁻¹b·g and the old block becomes K⁻¹ + g·K⁻¹b·bᵀK⁻¹.
    """
    window = state.window
    assert not window.full, "remove the oldest pair before adding to a full window"
    points = window.points()
    b = kernel_vector(points, x_new, state.hyper)
    k_new = state.hyper.prior_variance + state.jitter

    window.push(ObservedPair(x_new, y_new))
    state.means[window.newest_slot] = mean_value(state.mean_kind, state, x_new)

    n = b.shape[0]
    grown = np.empty((n + 1, n + 1))
    grown[:n, :n] = state.kernel_matrix
    grown[n, :n] = grown[:n, n] = b
    grown[n, n] = k_new
    state.kernel_matrix = grown

    try:
        inverse = state.kernel_inverse
        inv_b = inverse @ b
        schur = k_new - float(b @ inv_b)
        if schur < DEGENERATE_PIVOT:
            raise DegenerateScalar(f"Schur complement {schur:.3e}, near-duplicate point")
        g = 1.0 / schur
        result = np.empty((n + 1, n + 1))
        result[:n, :n] = inverse + g * np.outer(inv_b, inv_b)
        result[n, :n] = result[:n, n] = -inv_b * g
        result[n, n] = g
        state.kernel_inverse = result
    except DegenerateScalar as err:
        logger.warning(f"{err.detail}, recomputing kernel inverse")
        _recompute_with_jitter(state)

    if state.ols_substate is not None:
        try:
            windowed_add(state.ols_substate, x_new, y_new)
        except SingularUpdate:
            _refit_ols(state)
    return state


def gp_predict(state: GpState, x_new: DataPoint, confidence: float) -> PredictionTriple:
    points = state.window.points()
    b = kernel_vector(points, x_new, state.hyper)
    inv_b = state.kernel_inverse @ b
    mean = mean_value(state.mean_kind, state, x_new) + float(inv_b @ state.residuals())
    variance = max(state.hyper.prior_variance - float(b @ inv_b), 0.0)
    return PredictionTriple.symmetric(mean, z_value(confidence) * math.sqrt(variance))


def _log_likelihood(lower: Matrix, r: Vector) -> float:
    alpha = scipy.linalg.cho_solve((lower, True), r)
    log_det = 2.0 * float(np.sum(np.log(np.diag(lower))))
    return -0.5 * r.shape[0] * LOG_2PI - 0.5 * log_det - 0.5 * float(r @ alpha)


def log_likelihood(state: GpState, y: Vector, m: Vector) -> float:
    """−(n/2)·ln 2π − ½·ln|K| − ½·(y−m)ᵀK⁻¹(y−m)."""
    r = y - m
    log_det = log_det_psd(state.kernel_matrix)
    return -0.5 * r.shape[0] * LOG_2PI - 0.5 * log_det - 0.5 * float(r @ state.kernel_inverse @ r)


def _gradient(points: Matrix, h: GpHyperParams, kernel_inverse: Matrix, r: Vector) -> Vector:
    """∂/∂px of the log likelihood: ½·tr((ααᵀ − K⁻¹)·∂K/∂px) with α = K⁻¹r."""
    alpha = kernel_inverse @ r
    outer = np.outer(alpha, alpha) - kernel_inverse
    signal = signal_matrix(points, h)
    grad = np.empty(2 + points.shape[1])
    grad[0] = 0.5 * np.sum(outer * (2.0 * signal))
    grad[1] = 0.5 * np.trace(outer) * 2.0 * h.sigma_y**2
    lengthscales = h.lengthscales
    for i in range(points.shape[1]):
        sq = (points[:, i, None] - points[None, :, i]) ** 2 / lengthscales[i] ** 2
        grad[2 + i] = 0.5 * np.sum(outer * signal * sq)
    return grad


def log_likelihood_gradient(state: GpState, y: Vector, m: Vector) -> Vector:
    """Gradient over the proxies, ordered px_w, px_y, px_l_1 … px_l_d."""
    return _gradient(state.window.points(), state.hyper, state.kernel_inverse, y - m)


def _evaluate(proxies: Vector, points: Matrix, r: Vector) -> tuple[float, Vector | None]:
    """(log likelihood, gradient) at `proxies`, or (−∞, None) where K is not a finite positive-definite matrix."""
    h = GpHyperParams.from_vector(proxies)
    if not h.representable:
        return -math.inf, None
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        try:
            k = kernel_matrix(points, h)
            if not np.all(np.isfinite(k)):
                return -math.inf, None
            lower = cholesky_lower(k)
            ll = _log_likelihood(lower, r)
            kernel_inverse = scipy.linalg.cho_solve((lower, True), np.eye(points.shape[0]))
            grad = _gradient(points, h, kernel_inverse, r)
        except (NotPositiveDefinite, OverflowError):
            return -math.inf, None
    if not math.isfinite(ll) or not np.all(np.isfinite(grad)):
        return -math.inf, None
    return ll, grad


def restart_centres(points: Matrix, r: Vector) -> Vector:
    """Data-scale anchors for random restarts: ln std(r), ln std(r) − 2, ln std(x_i)."""

    def log_std(values: Vector) -> float:
        std = float(np.std(values))
        return math.log(std) if std > 0.0 else 0.0

    signal = log_std(r)
    return np.concatenate([[signal, signal - 2.0], [log_std(points[:, i]) for i in range(points.shape[1])]])


@trace
def gp_tune(
    state: GpState,
    rng: np.random.Generator,
    max_iterations: int = SETTINGS.gp_max_iterations,
    max_decays: int = SETTINGS.gp_max_decays,
    max_step: float = SETTINGS.gp_max_step,
    decayer: float = SETTINGS.gp_decayer,
    zero_gradient: float = SETTINGS.gp_zero_gradient,
    restart_range: float = SETTINGS.gp_restart_range,
    proxy_range: float = SETTINGS.gp_proxy_range,
) -> GpState:
    """
    Maximises the log marginal likelihood over the proxies.

    Each iteration tries a gradient step, halving it until the likelihood improves; when no
    step size works the search restarts from random proxies. Steps move no proxy by more than
    `max_step` and candidates are kept within `proxy_range` of the data-scale restart centres.
    The best configuration visited is kept, so the result never scores below the starting
    configuration.
    """
    points, r = state.window.points(), state.residuals()
    initial = state.hyper.as_vector()
    current = initial
    current_ll, current_grad = _evaluate(current, points, r)
    best, best_ll = initial, current_ll
    centres = restart_centres(points, r)
    low, high = centres - proxy_range, centres + proxy_range

    for _ in range(max_iterations):
        if current_grad is not None and float(np.max(np.abs(current_grad))) < zero_gradient:
            break

        moved = False
        if current_grad is not None:
            direction = current_grad / max(1.0, float(np.max(np.abs(current_grad))))
            step = max_step
            for _ in range(max_decays):
                candidate = np.clip(current + step * direction, low, high)
                ll, grad = _evaluate(candidate, points, r)
                if ll > current_ll:
                    current, current_ll, current_grad = candidate, ll, grad
                    moved = True
                    break
                step *= decayer

        if not moved:
            current = centres + rng.uniform(-restart_range, restart_range, size=centres.shape[0])
            current_ll, current_grad = _evaluate(current, points, r)

        if current_ll > best_ll:
            best, best_ll = current, current_ll

    state.hyper = GpHyperParams.from_vector(best)
    try:
        _recompute_with_jitter(state)
    except NotPositiveDefinite as err:
        logger.warning(f"{err.detail}, keeping the previous hyperparameters")
        state.hyper = GpHyperParams.from_vector(initial)
        _recompute_with_jitter(state)
    return state


class GaussianProcessLearner(WindowedLearner):
    """GPRegression{ZeroMean|AvgMean|OLSMean}."""

    def __init__(self, config: LearnerConfig, dims: int) -> None:
        super().__init__(config, dims)
        assert config.mean_kind is not None
        self.rng = np.random.default_rng(config.seed)
        self.state = GpState.empty(self.window, config.mean_kind)

    def observe(self, pair: ObservedPair, last: PredictionTriple) -> StepTimings:
        timings = super().observe(pair, last)
        self.state.record_target(pair.target)
        return timings

    def _predict(self, x: DataPoint) -> PredictionTriple:
        return gp_predict(self.state, x, self.config.confidence)

    def _absorb(self, pair: ObservedPair) -> None:
        if self.window.full:
            kernel_inverse_remove_oldest(self.state)
        kernel_inverse_add(self.state, pair.point, pair.target)

    def _tune(self) -> None:
        gp_tune(self.state, self.rng)
        logger.debug(
            f"{self.name}: σ_w={self.state.hyper.sigma_w:.3g} σ_y={self.state.hyper.sigma_y:.3g} "
            f"l={np.round(self.state.hyper.lengthscales, 3).tolist()}"
        )
