import logging
from typing import List

import pytest

import numpy as np

from online_regression.core import (
    LearnerState,
    ObservedPair,
    PredictionTriple,
    SlidingWindow,
    cold_start_triple,
    decode_learner,
)
from online_regression.errors import InsufficientData, NonPositiveFeature
from online_regression.learners import build_learner
from online_regression.learners.kreg import var_cov
from online_regression.learners.parametric import (
    EnsembleState,
    ParamState,
    ParametricForgettingLearner,
    ParametricWindowedLearner,
    asymptotic_bounds,
    batch_fit,
    ensemble_update,
    feature_count,
    map_features,
    map_init,
    map_tune,
    mle_forgetting_update,
    residual_s2,
    sigma_grid,
    windowed_add,
    windowed_replace,
)
from online_regression.settings import SETTINGS

from .conftest import StreamFactory


INIT_REGULARIZER_SCALE = 1.0 / SETTINGS.forgetting_init_k


def test_feature_mapping() -> None:
    assert feature_count(1, False) == 1
    assert feature_count(2, True) == 9
    assert feature_count(4, True) == 4 + 10 + 8
    phi = map_features(np.array([1.0, 4.0]))
    np.testing.assert_allclose(phi, [1.0, 4.0, 1.0, 4.0, 16.0, 0.0, np.log(4.0), 1.0, 2.0])


@pytest.mark.parametrize("x", [[0.0], [1.0, -2.0]])
def test_feature_mapping_needs_positive_inputs(x: List[float]) -> None:
    with pytest.raises(NonPositiveFeature):
        map_features(np.array(x))


def test_recursive_update_equals_regularized_batch_fit(rng: np.random.Generator) -> None:
    points = rng.normal(size=(60, 3))
    targets = points @ np.array([2.0, -1.0, 0.5]) + rng.normal(0.0, 0.1, size=60)

    state = ParamState.initial(3)
    for x, y in zip(points, targets):
        mle_forgetting_update(state, x, y, alpha=0.0)

    expected = batch_fit(points, targets, INIT_REGULARIZER_SCALE * np.eye(3))
    np.testing.assert_allclose(state.w, expected.w, rtol=1e-8)
    np.testing.assert_allclose(state.m1, expected.m1, rtol=1e-8, atol=1e-14)
    ols = np.linalg.lstsq(points, targets, rcond=None)[0]
    np.testing.assert_allclose(state.w, ols, rtol=1e-4)
    assert state.n_seen == 60


def test_forgetting_update_is_exponentially_weighted_least_squares(rng: np.random.Generator) -> None:
    alpha, n = 0.1, 30
    points = rng.normal(size=(n, 2))
    targets = rng.normal(size=n)

    state = ParamState.initial(2)
    for x, y in zip(points, targets):
        mle_forgetting_update(state, x, y, alpha)

    weights = (1.0 - alpha) ** np.arange(n - 1, -1, -1)
    information = (points * weights[:, None]).T @ points + (1.0 - alpha) ** n * INIT_REGULARIZER_SCALE * np.eye(2)
    expected = np.linalg.solve(information, (points * weights[:, None]).T @ targets)
    np.testing.assert_allclose(state.w, expected, rtol=1e-8)


def test_forgetting_learner_converges_to_exact_coefficients(linear_stream: StreamFactory) -> None:
    stream = linear_stream(2000, [3.0])
    state = ParamState.initial(1)
    for pair in stream:
        mle_forgetting_update(state, pair.point, pair.target, alpha=0.0)
    assert state.w[0] == pytest.approx(3.0, abs=1e-6)


@pytest.mark.parametrize("dims", [1, 2, 4])
def test_windowed_replace_matches_batch_fit(rng: np.random.Generator, dims: int) -> None:
    capacity = 32
    regularizer = INIT_REGULARIZER_SCALE * np.eye(dims)
    window = SlidingWindow(capacity, dims)
    state = ParamState.initial(dims)
    coeffs = rng.uniform(-5.0, 5.0, size=dims)

    for step in range(1000):
        x = rng.normal(size=dims)
        added = ObservedPair(x, float(x @ coeffs + rng.normal()))
        dropped = window.push(added)
        if dropped is None:
            windowed_add(state, added.point, added.target)
        else:
            windowed_replace(state, dropped, added)
        if step >= capacity:
            expected = batch_fit(window.points(), window.targets(), regularizer)
            np.testing.assert_allclose(state.w, expected.w, rtol=1e-8, atol=1e-12)
            np.testing.assert_allclose(state.m2, expected.m2, rtol=1e-8, atol=1e-10)


def test_residual_s2() -> None:
    window = SlidingWindow(4, 1)
    for x, y in [(1.0, 1.0), (2.0, 2.5), (3.0, 2.5)]:
        window.push(ObservedPair(np.array([x]), y))
    # residuals of w = 1: 0, 0.5, -0.5 over n − p = 2
    assert residual_s2(window, np.array([1.0])) == pytest.approx(0.25)
    with pytest.raises(InsufficientData):
        residual_s2(window, np.zeros(3))


def test_asymptotic_bounds_are_symmetric_and_scale_with_confidence() -> None:
    state = ParamState(m1=np.eye(1) * 0.01, m2=np.zeros(1), w=np.array([2.0]), s2=4.0)
    x = np.array([3.0])
    narrow = asymptotic_bounds(x, state, confidence=0.95)
    wide = asymptotic_bounds(x, state, confidence=0.99)
    assert narrow.point == 6.0
    assert narrow.upper - narrow.point == pytest.approx(narrow.point - narrow.lower)
    assert narrow.width == pytest.approx(2.0 * 1.96 * np.sqrt(4.0 * 0.09 + 4.0))
    assert wide.width / narrow.width == pytest.approx(2.576 / 1.96)


def test_ensemble_routes_updates_by_last_bounds() -> None:
    start = ParamState.initial(1)
    ensemble = EnsembleState(base=start, upper=start.copy(), lower=start.copy(), burn_in_remaining=1)
    x = np.array([1.0])

    ensemble_update(ensemble, x, ObservedPair(x, 5.0), PredictionTriple(10.0, 15.0, 20.0), alpha=0.0)
    assert (ensemble.base.n_seen, ensemble.upper.n_seen, ensemble.lower.n_seen) == (1, 1, 1)

    # below both bounds: only the lower learner follows
    ensemble_update(ensemble, x, ObservedPair(x, 5.0), PredictionTriple(10.0, 15.0, 20.0), alpha=0.0)
    assert (ensemble.base.n_seen, ensemble.upper.n_seen, ensemble.lower.n_seen) == (2, 1, 2)

    # above both bounds: only the upper learner follows
    ensemble_update(ensemble, x, ObservedPair(x, 25.0), PredictionTriple(10.0, 15.0, 20.0), alpha=0.0)
    assert (ensemble.base.n_seen, ensemble.upper.n_seen, ensemble.lower.n_seen) == (3, 2, 2)


def test_map_init_identity_fallback(caplog: pytest.LogCaptureFixture) -> None:
    prior, state = map_init(2)
    np.testing.assert_allclose(state.m1, np.eye(2))
    assert prior.sigma_y == 1.0

    with caplog.at_level(logging.WARNING):
        _, state = map_init(2, sigma_w=np.zeros((2, 2)), sigma_y=2.0)
    assert "identity" in caplog.text
    np.testing.assert_allclose(state.m1, np.eye(2) / 4.0)


def test_sigma_grid() -> None:
    grid = sigma_grid()
    assert grid.shape == (50,)
    assert grid[0] == pytest.approx(0.1)
    assert grid[-1] == pytest.approx(5.0)


def test_map_tune_picks_smallest_window_error(rng: np.random.Generator) -> None:
    window = SlidingWindow(24, 2)
    for _ in range(24):
        x = rng.uniform(1.0, 10.0, size=2)
        window.push(ObservedPair(x, float(x @ [1.5, -0.5] + rng.normal())))
    grid = np.array([0.5, 1.0, 3.0])
    prior, state = map_tune(window, grid)

    points, targets = window.points(), window.targets()
    cov_inv = np.linalg.inv(var_cov(points))
    errors = []
    for sigma_y in grid:
        w = np.linalg.solve(points.T @ points + sigma_y**2 * cov_inv, points.T @ targets)
        errors.append(float(np.sum((targets - points @ w) ** 2)))
    assert prior.sigma_y == grid[int(np.argmin(errors))]
    residual = targets - points @ state.w
    assert float(residual @ residual) == pytest.approx(min(errors), rel=1e-8)


def test_windowed_learner_predicts_noise_free_linear_data(linear_stream: StreamFactory) -> None:
    learner = build_learner("BayesianMLEWindowed_WS32", dims=2)
    stream = linear_stream(100, [2.0, -1.0])

    assert learner.predict(stream[0].point) == cold_start_triple()
    for i, pair in enumerate(stream):
        last = learner.predict(pair.point)
        step = learner.observe(pair, last)
        if i == 31:
            assert step.tuned and step.updated
    assert learner.phase is LearnerState.Stable

    x = np.array([4.0, 3.0])
    triple = learner.predict(x)
    assert triple.point == pytest.approx(5.0, rel=1e-4)
    assert triple.lower <= triple.point <= triple.upper


def test_windowed_learner_lifecycle_on_drift(linear_stream: StreamFactory) -> None:
    learner = build_learner("BayesianMLEWindowed_WS8", dims=1)
    assert isinstance(learner, ParametricWindowedLearner)
    before = linear_stream(20, [3.0])
    after = linear_stream(12, [-10.0])

    for pair in before:
        learner.observe(pair, learner.predict(pair.point))
    assert learner.phase is LearnerState.Stable

    for pair in after[:4]:
        learner.observe(pair, learner.predict(pair.point))
    assert learner.phase is LearnerState.Stable
    learner.observe(after[4], learner.predict(after[4].point))
    assert learner.phase is LearnerState.HighError

    for pair in after[5:]:
        learner.observe(pair, learner.predict(pair.point))
    assert learner.phase is LearnerState.Stable
    assert learner.predict(np.array([2.0])).point == pytest.approx(-20.0, rel=1e-4)


def test_batch_control_is_frozen_after_training(linear_stream: StreamFactory) -> None:
    learner = build_learner("BayesianMLEBatch_TS8", dims=1)
    for pair in linear_stream(8, [3.0]):
        learner.observe(pair, learner.predict(pair.point))
    assert learner.phase is LearnerState.Stable

    for pair in linear_stream(30, [-10.0]):
        step = learner.observe(pair, learner.predict(pair.point))
        assert not step.updated and not step.tuned
    assert learner.phase is LearnerState.Stable
    assert learner.predict(np.array([2.0])).point == pytest.approx(6.0, rel=1e-4)


def test_duplicate_inputs_overwrite_targets() -> None:
    learner = build_learner("BayesianMLEWindowed_WS4", dims=1)
    assert isinstance(learner, ParametricWindowedLearner)
    x = np.array([2.0])
    learner.observe(ObservedPair(x, 4.0), cold_start_triple())
    learner.observe(ObservedPair(x, 6.0), cold_start_triple())
    assert len(learner.window) == 1
    assert learner.window.targets().tolist() == [6.0]
    assert learner.state.w[0] == pytest.approx(3.0, rel=1e-4)


def test_map_windowed_learner_tunes_sigma(linear_stream: StreamFactory) -> None:
    learner = build_learner(decode_learner("BayesianMAPWindowedMapped_WS32"), dims=1)
    assert isinstance(learner, ParametricWindowedLearner)
    for pair in linear_stream(40, [2.0], noise=0.5):
        learner.observe(pair, learner.predict(pair.point))
    assert learner.prior is not None
    assert 0.1 <= learner.prior.sigma_y <= 5.0 + 1e-9
    assert learner.state.s2 is not None


def test_forgetting_learner_is_always_stable(linear_stream: StreamFactory) -> None:
    learner = build_learner("BayesianMAPForgetting_FF0.05", dims=1)
    for pair in linear_stream(50, [3.0], noise=0.1):
        assert learner.phase is LearnerState.Stable
        triple = learner.predict(pair.point)
        assert triple.lower <= triple.point <= triple.upper
        assert learner.observe(pair, triple).updated


def test_ensemble_update_rule_is_strict_on_bounds() -> None:
    start = ParamState.initial(1)
    ensemble = EnsembleState(base=start, upper=start.copy(), lower=start.copy(), burn_in_remaining=0)
    x = np.array([1.0])
    last = PredictionTriple(10.0, 15.0, 20.0)

    # inside the interval both side learners follow
    ensemble_update(ensemble, x, ObservedPair(x, 15.0), last, alpha=0.0)
    assert (ensemble.base.n_seen, ensemble.upper.n_seen, ensemble.lower.n_seen) == (1, 1, 1)

    # on the lower bound: not above it, so the upper learner skips
    ensemble_update(ensemble, x, ObservedPair(x, 10.0), last, alpha=0.0)
    assert (ensemble.base.n_seen, ensemble.upper.n_seen, ensemble.lower.n_seen) == (2, 1, 2)

    # on the upper bound: not below it, so the lower learner skips
    ensemble_update(ensemble, x, ObservedPair(x, 20.0), last, alpha=0.0)
    assert (ensemble.base.n_seen, ensemble.upper.n_seen, ensemble.lower.n_seen) == (3, 2, 2)


def test_ensemble_learns_every_target_during_burn_in() -> None:
    start = ParamState.initial(1)
    ensemble = EnsembleState(base=start, upper=start.copy(), lower=start.copy(), burn_in_remaining=3)
    x = np.array([1.0])
    for y in (-50.0, 0.0, 50.0):
        ensemble_update(ensemble, x, ObservedPair(x, y), PredictionTriple(-1.0, 0.0, 1.0), alpha=0.0)
    assert (ensemble.base.n_seen, ensemble.upper.n_seen, ensemble.lower.n_seen) == (3, 3, 3)
    assert ensemble.burn_in_remaining == 0


def test_ensemble_side_learners_bracket_the_base(linear_stream: StreamFactory) -> None:
    learner = build_learner("BayesianMLEForgetting_FF0.05", dims=1)
    assert isinstance(learner, ParametricForgettingLearner)
    above, below = [], []
    for i, pair in enumerate(linear_stream(600, [2.0], noise=1.0)):
        triple = learner.predict(pair.point)
        if i >= 100:
            ensemble = learner.ensemble
            base = ensemble.base.predict(pair.point)
            above.append(ensemble.upper.predict(pair.point) - base)
            below.append(base - ensemble.lower.predict(pair.point))
        learner.observe(pair, triple)
    assert float(np.mean(above)) > 0.0
    assert float(np.mean(below)) > 0.0


def test_asymptotic_bounds_cover_stable_items(linear_stream: StreamFactory) -> None:
    covered = []
    for _ in range(5):
        learner = build_learner("BayesianMLEWindowed_WS64", dims=1)
        for pair in linear_stream(2000, [2.0], noise=1.0):
            triple = learner.predict(pair.point)
            if learner.phase is LearnerState.Stable:
                covered.append(triple.lower <= pair.target <= triple.upper)
            learner.observe(pair, triple)
    assert len(covered) > 5 * 1800
    assert 0.90 <= float(np.mean(covered)) <= 0.99


def test_drift_walks_the_whole_lifecycle(linear_stream: StreamFactory, caplog: pytest.LogCaptureFixture) -> None:
    learner = build_learner("BayesianMLEWindowed_WS64", dims=1)
    stream = linear_stream(600, [2.0], noise=1.0) + linear_stream(400, [8.0], noise=1.0)

    phases = []
    with caplog.at_level(logging.DEBUG, logger="online_regression.core.learner"):
        for pair in stream:
            learner.observe(pair, learner.predict(pair.point))
            phases.append(learner.phase)

    transitions = [r.getMessage().split(": ", 1)[1] for r in caplog.records if "-->" in r.getMessage()]
    assert transitions == [
        "ColdStart --WindowFull--> Tune",
        "Tune --TuneDone--> Stable",
        "Stable --DriftDetected--> HighError",
        "HighError --WindowRecycled--> Tune",
        "Tune --TuneDone--> Stable",
    ]
    fired = phases.index(LearnerState.HighError)
    assert 600 <= fired < 650
    assert phases[fired + 63] is LearnerState.Stable
    assert learner.predict(np.array([5.0])).point == pytest.approx(40.0, abs=1.0)


def test_windowed_learner_matches_batch_refit_over_long_replay(linear_stream: StreamFactory) -> None:
    learner = build_learner("BayesianMLEWindowed_WS32", dims=2)
    assert isinstance(learner, ParametricWindowedLearner)
    stream = []
    for coeffs in ([2.0, -1.0], [-3.0, 4.0]) * 5:
        stream += linear_stream(300, coeffs, noise=1.0)

    updates = 0
    for pair in stream:
        step = learner.observe(pair, learner.predict(pair.point))
        if step.updated:
            updates += 1
            expected = batch_fit(learner.window.points(), learner.window.targets(), learner.regularizer)
            np.testing.assert_allclose(learner.state.w, expected.w, rtol=1e-6, atol=1e-9)
    assert updates > 5 * 32
