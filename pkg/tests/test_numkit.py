import pytest

import numpy as np

from online_regression.errors import NotPositiveDefinite, SingularUpdate
from online_regression.numkit import (
    cholesky_lower,
    invert_psd,
    log_det_psd,
    rank1_downdate_inverse,
    rank1_update_inverse,
    triangular_inverse,
)


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    b = rng.normal(size=(n, n))
    return b @ b.T + n * np.eye(n)


def test_cholesky_reconstructs_matrix() -> None:
    m = np.array([[4.0, 2.0], [2.0, 3.0]])
    lower = cholesky_lower(m)
    assert lower[0, 1] == 0.0
    np.testing.assert_allclose(lower @ lower.T, m, atol=1e-12)
    np.testing.assert_allclose(lower, [[2.0, 0.0], [1.0, np.sqrt(2.0)]])


@pytest.mark.parametrize("m", [np.array([[1.0, 2.0], [2.0, 1.0]]), np.array([[0.0]]), -np.eye(3)])
def test_cholesky_rejects_non_positive_definite(m: np.ndarray) -> None:
    with pytest.raises(NotPositiveDefinite):
        cholesky_lower(m)


def test_triangular_inverse(rng: np.random.Generator) -> None:
    lower = np.tril(rng.uniform(0.5, 2.0, size=(5, 5)))
    np.testing.assert_allclose(triangular_inverse(lower) @ lower, np.eye(5), atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 5, 16])
def test_invert_psd(rng: np.random.Generator, n: int) -> None:
    m = random_spd(rng, n)
    inverse = invert_psd(m)
    np.testing.assert_allclose(m @ inverse, np.eye(n), atol=1e-10)
    np.testing.assert_array_equal(inverse, inverse.T)


def test_log_det_matches_slogdet(rng: np.random.Generator) -> None:
    m = random_spd(rng, 6)
    sign, expected = np.linalg.slogdet(m)
    assert sign > 0
    assert log_det_psd(m) == pytest.approx(expected, rel=1e-12)


def test_rank1_update_and_downdate_match_dense_inverse(rng: np.random.Generator) -> None:
    a = random_spd(rng, 4)
    x = rng.normal(size=4)
    a_inv = np.linalg.inv(a)

    updated = rank1_update_inverse(a_inv, x)
    np.testing.assert_allclose(updated, np.linalg.inv(a + np.outer(x, x)), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(rank1_downdate_inverse(updated, x), a_inv, rtol=1e-9, atol=1e-12)


def test_downdate_of_only_information_is_singular() -> None:
    with pytest.raises(SingularUpdate):
        rank1_downdate_inverse(np.array([[1.0]]), np.array([1.0]))
