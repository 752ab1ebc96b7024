"""
Dense linear algebra shared by every learner.

Matrices are float64 numpy arrays. Inversion of symmetric positive-definite matrices goes
through an unpivoted Cholesky factorization; rank-1 inverse maintenance follows the matrix
inversion lemma. Failures are raised, never patched here: callers own recovery.
"""
import logging
from typing import TypeAlias

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import NotPositiveDefinite, SingularUpdate


logger = logging.getLogger(__name__)

Matrix: TypeAlias = NDArray[np.float64]
Vector: TypeAlias = NDArray[np.float64]

SINGULARITY_TOLERANCE = 1e-12


def cholesky_lower(m: Matrix) -> Matrix:
    """Returns L with L·Lᵀ == m. Upper entries are exactly zero."""
    try:
        return scipy.linalg.cholesky(m, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NotPositiveDefinite(f"Cholesky failed on {m.shape[0]}x{m.shape[1]} matrix: {e}") from e


def triangular_inverse(lower: Matrix) -> Matrix:
    """Inverts a lower-triangular matrix by forward substitution against the identity."""
    n = lower.shape[0]
    return scipy.linalg.solve_triangular(lower, np.eye(n), lower=True)


def invert_psd(m: Matrix) -> Matrix:
    """
    Inverts a strictly positive-definite matrix.

    m⁻¹ = L⁻ᵀ·L⁻¹ with L the Cholesky factor; the result is symmetrized.
    """
    lower_inv = triangular_inverse(cholesky_lower(m))
    result = lower_inv.T @ lower_inv
    return (result + result.T) / 2.0


def log_det_psd(m: Matrix) -> float:
    """ln|m| = 2·Σ ln L_ii."""
    return float(2.0 * np.sum(np.log(np.diag(cholesky_lower(m)))))


def rank1_update_inverse(a_inv: Matrix, x: Vector) -> Matrix:
    """(A + x·xᵀ)⁻¹ from a symmetric A⁻¹."""
    a_inv_x = a_inv @ x
    denominator = 1.0 + float(x @ a_inv_x)
    if abs(denominator) < SINGULARITY_TOLERANCE:
        raise SingularUpdate(f"rank-1 update denominator {denominator:.3e}")
    return a_inv - np.outer(a_inv_x, a_inv_x) / denominator


def rank1_downdate_inverse(a_inv: Matrix, x: Vector) -> Matrix:
    """(A − x·xᵀ)⁻¹ from a symmetric A⁻¹."""
    a_inv_x = a_inv @ x
    denominator = 1.0 - float(x @ a_inv_x)
    if abs(denominator) < SINGULARITY_TOLERANCE:
        raise SingularUpdate(f"rank-1 downdate denominator {denominator:.3e}")
    return a_inv + np.outer(a_inv_x, a_inv_x) / denominator
