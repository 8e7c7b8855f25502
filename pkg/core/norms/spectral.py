import logging

import numpy as np
from scipy.linalg import eigvalsh

logger = logging.getLogger(__name__)


def top_singular_value(M: np.ndarray, tol: float = 1e-14, max_iter: int = 20000, seed: int = 0) -> float:
    """
    Largest singular value of M by power iteration on M^T M.

    The Rayleigh quotient converges quadratically in the eigenvector error,
    so the default tolerance gives well below 1e-8 relative error.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0 or not np.any(M):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.normal(size=M.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for iteration in range(max_iter):
        w = M.T @ (M @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        updated = float(np.linalg.norm(M @ v))
        if abs(updated - estimate) <= tol * max(updated, 1.0):
            estimate = updated
            break
        estimate = updated
    else:
        logger.warning(f"Power iteration stopped after {max_iter} steps")
    logger.debug(f"Power iteration converged to {estimate:.12g} after {iteration + 1} steps")
    return estimate


def smallest_eigenvalue(A: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (LAPACK, lowest index only)."""
    A = np.asarray(A, dtype=np.float64)
    return float(eigvalsh(A, subset_by_index=[0, 0])[0])


def is_nonnegative_definite(A: np.ndarray, atol: float = 1e-9) -> bool:
    A = np.asarray(A, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)
    return smallest_eigenvalue(A) >= -atol * scale
