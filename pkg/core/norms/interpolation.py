import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Tuple

import numpy as np

from core.config.env_loader import get_settings
from core.errors import DimensionError, IsingConcError
from core.norms.partition_norm import NormResult
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)


def _check_p(p: float) -> float:
    p = float(p)
    if not p > 0 or not math.isfinite(p):
        logger.error(f"Interpolation parameter p={p} must be positive")
        raise IsingConcError(f"p must be a positive real, got {p}", module="norms")
    return p


def latala_maximizer(x: np.ndarray, p: float) -> Tuple[float, np.ndarray]:
    """
    Exact value and maximizer of sup{<x, y> : |y|_2 <= sqrt(p), |y|_inf <= 1}.

    Water-filling: with |x| sorted decreasingly (stable in the index), the
    top k coordinates saturate at 1 and the rest are lambda |x_i|, where k
    is the smallest count with lambda_k a_{k+1} <= 1 for
    lambda_k = sqrt((p - k) / sum_{i > k} a_i^2).

    Args:
        x: Real vector
        p: Positive real

    Returns:
        (value, y) with y feasible and <x, y> = value
    """
    p = _check_p(p)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    n = x.size
    signs = np.where(x < 0, -1.0, 1.0)
    a = np.abs(x)
    y = np.zeros(n)
    if n == 0:
        return 0.0, y
    if p >= n:
        return float(a.sum()), signs.copy()

    order = np.argsort(-a, kind="stable")
    sorted_a = a[order]
    tails = np.concatenate([np.cumsum((sorted_a ** 2)[::-1])[::-1], [0.0]])
    heads = np.concatenate([[0.0], np.cumsum(sorted_a)])
    for k in range(n):
        if k >= p:
            break
        if tails[k] == 0.0:
            y[order[:k]] = 1.0
            return float(heads[k]), y * signs
        lam = math.sqrt((p - k) / tails[k])
        if lam * sorted_a[k] <= 1.0:
            y[order[:k]] = 1.0
            y[order[k:]] = np.minimum(1.0, lam * sorted_a[k:])
            return float(heads[k] + math.sqrt((p - k) * tails[k])), y * signs
    # all-saturated fallback
    k = int(math.floor(p))
    y[order[:k]] = 1.0
    return float(heads[k]), y * signs


def latala_vector_norm(x: np.ndarray, p: float) -> float:
    """||x||_{{1},p}: interpolation between the l1 norm and sqrt(p) times the l2 norm."""
    return latala_maximizer(x, p)[0]


def rearrangement_sandwich(x: np.ndarray, p: float) -> Tuple[float, float, float]:
    """
    Head sum of the floor(p) largest |x_i|, sqrt(p) times the l2 norm of the rest,
    and their sum; the sum lies within [1, 2] times ||x||_{{1},p}.
    """
    p = _check_p(p)
    a = np.sort(np.abs(np.asarray(x, dtype=np.float64).reshape(-1)))[::-1]
    m = min(int(math.floor(p)), a.size)
    head = float(a[:m].sum())
    tail = math.sqrt(p) * float(np.linalg.norm(a[m:]))
    return head, tail, head + tail


def _square(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        logger.error(f"Expected a square matrix, got shape {A.shape}")
        raise DimensionError(f"matrix must be square, got shape {A.shape}", module="norms")
    return A


def matrix_norm_12p(A: np.ndarray, p: float) -> float:
    """||A||_{{1,2},p}: the vector norm applied to the row l2 norms."""
    A = _square(A)
    return latala_vector_norm(np.linalg.norm(A, axis=1), p)


def _bilinear_run(A: np.ndarray, y: np.ndarray, p: float, tol: float, patience: int,
                  max_sweeps: int) -> Tuple[float, np.ndarray, np.ndarray, bool, int]:
    value = -np.inf
    quiet = 0
    x = np.zeros(A.shape[0])
    for sweep in range(1, max_sweeps + 1):
        _, x = latala_maximizer(A @ y, p)
        current, y = latala_maximizer(A.T @ x, p)
        quiet = quiet + 1 if current - value <= tol * abs(current) else 0
        value = max(value, current)
        if quiet >= patience:
            return value, x, y, True, sweep
    return value, x, y, False, max_sweeps


def matrix_norm_1_2_p(A: np.ndarray, p: float, restarts: Optional[int] = None, seed: Optional[int] = None,
                      warm_starts: Sequence[Tuple[np.ndarray, np.ndarray]] = ()) -> NormResult:
    """
    ||A||_{{1}{2},p} = sup{sum_ij a_ij x_i y_j : |x|_2, |y|_2 <= sqrt(p), |x|_inf, |y|_inf <= 1}.

    Alternates exact water-filling steps in x and y from several starts (top
    singular vector, row-norm direction, warm starts, seeded random points)
    and returns the best certified value x^T A y with its witness.

    Raises:
        DimensionError: If A is not square
        IsingConcError: If p is not positive
    """
    A = _square(A)
    p = _check_p(p)
    settings = get_settings("norms")
    restarts = int(settings["restarts"]) if restarts is None else int(restarts)
    seed = int(settings["seed"]) if seed is None else int(seed)
    tol = float(settings["tolerance"])
    patience = int(settings["patience"])
    max_sweeps = int(settings["max_sweeps"])
    n = A.shape[0]

    if not np.any(A):
        zero = np.zeros(n)
        return NormResult(0.0, (zero, zero), True, 0, exact=True, label="{1}{2},p")

    _, _, vt = np.linalg.svd(A)
    directions = [vt[0].copy(), np.linalg.norm(A, axis=0)]
    for r in range(restarts):
        rng = np.random.default_rng(RunUtils.derive_seed(seed, "matrix_norm_1_2_p", r))
        directions.append(rng.normal(size=n))
    starts = [latala_maximizer(direction, p)[1] for direction in directions]
    starts += [np.asarray(y, dtype=np.float64) for _, y in warm_starts]

    workers = RunUtils.worker_count(settings.get("threads", 0))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        runs = list(pool.map(lambda y0: _bilinear_run(A, y0, p, tol, patience, max_sweeps), starts))

    values = [float(x @ A @ y) for _, x, y, _, _ in runs]
    best = int(np.argmax(values))
    _, x, y, _, _ = runs[best]
    logger.debug(f"||A||_{{1}}{{2}},p at p={p:g}: {values[best]:.12g} from {len(starts)} starts")
    return NormResult(values[best], (x, y), all(run[3] for run in runs), len(starts), exact=False,
                      label="{1}{2},p", sweeps=sum(run[4] for run in runs), restart_values=tuple(values))
