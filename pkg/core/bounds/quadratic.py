import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from core.boolfn.polynomial import TetrahedralPolynomial, evaluate
from core.bounds.tail import BoundKind, TailBound, _constant
from core.config.env_loader import get_settings
from core.errors import CapacityError, IndefiniteMatrixError, IsingConcError
from core.model.ising import spins_table
from core.norms.interpolation import latala_vector_norm, matrix_norm_12p, matrix_norm_1_2_p
from core.norms.spectral import is_nonnegative_definite, smallest_eigenvalue

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadThresholds:
    """Deviation thresholds at one p; each is exceeded with probability at most 4 e^{-p}."""

    p: float
    upper: float
    lower: float
    norm_12p: float
    norm_1_2p: float
    hs: float


@dataclass(frozen=True)
class ConvexThreshold:
    p: float
    threshold: float
    mass: float


def _p_grid(p_grid: Optional[Sequence[float]]) -> Tuple[float, ...]:
    grid = tuple(float(p) for p in (get_settings("bounds")["p_grid"] if p_grid is None else p_grid))
    if not grid or any(p <= 0 for p in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise IsingConcError("p-grid must be a nonempty increasing sequence of positive reals", module="bounds")
    return grid


def _check_psd(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if not is_nonnegative_definite(A):
        lam = smallest_eigenvalue(A)
        logger.error(f"Matrix is indefinite: smallest eigenvalue {lam:.6g}")
        raise IndefiniteMatrixError(f"matrix must be nonnegative definite, smallest eigenvalue {lam:.6g}")
    return A


def quad_bounds(A: np.ndarray, p: float, C_K: float, restarts: Optional[int] = None, seed: Optional[int] = None,
                warm_starts: Sequence = ()) -> QuadThresholds:
    """
    Thresholds for <AX, X> - E<AX, X> at level p.

    upper = C_K (||A||_{{1,2},p} + ||A||_{{1}{2},p})
    lower = C_K min(||A||_{{1,2},p} + ||A||_{{1}{2},p}, sqrt(p) ||A||_HS)

    Raises:
        IndefiniteMatrixError: If A is not nonnegative definite
    """
    A = _check_psd(A)
    if not C_K > 0:
        raise IsingConcError(f"C_K must be positive, got {C_K}", module="bounds")
    n12 = matrix_norm_12p(A, p)
    n1_2 = matrix_norm_1_2_p(A, p, restarts=restarts, seed=seed, warm_starts=warm_starts).value
    hs = float(np.linalg.norm(A))
    total = n12 + n1_2
    return QuadThresholds(p=float(p), upper=C_K * total, lower=C_K * min(total, math.sqrt(p) * hs),
                          norm_12p=n12, norm_1_2p=n1_2, hs=hs)


def quad_profile(A: np.ndarray, p_grid: Optional[Sequence[float]] = None, restarts: Optional[int] = None,
                 seed: Optional[int] = None) -> Tuple[QuadThresholds, ...]:
    """
    Unit-constant thresholds over an increasing p-grid.

    The witness at each p stays feasible for larger p and is passed on as a warm
    start, so the certified ||A||_{{1}{2},p} values are nondecreasing along the grid.
    """
    A = _check_psd(A)
    rows = []
    warm = []
    for p in _p_grid(p_grid):
        n12 = matrix_norm_12p(A, p)
        result = matrix_norm_1_2_p(A, p, restarts=restarts, seed=seed, warm_starts=warm)
        warm = [result.witness]
        hs = float(np.linalg.norm(A))
        total = n12 + result.value
        rows.append(QuadThresholds(p=p, upper=total, lower=min(total, math.sqrt(p) * hs),
                                   norm_12p=n12, norm_1_2p=result.value, hs=hs))
    return tuple(rows)


def quad_upper_tail(A: np.ndarray, C_K: Optional[float] = None, p_grid: Optional[Sequence[float]] = None,
                    restarts: Optional[int] = None, seed: Optional[int] = None) -> TailBound:
    """P(<AX, X> - E >= t) bound from the upper thresholds; calibrates 1/C_K."""
    rows = quad_profile(A, p_grid, restarts=restarts, seed=seed)
    C_K = _constant(None, "C_K") if C_K is None else C_K
    return TailBound(BoundKind.QUAD_UPPER, {"C_K": C_K}, _profile_norms(rows),
                     profile=tuple((row.p, row.upper) for row in rows),
                     calibration_name="1/C_K", side="upper", prefactor=4.0)


def quad_lower_tail(A: np.ndarray, C_K: Optional[float] = None, p_grid: Optional[Sequence[float]] = None,
                    restarts: Optional[int] = None, seed: Optional[int] = None) -> TailBound:
    """P(<AX, X> - E <= -t) bound from the lower thresholds; calibrates 1/C_K."""
    rows = quad_profile(A, p_grid, restarts=restarts, seed=seed)
    C_K = _constant(None, "C_K") if C_K is None else C_K
    return TailBound(BoundKind.QUAD_LOWER, {"C_K": C_K}, _profile_norms(rows),
                     profile=tuple((row.p, row.lower) for row in rows),
                     calibration_name="1/C_K", side="lower", prefactor=4.0)


def _profile_norms(rows: Sequence[QuadThresholds]) -> Dict[str, float]:
    norms = {"hs": rows[0].hs if rows else 0.0}
    for row in rows:
        norms[f"{{1,2}},p={row.p:g}"] = row.norm_12p
        norms[f"{{1}}{{2}},p={row.p:g}"] = row.norm_1_2p
    return norms


def convex_lipschitz_bound(grad_sup_norm: Callable[[float], float], K: float, p: float,
                           C: Optional[float] = None) -> ConvexThreshold:
    """
    Threshold C sup_x ||grad f(x)||_{{1},p} exceeded by |f - Med f| with probability at most 4 e^{-p/K^2}.
    """
    if not p > 0:
        raise IsingConcError(f"p must be positive, got {p}", module="bounds")
    C = _constant(None, "C") if C is None else C
    return ConvexThreshold(p=float(p), threshold=C * float(grad_sup_norm(p)), mass=4.0 * math.exp(-p / K ** 2))


def linear_grad_sup_norm(a: np.ndarray) -> Callable[[float], float]:
    """For f = <a, x> the gradient is a everywhere."""
    a = np.asarray(a, dtype=np.float64)
    return lambda p: latala_vector_norm(a, p)


def polynomial_grad_sup_norm(poly: TetrahedralPolynomial) -> Callable[[float], float]:
    """
    sup over [-1, 1]^n of ||grad f(x)||_{{1},p}.

    Each partial derivative is affine in every coordinate, so the convex norm of the
    gradient attains its maximum at a vertex; vertices are enumerated.

    Raises:
        CapacityError: If n exceeds the enumeration cap
    """
    cap = int(get_settings("model")["enumeration_cap"])
    if poly.n > cap:
        raise CapacityError(f"gradient sup-norm enumeration needs n <= {cap}, got {poly.n}", module="bounds")
    vertices = spins_table(poly.n).astype(np.float64)
    gradients = np.empty_like(vertices)
    for i in range(poly.n):
        plus = vertices.copy()
        plus[:, i] = 1.0
        minus = vertices.copy()
        minus[:, i] = -1.0
        gradients[:, i] = 0.5 * (evaluate(poly, plus) - evaluate(poly, minus))
    return lambda p: max(latala_vector_norm(g, p) for g in gradients)


def convex_tail(grad_sup_norm: Callable[[float], float], C: Optional[float] = None, K: Optional[float] = None,
                p_grid: Optional[Sequence[float]] = None) -> TailBound:
    """Two-sided bound around the median from the thresholds on a p-grid; calibrates 1/C with K fixed."""
    C = _constant(None, "C") if C is None else C
    K = _constant(None, "K") if K is None else K
    profile = tuple((p, float(grad_sup_norm(p))) for p in _p_grid(p_grid))
    norms = {f"{{1}},p={p:g}": value for p, value in profile}
    return TailBound(BoundKind.CONVEX_PLP, {"C": C, "K": K}, norms, profile=profile,
                     calibration_name="1/C", prefactor=4.0)
