import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, Tuple

import numpy as np

from core.boolfn.tensors import SymmetricTensor, off_diagonal_mask
from core.errors import DimensionError
from core.utils.transforms import fast_walsh_hadamard, table_dimension

logger = logging.getLogger(__name__)


def mask_indices(mask: int) -> Tuple[int, ...]:
    """0-based sites of a subset bitmask, increasing."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def indices_mask(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


@dataclass(frozen=True, eq=False)
class TetrahedralPolynomial:
    """
    Multilinear polynomial sum_S a_S prod_{i in S} x_i on R^n.

    Coefficients are kept sparsely, keyed by subset bitmask (bit i set means
    site i, 0-based); zero coefficients are dropped.
    """

    n: int
    coeffs: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError("polynomial dimension must be positive", module="boolfn")
        clean = {}
        for mask, value in self.coeffs.items():
            mask = int(mask)
            if mask < 0 or mask >> self.n:
                raise DimensionError(f"subset {mask_indices(mask)} is not contained in [0, {self.n})",
                                     module="boolfn")
            if value != 0.0:
                clean[mask] = clean.get(mask, 0.0) + float(value)
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @property
    def degree(self) -> int:
        return max((bin(mask).count("1") for mask in self.coeffs), default=0)

    @property
    def constant(self) -> float:
        return self.coeffs.get(0, 0.0)

    def terms_of_degree(self, k: int) -> Dict[int, float]:
        return {m: a for m, a in self.coeffs.items() if bin(m).count("1") == k}

    def scaled(self, factor: float) -> "TetrahedralPolynomial":
        return TetrahedralPolynomial(self.n, {m: a * factor for m, a in self.coeffs.items()})

    def plus(self, other: "TetrahedralPolynomial") -> "TetrahedralPolynomial":
        if other.n != self.n:
            raise DimensionError(f"cannot add polynomials in {self.n} and {other.n} variables", module="boolfn")
        merged = dict(self.coeffs)
        for mask, value in other.coeffs.items():
            merged[mask] = merged.get(mask, 0.0) + value
        return TetrahedralPolynomial(self.n, merged)

    def without_constant(self) -> "TetrahedralPolynomial":
        return TetrahedralPolynomial(self.n, {m: a for m, a in self.coeffs.items() if m})

    def dense(self) -> np.ndarray:
        """Coefficient vector of length 2^n indexed by bitmask."""
        out = np.zeros(1 << self.n)
        for mask, value in self.coeffs.items():
            out[mask] = value
        return out


def walsh_transform(values: np.ndarray) -> TetrahedralPolynomial:
    """
    Walsh coefficients of a function table on {-1, 1}^n.

    values[x] is f at sigma_i = (-1)^{bit i of x}. Uses the fast butterfly
    transform, O(n 2^n).

    Raises:
        DimensionError: If the table length is not a power of two
    """
    values = np.asarray(values, dtype=np.float64)
    n = table_dimension(values.shape[0])
    if n == 0:
        raise DimensionError("table must have at least two entries", module="boolfn")
    coeffs = fast_walsh_hadamard(values) / (1 << n)
    nonzero = np.flatnonzero(coeffs)
    return TetrahedralPolynomial(n, dict(zip(nonzero.tolist(), coeffs[nonzero].tolist())))


def cube_table(poly: TetrahedralPolynomial) -> np.ndarray:
    """Values of poly on every configuration of {-1, 1}^n, bit-encoded."""
    return fast_walsh_hadamard(poly.dense())


def evaluate(poly: TetrahedralPolynomial, x: np.ndarray) -> np.ndarray:
    """
    Evaluate the multilinear extension at one real point (n,) or a batch (m, n).

    Args:
        poly: The polynomial
        x: Point(s) in R^n

    Returns:
        A float for a single point, an (m,) array for a batch

    Raises:
        DimensionError: If the trailing dimension is not n
    """
    points = np.asarray(x, dtype=np.float64)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.shape[-1] != poly.n:
        raise DimensionError(f"point has dimension {points.shape[-1]}, expected {poly.n}", module="boolfn")

    total = np.zeros(points.shape[0])
    by_degree: Dict[int, list] = {}
    for mask, value in poly.coeffs.items():
        by_degree.setdefault(bin(mask).count("1"), []).append((mask_indices(mask), value))
    for k, terms in by_degree.items():
        coeffs = np.array([value for _, value in terms])
        if k == 0:
            total += coeffs.sum()
            continue
        idx = np.array([indices for indices, _ in terms], dtype=np.int64)
        total += points[:, idx].prod(axis=-1) @ coeffs
    return float(total[0]) if single else total


def from_tensor(A: SymmetricTensor) -> TetrahedralPolynomial:
    """
    Homogeneous polynomial sum over all multi-indices a_{i1..id} x_{i1}...x_{id}.

    Only distinct-index entries contribute, so the coefficient of a d-set S
    is d! a_S.
    """
    d, n = A.d, A.n
    entries = A.entries
    coeffs = {}
    for combo in combinations(range(n), d):
        value = entries[combo]
        if value != 0.0:
            coeffs[indices_mask(combo)] = math.factorial(d) * float(value)
    if not A.tetrahedral and d > 1 and np.any(entries[~off_diagonal_mask(n, d)]):
        logger.warning("Generalized diagonal entries of the tensor are ignored")
    return TetrahedralPolynomial(n, coeffs)


def quadratic_form(A: np.ndarray) -> TetrahedralPolynomial:
    """The polynomial of <Ax, x> on the cube; the diagonal folds into the constant."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    coeffs = {0: float(np.trace(A))}
    for i, j in combinations(range(n), 2):
        value = A[i, j] + A[j, i]
        if value != 0.0:
            coeffs[(1 << i) | (1 << j)] = float(value)
    return TetrahedralPolynomial(n, coeffs)


def linear_form(a: np.ndarray) -> TetrahedralPolynomial:
    a = np.asarray(a, dtype=np.float64)
    return TetrahedralPolynomial(a.shape[0], {1 << i: float(v) for i, v in enumerate(a)})
