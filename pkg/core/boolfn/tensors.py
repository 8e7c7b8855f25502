import logging
import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from core.errors import DimensionError

logger = logging.getLogger(__name__)


def symmetrize(array: np.ndarray) -> np.ndarray:
    """Average an order-d array over all permutations of its axes."""
    array = np.asarray(array, dtype=np.float64)
    d = array.ndim
    total = np.zeros_like(array)
    for perm in permutations(range(d)):
        total += np.transpose(array, perm)
    return total / math.factorial(d)


def off_diagonal_mask(n: int, d: int) -> np.ndarray:
    """Boolean mask of multi-indices with pairwise distinct coordinates."""
    grids = np.indices((n,) * d)
    mask = np.ones((n,) * d, dtype=bool)
    for a in range(d):
        for b in range(a + 1, d):
            mask &= grids[a] != grids[b]
    return mask


@dataclass(frozen=True, eq=False)
class SymmetricTensor:
    """
    Dense symmetric d-index array a_{i1..id} over [n]^d.

    `tetrahedral` records that the generalized diagonals (multi-indices with
    a repeated coordinate) vanish.
    """

    entries: np.ndarray
    tetrahedral: bool = False

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64, copy=True)
        if entries.ndim < 1 or len(set(entries.shape)) != 1:
            raise DimensionError(f"tensor must be cubical, got shape {entries.shape}", module="boolfn")
        scale = max(1.0, float(np.max(np.abs(entries))) if entries.size else 1.0)
        if entries.ndim > 1 and not np.allclose(entries, symmetrize(entries), rtol=0.0, atol=1e-12 * scale):
            raise DimensionError("tensor is not symmetric under index permutations", module="boolfn")
        if self.tetrahedral and entries.ndim > 1:
            if np.any(entries[~off_diagonal_mask(entries.shape[0], entries.ndim)] != 0.0):
                raise DimensionError("tensor flagged tetrahedral has nonzero generalized diagonals", module="boolfn")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def d(self) -> int:
        return self.entries.ndim

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def scaled(self, factor: float) -> "SymmetricTensor":
        return SymmetricTensor(self.entries * factor, tetrahedral=self.tetrahedral)

    def frobenius(self) -> float:
        return float(np.sqrt(np.sum(self.entries ** 2)))


def as_tensor(A) -> SymmetricTensor:
    if isinstance(A, SymmetricTensor):
        return A
    array = np.asarray(A, dtype=np.float64)
    tetra = array.ndim == 1 or not np.any(array[~off_diagonal_mask(array.shape[0], array.ndim)])
    return SymmetricTensor(array, tetrahedral=bool(tetra))
