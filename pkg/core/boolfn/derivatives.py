import logging
from itertools import combinations, permutations
from typing import Callable

import numpy as np

from core.boolfn.polynomial import TetrahedralPolynomial, mask_indices, indices_mask
from core.boolfn.tensors import SymmetricTensor
from core.config.env_loader import get_settings
from core.errors import CapacityError, DimensionError

logger = logging.getLogger(__name__)

# Pair blocks for the variance double sum.
_VARIANCE_BLOCK = 2048


def _check_order(poly: TetrahedralPolynomial, k: int) -> None:
    if not 1 <= k <= poly.n:
        logger.error(f"Derivative order {k} out of range for n={poly.n}")
        raise DimensionError(f"derivative order {k} must lie in [1, {poly.n}]", module="boolfn")
    cap = int(get_settings("boolfn")["max_tensor_order"])
    if k > cap:
        logger.error(f"Derivative order {k} exceeds tensor order cap {cap}")
        raise CapacityError(f"derivative order {k} exceeds tensor order cap {cap}", module="boolfn")


def _accumulate(poly: TetrahedralPolynomial, k: int, weights: Callable[[np.ndarray], np.ndarray]) -> SymmetricTensor:
    """
    Build the k-th derivative tensor, weighting each term a_S by weights(S minus I)
    for every k-subset I of S and spreading it over the k! orderings of I.
    """
    index_rows, rest_masks, coeffs = [], [], []
    for mask, value in poly.coeffs.items():
        sites = mask_indices(mask)
        if len(sites) < k:
            continue
        for chosen in combinations(sites, k):
            index_rows.append(chosen)
            rest_masks.append(mask & ~indices_mask(chosen))
            coeffs.append(value)

    out = np.zeros((poly.n,) * k)
    if index_rows:
        idx = np.array(index_rows, dtype=np.int64)
        vals = np.array(coeffs) * weights(np.array(rest_masks, dtype=np.int64))
        for perm in permutations(range(k)):
            np.add.at(out, tuple(idx[:, perm].T), vals)
    return SymmetricTensor(out, tetrahedral=True)


def derivative_tensor(poly: TetrahedralPolynomial, k: int, x: np.ndarray) -> SymmetricTensor:
    """
    Tensor of k-th partial derivatives of the multilinear extension at x.

    Entries are true partial derivatives: for a homogeneous degree-d
    polynomial the top tensor is d! times the symmetric coefficient tensor.
    Entries with a repeated index vanish.

    Args:
        poly: The polynomial
        k: Derivative order, 1 <= k <= n
        x: Real point in R^n

    Returns:
        The symmetric derivative tensor

    Raises:
        DimensionError: If k is out of range or x has the wrong dimension
        CapacityError: If k exceeds the configured tensor order cap
    """
    _check_order(poly, k)
    point = np.asarray(x, dtype=np.float64)
    if point.shape != (poly.n,):
        raise DimensionError(f"point has shape {point.shape}, expected ({poly.n},)", module="boolfn")

    def monomials(masks: np.ndarray) -> np.ndarray:
        return np.array([np.prod(point[list(mask_indices(int(m)))]) for m in masks])

    return _accumulate(poly, k, monomials)


def expected_derivative(poly: TetrahedralPolynomial, k: int, law) -> SymmetricTensor:
    """
    E of the k-th derivative tensor at X distributed according to law.

    Each remaining monomial is replaced by its moment, so any law exposing
    moments_of(masks) works (exact tables and closed-form chain laws).
    """
    _check_order(poly, k)
    if law.n != poly.n:
        raise DimensionError(f"law has n={law.n}, polynomial has n={poly.n}", module="boolfn")
    return _accumulate(poly, k, law.moments_of)


def expectation(poly: TetrahedralPolynomial, law) -> float:
    """E f(X) = sum_S a_S E prod_{i in S} X_i."""
    if not poly.coeffs:
        return 0.0
    masks = np.fromiter(poly.coeffs.keys(), dtype=np.int64)
    coeffs = np.fromiter(poly.coeffs.values(), dtype=np.float64)
    return float(coeffs @ law.moments_of(masks))


def second_moment(poly: TetrahedralPolynomial, law) -> float:
    """E f(X)^2 = sum_{S,T} a_S a_T E prod_{i in S xor T} X_i."""
    if not poly.coeffs:
        return 0.0
    masks = np.fromiter(poly.coeffs.keys(), dtype=np.int64)
    coeffs = np.fromiter(poly.coeffs.values(), dtype=np.float64)
    total = 0.0
    for start in range(0, masks.size, _VARIANCE_BLOCK):
        block = masks[start:start + _VARIANCE_BLOCK]
        sym = np.bitwise_xor(block[:, None], masks[None, :])
        total += float(coeffs[start:start + _VARIANCE_BLOCK] @ law.moments_of(sym) @ coeffs)
    return total


def variance(poly: TetrahedralPolynomial, law) -> float:
    mean = expectation(poly, law)
    return max(0.0, second_moment(poly, law) - mean * mean)
