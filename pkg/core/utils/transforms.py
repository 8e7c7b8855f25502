import logging

import numpy as np

from core.errors import DimensionError

logger = logging.getLogger(__name__)


def table_dimension(length: int) -> int:
    """
    Return n for a table of length 2^n.

    Raises:
        DimensionError: If the length is not a positive power of two
    """
    if length < 1 or length & (length - 1):
        logger.error(f"Table length {length} is not a power of two")
        raise DimensionError(f"table length {length} is not a power of two", module="boolfn")
    return length.bit_length() - 1


def fast_walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """
    Unnormalized fast Walsh-Hadamard transform along the first axis.

    Entry S of the result is sum_x values[x] * (-1)^{popcount(x & S)}. With
    the spin encoding sigma_i = (-1)^{bit i of x}, applying it to a probability
    table gives all moments E prod_{i in S} sigma_i, and applying it to a
    function table and dividing by 2^n gives its Walsh coefficients.

    Args:
        values: Array whose first axis has length 2^n

    Returns:
        A new float array of the same shape
    """
    out = np.array(values, dtype=np.float64, copy=True)
    n = table_dimension(out.shape[0])
    tail = out.shape[1:]
    size = out.shape[0]
    for bit in range(n):
        half = 1 << bit
        view = out.reshape((size // (2 * half), 2, half) + tail)
        low = view[:, 0].copy()
        view[:, 0] += view[:, 1]
        view[:, 1] = low - view[:, 1]
    return out


def popcounts(indices: np.ndarray) -> np.ndarray:
    """Bit counts of an array of nonnegative integers."""
    indices = np.asarray(indices, dtype=np.uint64)
    counts = np.zeros(indices.shape, dtype=np.int64)
    work = indices.copy()
    while np.any(work):
        counts += (work & np.uint64(1)).astype(np.int64)
        work >>= np.uint64(1)
    return counts
