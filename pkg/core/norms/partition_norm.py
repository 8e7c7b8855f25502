import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.boolfn.tensors import as_tensor
from core.config.env_loader import get_settings
from core.errors import InvalidPartitionError
from core.norms.partitions import Partition, all_partitions
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormResult:
    """
    Certified lower bound of a norm given as a supremum, with its maximizer.

    value is the objective evaluated at witness; it is exact when `exact`
    is set (closed forms) and a certified lower bound otherwise.
    """

    value: float
    witness: Tuple[np.ndarray, ...]
    converged: bool
    restarts_used: int
    exact: bool = False
    label: str = ""
    sweeps: int = 0
    restart_values: Tuple[float, ...] = field(default=())


def block_tensor(A: np.ndarray, I: Partition) -> np.ndarray:
    """Reshape a d-way array into a |I|-way array with one mode of size n^{|block|} per block."""
    n = A.shape[0]
    return np.transpose(A, I.axes()).reshape(tuple(n ** len(b) for b in I.blocks))


def _contract_except(M: np.ndarray, vectors: Sequence[np.ndarray], free: int) -> np.ndarray:
    out = np.moveaxis(M, free, 0)
    for l in reversed(range(len(vectors))):
        if l != free:
            out = out @ vectors[l]
    return out


def multilinear_form(A, I: Partition, witness: Sequence[np.ndarray]) -> float:
    """
    Evaluate sum_i a_i prod_l x^(l)_{i_{I_l}} at block vectors given in block order.
    """
    M = block_tensor(as_tensor(A).entries, I)
    out = M
    for vector in reversed(witness):
        out = out @ np.asarray(vector, dtype=np.float64)
    return float(out)


def embed_witness(witness: Sequence[np.ndarray], fine: Partition, coarse: Partition, n: int) -> List[np.ndarray]:
    """
    Merge block vectors of a fine partition into block vectors of a coarser one.

    Each coarse block vector is the outer product of the fine block vectors it
    contains, with axes put back in increasing index order; unit vectors give
    unit vectors, so the result is feasible for the coarse partition.

    Raises:
        InvalidPartitionError: If fine does not refine coarse
    """
    if not fine.refines(coarse):
        raise InvalidPartitionError(f"{fine} does not refine {coarse}")
    merged = []
    for block in coarse.blocks:
        parts = [(b, witness[k]) for k, b in enumerate(fine.blocks) if set(b) <= set(block)]
        order = [i for b, _ in parts for i in b]
        tensor = np.ones(())
        for b, vector in parts:
            tensor = np.multiply.outer(tensor, np.asarray(vector).reshape((n,) * len(b)))
        perm = [order.index(i) for i in block]
        merged.append(np.transpose(tensor, perm).reshape(-1))
    return merged


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 0 else vector


def _alternating_run(M: np.ndarray, start: List[np.ndarray], tol: float, patience: int,
                     max_sweeps: int) -> Tuple[float, List[np.ndarray], bool, int]:
    vectors = [_unit(v.copy()) for v in start]
    value = -np.inf
    quiet = 0
    for sweep in range(1, max_sweeps + 1):
        for l in range(len(vectors)):
            g = _contract_except(M, vectors, l)
            if np.linalg.norm(g) > 0:
                vectors[l] = _unit(g)
        current = float(_contract_except(M, vectors, 0) @ vectors[0])
        quiet = quiet + 1 if current - value <= tol * abs(current) else 0
        value = max(value, current)
        if quiet >= patience:
            return value, vectors, True, sweep
    return value, vectors, False, max_sweeps


def _hosvd_start(M: np.ndarray) -> List[np.ndarray]:
    start = []
    for l in range(M.ndim):
        unfolding = np.moveaxis(M, l, 0).reshape(M.shape[l], -1)
        u, _, _ = np.linalg.svd(unfolding, full_matrices=False)
        start.append(u[:, 0].copy())
    return start


def partition_norm(A, I: Partition, restarts: Optional[int] = None, seed: Optional[int] = None,
                   warm_starts: Sequence[Sequence[np.ndarray]] = ()) -> NormResult:
    """
    Partition norm of a symmetric tensor.

    A single block gives the Frobenius norm and two blocks the top singular
    value of the block matricization, both exact. Three or more blocks use
    alternating maximization: each free block is set to the normalized
    contraction of A against the others. Restarts run in a thread pool with
    per-restart seeds derived from the root seed; the best certified value
    wins, ties going to the lowest restart index.

    Args:
        A: Symmetric tensor (or array) of order d
        I: Partition of {1..d}
        restarts: Random restarts (default: 'norms' config section)
        seed: Root seed (default: 'norms' config section)
        warm_starts: Extra feasible starting witnesses (e.g., embedded from finer partitions)

    Returns:
        The certified NormResult

    Raises:
        InvalidPartitionError: If I does not partition {1..d}
    """
    tensor = as_tensor(A)
    if I.d != tensor.d:
        logger.error(f"Partition {I} does not match tensor order {tensor.d}")
        raise InvalidPartitionError(f"partition {I} is not a partition of {{1..{tensor.d}}}")
    M = block_tensor(tensor.entries, I)
    label = str(I)

    if I.size == 1:
        flat = M.reshape(-1)
        value = float(np.linalg.norm(flat))
        return NormResult(value, (_unit(flat),), True, 0, exact=True, label=label)

    if I.size == 2:
        u, s, vt = np.linalg.svd(M, full_matrices=False)
        witness = (u[:, 0].copy(), vt[0].copy())
        value = float(witness[0] @ M @ witness[1])
        if value < 0:
            witness = (-witness[0], witness[1])
            value = -value
        return NormResult(float(s[0]), witness, True, 0, exact=True, label=label)

    settings = get_settings("norms")
    restarts = int(settings["restarts"]) if restarts is None else int(restarts)
    seed = int(settings["seed"]) if seed is None else int(seed)
    tol = float(settings["tolerance"])
    patience = int(settings["patience"])
    max_sweeps = int(settings["max_sweeps"])

    starts = [_hosvd_start(M)] + [[np.asarray(v, dtype=np.float64) for v in w] for w in warm_starts]
    for r in range(restarts):
        rng = np.random.default_rng(RunUtils.derive_seed(seed, "partition_norm", label, r))
        starts.append([rng.normal(size=size) for size in M.shape])

    workers = RunUtils.worker_count(settings.get("threads", 0))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        runs = list(pool.map(lambda s: _alternating_run(M, s, tol, patience, max_sweeps), starts))

    certified = []
    for _, vectors, _, _ in runs:
        value = float(_contract_except(M, vectors, 0) @ vectors[0])
        if value < 0:
            vectors = [-vectors[0]] + vectors[1:]
            value = -value
        certified.append((value, vectors))
    best = int(np.argmax([value for value, _ in certified]))
    value, vectors = certified[best]
    logger.debug(f"Partition norm {label}: {value:.12g} from {len(starts)} starts (best #{best})")
    return NormResult(value, tuple(vectors), all(run[2] for run in runs), len(starts), exact=False,
                      label=label, sweeps=sum(run[3] for run in runs),
                      restart_values=tuple(v for v, _ in certified))


def all_partition_norms(A, restarts: Optional[int] = None, seed: Optional[int] = None) -> Dict[Partition, NormResult]:
    """
    Norms for every partition of {1..d}, finest first.

    Witnesses of finer partitions are embedded as warm starts for coarser
    ones, so certified values are monotone under refinement.
    """
    tensor = as_tensor(A)
    results: Dict[Partition, NormResult] = {}
    for I in sorted(all_partitions(tensor.d), key=lambda p: (-p.size, str(p))):
        warm = [embed_witness(res.witness, fine, I, tensor.n)
                for fine, res in results.items() if fine != I and fine.refines(I)]
        results[I] = partition_norm(tensor, I, restarts=restarts, seed=seed, warm_starts=warm)
    return results
