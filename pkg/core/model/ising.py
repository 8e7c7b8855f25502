import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import expit

from core.errors import IsingConcError, CapacityError

logger = logging.getLogger(__name__)

SYMMETRY_ATOL = 0.0


@dataclass(frozen=True, eq=False)
class IsingModel:
    """
    Ising measure mu(sigma) proportional to exp(1/2 sum_ij J_ij s_i s_j - sum_i h_i s_i).

    J is a symmetric n x n coupling matrix with zero diagonal and h the
    external field. Arrays are copied and made read-only on construction.
    Sites are 0-based throughout the library.
    """

    J: np.ndarray
    h: np.ndarray
    name: str = field(default="")

    def __post_init__(self):
        J = np.array(self.J, dtype=np.float64, copy=True)
        h = np.array(self.h, dtype=np.float64, copy=True).reshape(-1)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise IsingConcError(f"J must be square, got shape {J.shape}", module="model")
        n = J.shape[0]
        if n < 1:
            raise IsingConcError("model needs at least one spin", module="model")
        if h.shape != (n,):
            raise IsingConcError(f"h has length {h.shape[0]}, expected {n}", module="model")
        if not (np.all(np.isfinite(J)) and np.all(np.isfinite(h))):
            raise IsingConcError("J and h must be finite", module="model")
        if np.any(np.diag(J) != 0.0):
            raise IsingConcError("J must have a vanishing diagonal", module="model")
        if not np.array_equal(J, J.T):
            raise IsingConcError("J must be symmetric", module="model")
        J.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    def permuted(self, order) -> "IsingModel":
        """Relabel sites: new site k is old site order[k]."""
        order = np.asarray(order)
        return IsingModel(self.J[np.ix_(order, order)], self.h[order], name=self.name)


@dataclass(frozen=True)
class DobrushinReport:
    rho: float
    alpha: float
    max_row_sum: float
    holds: bool

    def __float__(self) -> float:
        return self.rho


def dobrushin_margin(model: IsingModel) -> DobrushinReport:
    """
    Dobrushin margin rho = 1 - max_i sum_j |J_ij| and field size alpha = max_i |h_i|.

    A non-positive margin is a valid result; it is flagged with holds=False.
    """
    row_sums = np.abs(model.J).sum(axis=1)
    max_row = float(np.max(row_sums))
    rho = 1.0 - max_row
    alpha = float(np.max(np.abs(model.h)))
    report = DobrushinReport(rho=rho, alpha=alpha, max_row_sum=max_row, holds=rho > 0)
    if not report.holds:
        logger.warning(f"Dobrushin condition fails: rho={rho:.6g}")
    return report


def local_fields(model: IsingModel, spins: np.ndarray) -> np.ndarray:
    """
    Local fields m_i = sum_j J_ij s_j - h_i for one configuration or a batch (..., n).
    """
    spins = np.asarray(spins, dtype=np.float64)
    return spins @ model.J - model.h


def conditional_plus_prob(model: IsingModel, i: int, config: np.ndarray) -> float:
    """
    P(sigma_i = +1 | all other spins) = 1 / (1 + exp(-2 m_i)).

    Args:
        model: The Ising model
        i: Site index, 0-based
        config: Spin configuration; its i-th entry is ignored

    Returns:
        A probability in (0, 1)

    Raises:
        IndexError: If i is not a site of the model
    """
    if not 0 <= i < model.n:
        raise IndexError(f"site {i} out of range for n={model.n}")
    spins = np.asarray(config, dtype=np.float64)
    if spins.shape != (model.n,):
        raise IsingConcError(f"configuration has shape {spins.shape}, expected ({model.n},)", module="model")
    field_i = float(model.J[i] @ spins - model.h[i])
    return float(expit(2.0 * field_i))


def spins_table(n: int, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """
    Spin configurations for bit-encoded indices [start, stop).

    Index x encodes sigma_i = (-1)^{bit i of x}, so bit 0 means spin +1.
    """
    if stop is None:
        stop = 1 << n
    indices = np.arange(start, stop, dtype=np.int64)
    bits = (indices[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def config_index(config: Union[np.ndarray, list]) -> int:
    """Inverse of spins_table: bit index of a configuration."""
    spins = np.asarray(config)
    return int(sum(1 << i for i, s in enumerate(spins) if s < 0))


def conditional_table(model: IsingModel, cap: int = 20) -> np.ndarray:
    """
    Table of P(sigma_i = +1 | rest) for every configuration (rows) and site (columns).
    """
    if model.n > cap:
        logger.error(f"Conditional table for n={model.n} exceeds cap {cap}")
        raise CapacityError(f"n={model.n} exceeds enumeration cap {cap}", module="model")
    return expit(2.0 * local_fields(model, spins_table(model.n)))


def chain_model(n: int, coupling: float = 1.0 / 3.0, field: float = 0.0) -> IsingModel:
    """
    One-dimensional interval model with J_{i,i+1} = J_{i+1,i} = coupling and uniform field.
    """
    J = np.zeros((n, n))
    idx = np.arange(n - 1)
    J[idx, idx + 1] = coupling
    J[idx + 1, idx] = coupling
    return IsingModel(J, np.full(n, float(field)), name=f"chain-{n}")


def random_dobrushin_model(n: int, row_mass: float = 0.7, field_scale: float = 0.0,
                           seed: int = 0, density: float = 1.0) -> IsingModel:
    """
    Random symmetric couplings scaled so that the largest row l1 mass equals row_mass.

    Args:
        n: Number of spins
        row_mass: Target max_i sum_j |J_ij| (the margin is 1 - row_mass)
        field_scale: Fields are uniform on [-field_scale, field_scale]
        seed: Seed for numpy's default generator
        density: Probability that a pair interacts

    Returns:
        The random model
    """
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.normal(size=(n, n)), k=1)
    if density < 1.0:
        upper *= np.triu(rng.random((n, n)) < density, k=1)
    J = upper + upper.T
    max_row = np.abs(J).sum(axis=1).max()
    if max_row > 0:
        J *= row_mass / max_row
    h = rng.uniform(-field_scale, field_scale, size=n) if field_scale > 0 else np.zeros(n)
    return IsingModel(J, h, name=f"random-{n}-{seed}")
