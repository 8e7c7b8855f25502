import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.linalg import eigh, null_space

from core.config.env_loader import get_settings
from core.errors import CapacityError
from core.entropy.tensorization import entropy_functional
from core.model.ising import IsingModel, conditional_table
from core.model.law import ExactLaw
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiscreteGradient:
    """Per-site values d_i f(x) >= 0, one row per configuration."""

    values: np.ndarray

    def squared_length(self) -> np.ndarray:
        return np.sum(self.values ** 2, axis=1)

    def length(self) -> np.ndarray:
        return np.sqrt(self.squared_length())


@dataclass(frozen=True)
class FunctionalConstants:
    poincare: float
    lsi: float
    trials: int

    @property
    def c_fit(self) -> float:
        return max(self.poincare, self.lsi)


@dataclass(frozen=True)
class PoincareConstant:
    """Optimal Poincare constant and a function attaining it."""

    value: float
    eigenfunction: np.ndarray


@dataclass(frozen=True)
class MomentCheck:
    p: float
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-15


def discrete_gradient(f: np.ndarray, model: IsingModel, table: Optional[np.ndarray] = None) -> DiscreteGradient:
    """
    d_i f(x) = sqrt(1/2 sum_y (f(x) - f(x with site i set to y))^2 mu_i(y | rest)).

    Only y = -x_i contributes, so d_i f(x)^2 = 1/2 (f(x) - f(x^i))^2 P(sigma_i = -x_i | rest).

    Raises:
        CapacityError: If n exceeds the enumeration cap
    """
    cap = int(get_settings("model")["enumeration_cap"])
    if model.n > cap:
        raise CapacityError(f"n={model.n} exceeds enumeration cap {cap}", module="entropy")
    f = np.asarray(f, dtype=np.float64)
    if table is None:
        table = conditional_table(model, cap=cap)
    index = np.arange(1 << model.n)
    values = np.empty((index.size, model.n))
    for i in range(model.n):
        bit = 1 << i
        flip_prob = np.where(index & bit, table[:, i], 1.0 - table[:, i])
        values[:, i] = np.sqrt(0.5 * (f - f[index ^ bit]) ** 2 * flip_prob)
    return DiscreteGradient(values)


def lp_norm(values: np.ndarray, law: ExactLaw, p: float) -> float:
    return float((law.probs @ np.abs(values) ** p) ** (1.0 / p))


def poincare_ratio(f: np.ndarray, law: ExactLaw, grad: DiscreteGradient) -> float:
    """Var f / E |d f|^2 (0 for constant f)."""
    energy = float(law.probs @ grad.squared_length())
    mean = float(law.probs @ f)
    var = float(law.probs @ (f - mean) ** 2)
    return var / energy if energy > 0 else 0.0


def lsi_ratio(f: np.ndarray, law: ExactLaw, grad: DiscreteGradient) -> float:
    """Ent(f^2) / (2 E |d f|^2) (0 for constant f)."""
    energy = float(law.probs @ grad.squared_length())
    return entropy_functional(np.asarray(f) ** 2, law) / (2.0 * energy) if energy > 0 else 0.0


def dirichlet_matrix(model: IsingModel, law: ExactLaw, table: Optional[np.ndarray] = None) -> np.ndarray:
    """Symmetric L with f^T L f = E |d f|^2 for every table f."""
    if table is None:
        table = conditional_table(model)
    index = np.arange(1 << model.n)
    L = np.zeros((index.size, index.size))
    for i in range(model.n):
        bit = 1 << i
        partner = index ^ bit
        weight = 0.5 * law.probs * np.where(index & bit, table[:, i], 1.0 - table[:, i])
        L[index, index] += weight
        L[partner, partner] += weight
        L[index, partner] -= weight
        L[partner, index] -= weight
    return L


def poincare_constant(model: IsingModel, law: ExactLaw, table: Optional[np.ndarray] = None) -> PoincareConstant:
    """
    Largest Var f / E |d f|^2, as a generalized eigenvalue problem on the
    complement of the constants.

    Raises:
        CapacityError: If n exceeds the 'entropy' exhaustive_max_n setting
    """
    max_n = int(get_settings("entropy")["exhaustive_max_n"])
    if model.n > max_n:
        logger.error(f"Poincare constant for n={model.n} exceeds exhaustive limit {max_n}")
        raise CapacityError(f"n={model.n} exceeds exhaustive limit {max_n}", module="entropy")
    size = 1 << model.n
    basis = null_space(np.ones((1, size)))
    covariance = np.diag(law.probs) - np.outer(law.probs, law.probs)
    values, vectors = eigh(basis.T @ covariance @ basis, basis.T @ dirichlet_matrix(model, law, table) @ basis)
    return PoincareConstant(value=float(values[-1]), eigenfunction=basis @ vectors[:, -1])


def calibrate_functional_constants(model: IsingModel, law: ExactLaw, trials: int = 1000, seed: int = 0,
                                   functions: Iterable[np.ndarray] = ()) -> FunctionalConstants:
    """
    Largest observed Poincare and log-Sobolev ratios over Gaussian random tables
    and any extra function tables supplied. Within the exhaustive limit the
    extremal Poincare eigenfunction joins the candidates.
    """
    table = conditional_table(model)
    rng = np.random.default_rng(RunUtils.derive_seed(seed, "functional_constants"))
    candidates = [rng.normal(size=1 << model.n) for _ in range(trials)]
    candidates += [1.0 + 0.1 * g for g in candidates[: trials // 2]]
    candidates += [np.asarray(f, dtype=np.float64) for f in functions]
    if model.n <= int(get_settings("entropy")["exhaustive_max_n"]):
        candidates.append(poincare_constant(model, law, table).eigenfunction)
    poincare = lsi = 0.0
    for f in candidates:
        grad = discrete_gradient(f, model, table)
        poincare = max(poincare, poincare_ratio(f, law, grad))
        lsi = max(lsi, lsi_ratio(f, law, grad))
    logger.info(f"Calibrated functional constants: Poincare {poincare:.6g}, LSI {lsi:.6g}")
    return FunctionalConstants(poincare=poincare, lsi=lsi, trials=len(candidates))


def moment_comparison(f: np.ndarray, law: ExactLaw, grad: DiscreteGradient, C: float, p: float) -> MomentCheck:
    """||f - E f||_p against sqrt(2 C p) || |d f| ||_p."""
    centered = np.asarray(f, dtype=np.float64) - float(law.probs @ f)
    return MomentCheck(p=p, lhs=lp_norm(centered, law, p), rhs=math.sqrt(2.0 * C * p) * lp_norm(grad.length(), law, p))


def moment_growth(f: np.ndarray, law: ExactLaw, grad: DiscreteGradient, C: float, p: float) -> MomentCheck:
    """||f||_p^2 against ||f||_2^2 + 2 C (p - 2) || |d f| ||_p^2, for p >= 2."""
    f = np.asarray(f, dtype=np.float64)
    lhs = lp_norm(f, law, p) ** 2
    rhs = lp_norm(f, law, 2.0) ** 2 + 2.0 * C * (p - 2.0) * lp_norm(grad.length(), law, p) ** 2
    return MomentCheck(p=p, lhs=lhs, rhs=rhs)
