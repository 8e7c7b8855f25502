import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import xlogy

from core.config.env_loader import get_settings
from core.errors import CapacityError, IsingConcError
from core.model.ising import IsingModel, conditional_table, dobrushin_margin
from core.model.law import ExactLaw, exact_law
from core.norms.spectral import top_singular_value
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InfluenceMatrix:
    matrix: np.ndarray
    opnorm: float


@dataclass(frozen=True)
class ATReport:
    """
    Approximate tensorization diagnostics.

    at_constant = 2 / (beta (1 - influence_opnorm)^2) when influence_opnorm < 1,
    otherwise infinite.
    """

    beta: float
    influence_opnorm: float
    at_constant: float
    dobrushin_holds: bool
    rho: float
    alpha: float
    beta_mode: str


@dataclass(frozen=True)
class ATTrial:
    trial: int
    ent: float
    conditional_sum: float
    bound: float
    ratio: float


@dataclass
class ATVerification:
    constant: float
    trials: int
    max_ratio: float
    violations: int
    rows: List[ATTrial] = field(default_factory=list)


def influence_matrix(model: IsingModel) -> InfluenceMatrix:
    """
    Bound matrix |J_ij| on single-flip TV influences, with its l2 operator norm by power iteration.
    """
    matrix = np.abs(np.asarray(model.J))
    np.fill_diagonal(matrix, 0.0)
    return InfluenceMatrix(matrix=matrix, opnorm=top_singular_value(matrix))


def _exhaustive_cap(cap: Optional[int]) -> int:
    return int(get_settings("model")["enumeration_cap"]) if cap is None else cap


def tv_influence(model: IsingModel, cap: Optional[int] = None) -> np.ndarray:
    """
    Exhaustive TV influences: entry (i, j) is the largest TV distance between
    the conditionals of site i at two configurations differing only at site j.
    """
    cap = _exhaustive_cap(cap)
    table = conditional_table(model, cap=cap)
    n = model.n
    index = np.arange(1 << n)
    out = np.zeros((n, n))
    for j in range(n):
        diff = np.abs(table - table[index ^ (1 << j)])
        out[:, j] = diff.max(axis=0)
    np.fill_diagonal(out, 0.0)
    return out


def beta(model: IsingModel, mode: str = "exact", cap: Optional[int] = None) -> float:
    """
    Smallest single-site conditional probability over sites and configurations.

    Args:
        model: The Ising model
        mode: 'exact' enumerates conditionals; 'bound' uses 1/(1 + exp(2((1 - rho) + alpha)))
        cap: Enumeration cap for exact mode

    Raises:
        CapacityError: In exact mode above the cap
    """
    if mode == "bound":
        report = dobrushin_margin(model)
        return float(1.0 / (1.0 + math.exp(2.0 * (report.max_row_sum + report.alpha))))
    if mode != "exact":
        raise IsingConcError(f"unknown beta mode '{mode}'", module="entropy")
    table = conditional_table(model, cap=_exhaustive_cap(cap))
    return float(min(table.min(), (1.0 - table).min()))


def at_report(model: IsingModel, beta_mode: Optional[str] = None) -> ATReport:
    """AT constant from beta and the influence operator norm; beta is exact when enumeration is feasible."""
    if beta_mode is None:
        beta_mode = "exact" if model.n <= _exhaustive_cap(None) else "bound"
    margin = dobrushin_margin(model)
    influence = influence_matrix(model)
    b = beta(model, mode=beta_mode)
    if influence.opnorm < 1.0:
        constant = 2.0 / (b * (1.0 - influence.opnorm) ** 2)
    else:
        constant = math.inf
        logger.warning(f"Influence operator norm {influence.opnorm:.6g} >= 1; AT constant is infinite")
    logger.info(f"AT report: beta={b:.6g} ({beta_mode}), opnorm={influence.opnorm:.6g}, C={constant:.6g}")
    return ATReport(beta=b, influence_opnorm=influence.opnorm, at_constant=constant,
                    dobrushin_holds=margin.holds, rho=margin.rho, alpha=margin.alpha, beta_mode=beta_mode)


def entropy_functional(f: np.ndarray, law: ExactLaw) -> float:
    """
    Ent(f) = E f log f - E f log E f with 0 log 0 = 0.

    Raises:
        IsingConcError: If f has a negative entry
    """
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        logger.error("Entropy requested for a function with negative entries")
        raise IsingConcError("entropy needs a nonnegative function", module="entropy")
    mean = float(law.probs @ f)
    value = float(law.probs @ xlogy(f, f)) - float(xlogy(mean, mean))
    return max(0.0, value)


def conditional_entropy_sum(f: np.ndarray, model: IsingModel, law: ExactLaw,
                            table: Optional[np.ndarray] = None) -> np.ndarray:
    """
    sum_i E_mu Ent_{mu_i(. | rest)}(f) for one function (2^n,) or a batch (m, 2^n).
    """
    f = np.atleast_2d(np.asarray(f, dtype=np.float64))
    if table is None:
        table = conditional_table(model, cap=_exhaustive_cap(None))
    index = np.arange(1 << model.n)
    total = np.zeros(f.shape[0])
    for i in range(model.n):
        bit = 1 << i
        q = table[:, i]
        f_plus = f[:, index & ~bit]
        f_minus = f[:, index | bit]
        mean = q * f_plus + (1.0 - q) * f_minus
        local = q * xlogy(f_plus, f_plus) + (1.0 - q) * xlogy(f_minus, f_minus) - xlogy(mean, mean)
        total += np.maximum(local, 0.0) @ law.probs
    return total


def _batch_entropies(f: np.ndarray, law: ExactLaw) -> np.ndarray:
    means = f @ law.probs
    return np.maximum(xlogy(f, f) @ law.probs - xlogy(means, means), 0.0)


def verify_at(model: IsingModel, trials: Optional[int] = None, seed: Optional[int] = None,
              constant: Optional[float] = None) -> ATVerification:
    """
    Check Ent(f) <= C sum_i E Ent_i(f) on random positive functions f = exp(G), G standard Gaussian.

    Trials run in seeded batches on a thread pool; rows come back in trial order.

    Args:
        model: The Ising model (n limited by the 'entropy' exhaustive_max_n setting)
        trials: Number of random functions (default: config)
        seed: Root seed (default: config)
        constant: C to test (default: the AT constant of the model)

    Returns:
        Verification summary with per-trial rows

    Raises:
        CapacityError: If n exceeds the exhaustive check cap
    """
    settings = get_settings("entropy")
    max_n = int(settings["exhaustive_max_n"])
    if model.n > max_n:
        logger.error(f"AT verification for n={model.n} exceeds cap {max_n}")
        raise CapacityError(f"AT verification needs n <= {max_n}, got {model.n}", module="entropy")
    trials = int(settings["trials"]) if trials is None else int(trials)
    seed = int(settings["seed"]) if seed is None else int(seed)
    if constant is None:
        constant = at_report(model).at_constant
    batch = max(1, int(settings["batch_size"]))

    law = exact_law(model)
    table = conditional_table(model)
    size = 1 << model.n

    def run_batch(start: int):
        count = min(batch, trials - start)
        rng = np.random.default_rng(RunUtils.derive_seed(seed, "verify_at", start))
        f = np.exp(rng.normal(size=(count, size)))
        return _batch_entropies(f, law), conditional_entropy_sum(f, model, law, table)

    workers = RunUtils.worker_count(get_settings("mc").get("threads", 0))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run_batch, range(0, trials, batch)))

    rows: List[ATTrial] = []
    for ents, sums in results:
        for ent, cond in zip(ents, sums):
            bound = constant * cond
            ratio = ent / cond if cond > 0 else 0.0
            rows.append(ATTrial(trial=len(rows), ent=float(ent), conditional_sum=float(cond),
                                bound=float(bound), ratio=float(ratio)))
    violations = sum(1 for row in rows if row.ent > row.bound + 1e-12 * max(1.0, row.bound))
    max_ratio = max((row.ratio for row in rows), default=0.0)
    logger.info(f"AT verification: {trials} trials, max ratio {max_ratio:.6g}, C={constant:.6g}, "
                f"{violations} violations")
    return ATVerification(constant=constant, trials=trials, max_ratio=max_ratio, violations=violations, rows=rows)
