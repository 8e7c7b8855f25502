import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from core.boolfn.polynomial import TetrahedralPolynomial, evaluate
from core.config.env_loader import get_settings
from core.errors import DobrushinViolation, IsingConcError
from core.model.ising import IsingModel, dobrushin_margin
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)


@dataclass
class GlauberChain:
    """
    Random-scan Glauber dynamics on a bundle of independent replicas.

    `states` holds one configuration per row; every sweep performs n single-site
    heat-bath updates in each replica. The trajectory is a function of the seed.
    """

    model: IsingModel
    seed: int
    replicas: int = 1
    states: Optional[np.ndarray] = None
    sweeps: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.replicas < 1:
            raise IsingConcError("a chain needs at least one replica", module="mc")
        self.rng = np.random.default_rng(self.seed)
        if self.states is None:
            self.states = np.where(self.rng.random((self.replicas, self.model.n)) < 0.5, 1, -1).astype(np.int8)
        else:
            states = np.atleast_2d(np.asarray(self.states)).astype(np.int8)
            if states.shape[1] != self.model.n or not np.all(np.abs(states) == 1):
                raise IsingConcError("initial states must be spin configurations of the model", module="mc")
            self.states = np.repeat(states, self.replicas, axis=0) if states.shape[0] == 1 else states
            self.replicas = self.states.shape[0]

    @property
    def state(self) -> np.ndarray:
        return self.states[0]


def glauber_sweep(chain: GlauberChain) -> GlauberChain:
    """n updates per replica, each at a uniformly random site resampled from its conditional."""
    J, h = chain.model.J, chain.model.h
    n = chain.model.n
    rows = np.arange(chain.replicas)
    for _ in range(n):
        sites = chain.rng.integers(0, n, size=chain.replicas)
        fields = np.einsum("ij,ij->i", J[sites], chain.states) - h[sites]
        u = chain.rng.random(chain.replicas)
        chain.states[rows, sites] = np.where(u < expit(2.0 * fields), 1, -1)
    chain.sweeps += 1
    return chain


def burn_in_sweeps(model: IsingModel, factor: Optional[float] = None) -> int:
    """
    ceil(factor * n log 2 / rho) sweeps.

    Raises:
        DobrushinViolation: If rho <= 0
    """
    factor = float(get_settings("mc")["burn_in_factor"]) if factor is None else float(factor)
    rho = dobrushin_margin(model).rho
    if rho <= 0:
        raise DobrushinViolation(f"no burn-in schedule for rho={rho:.6g} <= 0; pass an explicit burn-in with force")
    return int(math.ceil(factor * model.n * math.log(2.0) / rho))


def thinning_sweeps(model: IsingModel) -> int:
    """Auto thinning: ceil(3 / rho) sweeps between recorded states."""
    rho = dobrushin_margin(model).rho
    return max(1, int(math.ceil(3.0 / rho))) if rho > 0 else 1


@dataclass(frozen=True)
class SampleResult:
    values: np.ndarray
    chain_means: Tuple[float, ...]
    burn_in: int
    thinning: int
    seeds: Tuple[int, ...]

    @property
    def mean_spread(self) -> float:
        """Largest minus smallest per-chain mean."""
        return max(self.chain_means) - min(self.chain_means) if self.chain_means else 0.0

    @property
    def stderr(self) -> float:
        return float(np.std(self.values, ddof=1) / math.sqrt(self.values.size)) if self.values.size > 1 else 0.0


def _schedule(model: IsingModel, burn_in: Optional[int], thinning: Optional[int], force: bool) -> Tuple[int, int]:
    margin = dobrushin_margin(model)
    if not margin.holds:
        if not force:
            logger.error(f"Refusing to sample a model with rho={margin.rho:.6g}")
            raise DobrushinViolation(f"Dobrushin condition fails (rho={margin.rho:.6g}); use force to sample anyway")
        if burn_in is None:
            raise DobrushinViolation("sampling outside the Dobrushin regime needs an explicit burn-in")
        logger.warning(f"Sampling outside the Dobrushin regime (rho={margin.rho:.6g})")
    settings = get_settings("mc")
    if burn_in is None:
        burn_in = burn_in_sweeps(model)
    if thinning is None:
        configured = int(settings["thinning"])
        thinning = configured if configured > 0 else thinning_sweeps(model)
    if burn_in < 0 or thinning < 1:
        raise IsingConcError("burn-in must be nonnegative and thinning positive", module="mc")
    return int(burn_in), int(thinning)


def sample_states(model: IsingModel, samples: int, burn_in: Optional[int] = None, thinning: Optional[int] = None,
                  seed: Optional[int] = None, replicas: Optional[int] = None, chains: Optional[int] = None,
                  force: bool = False) -> Tuple[np.ndarray, int, int, Tuple[int, ...], List[int]]:
    """
    Post-burn-in states from independent chains, concatenated in chain order.

    Chain c draws its seed from (seed, 'chain', c) and contributes an equal
    share of the samples; the share of the remainder goes to the lowest indices.
    Worker scheduling does not affect the result.

    Returns:
        (states, burn_in, thinning, seeds, per-chain counts)
    """
    if samples < 1:
        raise IsingConcError("sample count must be positive", module="mc")
    settings = get_settings("mc")
    burn_in, thinning = _schedule(model, burn_in, thinning, force)
    seed = int(settings["seed"]) if seed is None else int(seed)
    replicas = int(settings["replicas"]) if replicas is None else int(replicas)
    chains = int(settings["chains"]) if chains is None else int(chains)
    chains = max(1, min(chains, samples))
    counts = [samples // chains + (1 if c < samples % chains else 0) for c in range(chains)]
    seeds = tuple(RunUtils.derive_seed(seed, "chain", c) for c in range(chains))

    def run_chain(c: int) -> np.ndarray:
        count = counts[c]
        chain = GlauberChain(model, seeds[c], replicas=min(replicas, count))
        for _ in range(burn_in):
            glauber_sweep(chain)
        recorded = []
        total = 0
        while total < count:
            for _ in range(thinning):
                glauber_sweep(chain)
            recorded.append(chain.states.copy())
            total += chain.replicas
        return np.concatenate(recorded)[:count]

    workers = RunUtils.worker_count(settings.get("threads", 0))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run_chain, range(chains)))
    logger.info(f"Sampled {samples} states from {chains} chains (burn-in {burn_in}, thinning {thinning})")
    return np.concatenate(parts), burn_in, thinning, seeds, counts


def sample_statistic(model: IsingModel, poly: TetrahedralPolynomial, samples: Optional[int] = None,
                     burn_in: Optional[int] = None, thinning: Optional[int] = None, seed: Optional[int] = None,
                     replicas: Optional[int] = None, chains: Optional[int] = None,
                     force: bool = False) -> SampleResult:
    """
    Values f(X) for Glauber samples X, with per-chain means as a mixing diagnostic.

    Raises:
        DobrushinViolation: If rho <= 0 and force is not set
        DimensionError: If poly lives on a different number of variables
    """
    samples = int(get_settings("mc")["samples"]) if samples is None else int(samples)
    states, burn_in, thinning, seeds, counts = sample_states(model, samples, burn_in, thinning, seed,
                                                             replicas, chains, force)
    values = np.asarray(evaluate(poly, states), dtype=np.float64)
    bounds = np.cumsum([0] + counts)
    chain_means = tuple(float(values[a:b].mean()) for a, b in zip(bounds[:-1], bounds[1:]))
    return SampleResult(values=values, chain_means=chain_means, burn_in=burn_in, thinning=thinning, seeds=seeds)


def state_law_distance(states: np.ndarray, law) -> float:
    """Total variation distance between empirical state frequencies and an exact law."""
    states = np.asarray(states)
    n = states.shape[1]
    if law.n != n:
        raise IsingConcError(f"states have {n} sites, law has {law.n}", module="mc")
    index = ((states < 0).astype(np.int64) << np.arange(n, dtype=np.int64)).sum(axis=1)
    empirical = np.bincount(index, minlength=1 << n) / states.shape[0]
    return 0.5 * float(np.abs(empirical - law.probs).sum())
