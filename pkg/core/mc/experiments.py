"""
Built-in reproductions and the two-seed envelope protocol.

The protocol calibrates each bound's constant on one seed and validates it on
fresh samples from a second seed; the negative control tightens the constant
of the heaviest-tailed case by a factor of two and must register violations.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.boolfn.derivatives import expectation, expected_derivative, variance
from core.boolfn.polynomial import TetrahedralPolynomial, from_tensor, indices_mask, linear_form, quadratic_form
from core.boolfn.tensors import SymmetricTensor, off_diagonal_mask, symmetrize
from core.bounds.calibration import Calibration, calibrate_constant
from core.bounds.quadratic import quad_lower_tail, quad_profile, quad_upper_tail
from core.bounds.tail import TailBound, degree3_drift, multilevel_tail
from core.config.env_loader import get_settings
from core.mc.glauber import sample_states, sample_statistic
from core.mc.tails import EnvelopeReport, SurvivalCurve, empirical_tail, fit_exponent, validate_envelope
from core.model.ising import IsingModel, chain_model, random_dobrushin_model
from core.model.law import ChainLaw, exact_law
from core.norms.interpolation import latala_vector_norm, rearrangement_sandwich
from core.norms.partition_norm import all_partition_norms
from core.norms.partitions import parse_partition
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)

EXAMPLE25_GRID = (12, 18, 24, 36, 48)
SUITE_N = 8
T_MULTIPLES = tuple(0.25 * k for k in range(1, 21))


def example25_polynomial(n: int) -> TetrahedralPolynomial:
    """f = sum over i < j < n - 1 of x_i x_j x_{j+1} (0-based)."""
    coeffs = {}
    for j in range(1, n - 1):
        for i in range(j):
            coeffs[indices_mask((i, j, j + 1))] = 1.0
    return TetrahedralPolynomial(n, coeffs)


def example25_quantities(n: int, coupling: float = 1.0 / 3.0, restarts: Optional[int] = None,
                         seed: Optional[int] = None) -> Dict[str, float]:
    """Norms of the cubic interval statistic on the zero-field chain, from closed-form moments."""
    poly = example25_polynomial(n)
    law = ChainLaw(n, coupling)
    tensor = expected_derivative(poly, 3, law)
    norms = all_partition_norms(tensor, restarts=restarts, seed=seed)
    return {
        "n": float(n),
        "{1,2,3}": norms[parse_partition("{1,2,3}")].value,
        "{1,2}{3}": norms[parse_partition("{1,2}{3}")].value,
        "{1}{2}{3}": norms[parse_partition("{1}{2}{3}")].value,
        "drift": degree3_drift(tensor, law),
        "variance": variance(poly, law),
    }


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    corrected: float


def example25_slopes(n_grid: Sequence[int] = EXAMPLE25_GRID, restarts: Optional[int] = None,
                     seed: Optional[int] = None) -> Tuple[List[Dict[str, float]], Dict[str, ExponentFit]]:
    """
    Plain log-log slopes and constant-offset corrected exponents of each quantity.

    n is bounded by the 64-bit state masks, so the grid stays short and the
    lower-order terms of ||A||_{1}{2}{3} still bend its plain slope upwards.
    """
    rows = [example25_quantities(n, restarts=restarts, seed=seed) for n in n_grid]
    slopes = {}
    for key in rows[0]:
        if key == "n":
            continue
        values = [row[key] for row in rows]
        slopes[key] = ExponentFit(fit_exponent(values, n_grid), fit_exponent(values, n_grid, offset=True))
    logger.info("Cubic interval statistic exponents: "
                + ", ".join(f"{k}={v.slope:.4g} ({v.corrected:.4g})" for k, v in slopes.items()))
    return rows, slopes


def example25_crossover(n: int) -> float:
    """t where t^2 / n^3 = t^(2/3) / n^(1/3), i.e. t = n^2."""
    return float(n) ** 2


@dataclass(frozen=True)
class BondLawReport:
    n: int
    coupling: float
    exact_plus: float
    enumerated_plus: Tuple[float, ...]
    max_dependence: float
    empirical_plus: Tuple[float, ...]
    exact_mean: float
    empirical_mean: float
    stderr: float
    samples: int


def bond_moments(n: int, coupling: float = 1.0 / 3.0) -> Tuple[np.ndarray, float]:
    """
    P(bond b = +1) for every bond and the largest |P(b+, c+) - P(b+) P(c+)| over bond pairs,
    both from moments of the chain law (enumerated when n is within the enumeration cap).
    """
    model = chain_model(n, coupling)
    law = exact_law(model) if n <= int(get_settings("model")["enumeration_cap"]) else ChainLaw(n, coupling)
    bond_masks = np.array([(1 << b) | (1 << (b + 1)) for b in range(n - 1)], dtype=np.int64)
    means = law.moments_of(bond_masks)
    plus = (1.0 + means) / 2.0
    dependence = 0.0
    for b in range(n - 1):
        for c in range(b + 1, n - 1):
            joint_mean = float(law.moments_of(np.array([bond_masks[b] ^ bond_masks[c]], dtype=np.int64))[0])
            joint_plus = (1.0 + means[b] + means[c] + joint_mean) / 4.0
            dependence = max(dependence, abs(joint_plus - plus[b] * plus[c]))
    return plus, dependence


def bond_law(n: int = 8, coupling: float = 1.0 / 3.0, samples: Optional[int] = None,
             seed: Optional[int] = None) -> BondLawReport:
    """
    Bond variables sigma_b sigma_{b+1} of the zero-field chain are i.i.d. signs with
    P(+1) = 1 / (1 + exp(-2 coupling)); the closed form is checked against the law's
    moments and against Glauber samples.
    """
    samples = int(get_settings("mc")["samples"]) if samples is None else int(samples)
    model = chain_model(n, coupling)
    enumerated, dependence = bond_moments(n, coupling)
    states, _, _, _, _ = sample_states(model, samples, seed=seed)
    bonds = states[:, :-1].astype(np.int64) * states[:, 1:]
    first = bonds[:, 0].astype(np.float64)
    return BondLawReport(
        n=n,
        coupling=coupling,
        exact_plus=1.0 / (1.0 + math.exp(-2.0 * coupling)),
        enumerated_plus=tuple(float(v) for v in enumerated),
        max_dependence=dependence,
        empirical_plus=tuple(float(v) for v in (bonds > 0).mean(axis=0)),
        exact_mean=2.0 / (1.0 + math.exp(-2.0 * coupling)) - 1.0,
        empirical_mean=float(first.mean()),
        stderr=float(first.std(ddof=1) / math.sqrt(first.size)),
        samples=samples,
    )


def gumbel_matrix(n: int) -> np.ndarray:
    """a_ij = 1 / (i + j)^2 with 1-based indices; nonnegative definite."""
    idx = np.arange(1, n + 1, dtype=np.float64)
    return 1.0 / (idx[:, None] + idx[None, :]) ** 2


def gumbel_profile(n: int = 64, p_grid: Optional[Sequence[float]] = None,
                   restarts: Optional[int] = None, seed: Optional[int] = None) -> Tuple[List[Dict[str, float]], float]:
    """
    Quadratic-form thresholds of the 1/(i+j)^2 matrix; their growth in log p gives
    a doubly exponential tail. Returns the rows and the slope of the upper threshold in log p.
    """
    rows = [{"p": row.p, "{1,2},p": row.norm_12p, "{1}{2},p": row.norm_1_2p, "upper": row.upper,
             "log_p": math.log(row.p)}
            for row in quad_profile(gumbel_matrix(n), p_grid, restarts=restarts, seed=seed)]
    usable = [row for row in rows if row["p"] >= 1.0]
    slope = float(np.polyfit([row["log_p"] for row in usable], [row["upper"] for row in usable], 1)[0])
    return rows, slope


def harmonic_profile(n: int = 4096, p_grid: Optional[Sequence[float]] = None) -> List[Dict[str, float]]:
    """||a||_{{1},p} for a = (1, 1/2, ..., 1/n) with the rearrangement estimate alongside."""
    a = 1.0 / np.arange(1, n + 1, dtype=np.float64)
    grid = get_settings("bounds")["p_grid"] if p_grid is None else p_grid
    rows = []
    for p in grid:
        head, tail, total = rearrangement_sandwich(a, p)
        rows.append({"p": float(p), "norm": latala_vector_norm(a, p), "head": head, "tail": tail,
                     "sandwich": total, "log_p": math.log(p)})
    return rows


@dataclass(frozen=True)
class EnvelopeCase:
    name: str
    model: IsingModel
    poly: TetrahedralPolynomial
    build: Callable[[object], TailBound]
    side: str = "two-sided"


@dataclass
class CaseResult:
    name: str
    calibration: Calibration
    report: EnvelopeReport
    train: SurvivalCurve
    test: SurvivalCurve


@dataclass
class ProtocolResult:
    cases: List[CaseResult] = field(default_factory=list)
    control: Optional[CaseResult] = None

    @property
    def violations(self) -> int:
        return sum(case.report.violations for case in self.cases)

    @property
    def control_violations(self) -> int:
        return self.control.report.violations if self.control else 0

    @property
    def passed(self) -> bool:
        return self.violations == 0 and (self.control is None or self.control_violations >= 1)


def _random_poly(n: int, degree: int, seed: int) -> TetrahedralPolynomial:
    rng = np.random.default_rng(RunUtils.derive_seed(seed, "suite", degree))
    if degree == 1:
        return linear_form(rng.normal(size=n) / math.sqrt(n))
    upper = rng.normal(size=(n,) * degree)
    entries = symmetrize(upper) * off_diagonal_mask(n, degree) / n ** (degree / 2.0)
    tensor = SymmetricTensor(entries, tetrahedral=True)
    return from_tensor(tensor)


def _psd_matrix(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(RunUtils.derive_seed(seed, "suite", "psd"))
    G = rng.normal(size=(n, n)) / math.sqrt(n)
    return G @ G.T / n


def envelope_suite(n: int = SUITE_N, seed: int = 2024) -> List[EnvelopeCase]:
    """
    Nine multilevel cases (linear, quadratic and cubic statistics on product,
    chain and random Dobrushin models) and three one-sided quadratic-form cases.
    """
    models = {
        "product": IsingModel(np.zeros((n, n)), np.zeros(n), name="product"),
        "chain": chain_model(n),
        "random": random_dobrushin_model(n, row_mass=0.7, field_scale=0.1, seed=seed),
    }
    cases = []
    for degree, label in ((1, "linear"), (2, "quadratic"), (3, "cubic")):
        poly = _random_poly(n, degree, seed)
        for model_name, model in models.items():
            cases.append(EnvelopeCase(f"{label}/{model_name}", model, poly,
                                      lambda law, poly=poly: multilevel_tail(poly, law)))
    centered = random_dobrushin_model(n, row_mass=0.7, seed=seed)
    quads = (
        ("quad-upper/product", models["product"], _psd_matrix(n, seed), quad_upper_tail, "upper"),
        ("quad-upper/chain", models["chain"], gumbel_matrix(n), quad_upper_tail, "upper"),
        ("quad-lower/random", centered, _psd_matrix(n, seed + 1), quad_lower_tail, "lower"),
    )
    for name, model, A, builder, side in quads:
        cases.append(EnvelopeCase(name, model, quadratic_form(A), lambda law, A=A, builder=builder: builder(A),
                                  side=side))
    return cases


def _curve(case: EnvelopeCase, law, t_grid: np.ndarray, samples: int, seed: int, **sampling) -> SurvivalCurve:
    values = sample_statistic(case.model, case.poly, samples=samples, seed=seed, **sampling).values
    return empirical_tail(values, t_grid, side=case.side, center=expectation(case.poly, law))


def run_case(case: EnvelopeCase, train_seed: int, test_seed: int, samples: Optional[int] = None,
             tighten: float = 1.0, t_grid: Optional[Sequence[float]] = None, **sampling) -> CaseResult:
    """
    Calibrate on train_seed, then check the calibrated bound on fresh samples from test_seed.

    The default t-grid is a multiple of the exact standard deviation, so both seeds share it.
    `tighten` multiplies the calibrated parameter before validation; extra keyword
    arguments (burn_in, thinning, replicas, force) go to the sampler.
    """
    samples = int(get_settings("mc")["samples"]) if samples is None else int(samples)
    law = exact_law(case.model)
    if t_grid is None:
        sd = math.sqrt(max(variance(case.poly, law), 0.0))
        t_grid = np.array(T_MULTIPLES) * (sd if sd > 0 else 1.0)
    t_grid = np.asarray(t_grid, dtype=np.float64)
    sampling = {key: value for key, value in sampling.items() if value is not None}
    bound = case.build(law)
    train = _curve(case, law, t_grid, samples, train_seed, **sampling)
    calibration = calibrate_constant(bound, train)
    fitted = bound.with_calibration(calibration.value * tighten)
    test = _curve(case, law, t_grid, samples, test_seed, **sampling)
    report = validate_envelope(test, fitted.curve(t_grid))
    report.calibration = calibration
    logger.info(f"Envelope case {case.name}: {calibration.name}={calibration.value:.6g}, "
                f"{report.violations} violations on the validation seed")
    return CaseResult(case.name, calibration, report, train, test)


def run_protocol(cases: Optional[Sequence[EnvelopeCase]] = None, train_seed: Optional[int] = None,
                 test_seed: Optional[int] = None, samples: Optional[int] = None,
                 negative_control: bool = True) -> ProtocolResult:
    """
    Two-seed envelope protocol over a suite of cases.

    The negative control reruns the case with the smallest uncapped calibrated
    parameter (the heaviest tail relative to its bound) with that parameter doubled.
    """
    settings = get_settings("mc")
    train_seed = int(settings["seed"]) if train_seed is None else int(train_seed)
    test_seed = int(settings["validation_seed"]) if test_seed is None else int(test_seed)
    cases = list(envelope_suite() if cases is None else cases)
    result = ProtocolResult()
    for case in cases:
        result.cases.append(run_case(case, train_seed, test_seed, samples))
    if negative_control:
        uncapped = [(res.calibration.value, k) for k, res in enumerate(result.cases) if not res.calibration.capped]
        if uncapped:
            _, heaviest = min(uncapped)
            result.control = run_case(cases[heaviest], train_seed, test_seed, samples, tighten=2.0)
            logger.info(f"Negative control on {cases[heaviest].name}: {result.control_violations} violations")
    if result.violations:
        logger.warning(f"Envelope protocol: {result.violations} violations across {len(result.cases)} cases")
    return result
