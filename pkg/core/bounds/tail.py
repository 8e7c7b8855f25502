import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from core.boolfn.derivatives import expected_derivative
from core.boolfn.polynomial import TetrahedralPolynomial
from core.boolfn.tensors import as_tensor
from core.config.env_loader import get_settings
from core.errors import CapacityError, IsingConcError
from core.norms.partition_norm import all_partition_norms
from core.norms.partitions import parse_partition
from core.norms.spectral import top_singular_value

logger = logging.getLogger(__name__)

# Levels whose norm is below this fraction of the largest norm impose no constraint.
ZERO_NORM_RTOL = 1e-10


class BoundKind(enum.Enum):
    MULTILEVEL = "multilevel"
    LINFTY = "linfty"
    HANSON_WRIGHT = "hanson_wright"
    BONAMI = "bonami"
    DEGREE3 = "degree3"
    QUADRATIC_MEAN = "quadratic_mean"
    CONVEX_PLP = "convex_plp"
    QUAD_UPPER = "quad_upper"
    QUAD_LOWER = "quad_lower"


PROFILE_KINDS = (BoundKind.CONVEX_PLP, BoundKind.QUAD_UPPER, BoundKind.QUAD_LOWER)


@dataclass(frozen=True)
class Level:
    """One term of a minimum: (t / norm)^(2 / exponent) scaled by the constant."""

    k: int
    label: str
    exponent: int
    norm: float


@dataclass(frozen=True)
class BoundCurve:
    t_grid: np.ndarray
    values: np.ndarray
    branches: Tuple[str, ...]


@dataclass(frozen=True)
class TailBound:
    """
    A closed-form tail bound t -> bound(t).

    Exponential kinds carry `levels` and evaluate 2 exp(-c min_l (t / norm_l)^(2 / e_l)).
    Profile kinds carry a (p, threshold) table meaning P(deviation >= threshold(p)) <= mass(p);
    they are evaluated by linear interpolation of p as a function of the threshold, with
    linear extrapolation past the last grid point.

    `calibration_name` names the constant that calibration fits; the bound is
    nonincreasing in it.
    """

    kind: BoundKind
    constants: Dict[str, float]
    precomputed_norms: Dict[str, float]
    levels: Tuple[Level, ...] = ()
    profile: Tuple[Tuple[float, float], ...] = ()
    calibration_name: str = "c"
    side: str = "two-sided"
    prefactor: float = 2.0

    def __post_init__(self):
        for name, value in self.constants.items():
            if not value > 0:
                raise IsingConcError(f"constant {name} must be positive, got {value}", module="bounds")

    @property
    def calibration_value(self) -> float:
        value = self.constants[self.calibration_name.lstrip("1/")]
        return 1.0 / value if self.calibration_name.startswith("1/") else value

    def with_calibration(self, value: float) -> "TailBound":
        """Copy with the calibrated parameter set (for '1/C' names, C = 1 / value)."""
        name = self.calibration_name.lstrip("1/")
        constants = dict(self.constants)
        constants[name] = 1.0 / value if self.calibration_name.startswith("1/") else value
        return replace(self, constants=constants)

    def _exponent(self, t: float) -> Tuple[float, str]:
        c = self.constants[self.calibration_name]
        best, branch = math.inf, ""
        for level in self.levels:
            value = (t / level.norm) ** (2.0 / level.exponent)
            if value < best:
                best, branch = value, f"k={level.k} {level.label}"
        return c * best, branch

    def _profile_p(self, t: float) -> float:
        points = [(0.0, 0.0)] + [(p, thr) for p, thr in self.profile]
        thresholds = np.array([thr for _, thr in points])
        ps = np.array([p for p, _ in points])
        thresholds = np.maximum.accumulate(thresholds) * self._threshold_scale()
        # Flat threshold runs map to their largest p.
        keep = np.append(np.diff(thresholds) > 0, True)
        x, y = thresholds[keep], ps[keep]
        if t <= x[-1]:
            return float(y[0]) if x.size == 1 else float(np.interp(t, x, y))
        if x.size == 1:
            return math.inf
        slope = (y[-1] - y[-2]) / (x[-1] - x[-2])
        return float(y[-1] + slope * (t - x[-1]))

    def _threshold_scale(self) -> float:
        if self.kind is BoundKind.CONVEX_PLP:
            return self.constants["C"]
        return self.constants["C_K"]

    def evaluate(self, t: float) -> float:
        t = float(t)
        if t <= 0:
            return self.prefactor
        if self.kind in PROFILE_KINDS:
            if not self.profile or all(thr == 0.0 for _, thr in self.profile):
                return 0.0
            p = self._profile_p(t)
            rate = 1.0 / self.constants["K"] ** 2 if self.kind is BoundKind.CONVEX_PLP else 1.0
            return min(self.prefactor, self.prefactor * math.exp(-rate * p))
        if not self.levels:
            return 0.0
        exponent, _ = self._exponent(t)
        return min(self.prefactor, self.prefactor * math.exp(-exponent))

    def active_branch(self, t: float) -> str:
        """Label of the minimizing level, or the profile parameter for profile kinds."""
        if self.kind in PROFILE_KINDS:
            if not self.profile:
                return ""
            return f"p={self._profile_p(float(t)):.6g}" if t > 0 else "p=0"
        if not self.levels or t <= 0:
            return ""
        return self._exponent(float(t))[1]

    def curve(self, t_grid: Sequence[float]) -> BoundCurve:
        grid = np.asarray(t_grid, dtype=np.float64)
        return BoundCurve(grid, np.array([self.evaluate(t) for t in grid]),
                          tuple(self.active_branch(t) for t in grid))


def _levels(candidates: Sequence[Level]) -> Tuple[Level, ...]:
    largest = max((level.norm for level in candidates), default=0.0)
    return tuple(level for level in candidates if level.norm > ZERO_NORM_RTOL * largest and level.norm > 0)


def _constant(constants: Optional[Dict[str, float]], name: str) -> float:
    defaults = get_settings("bounds")["constants"]
    if constants and name in constants:
        return float(constants[name])
    if name in defaults:
        return float(defaults[name])
    return 1.0


def multilevel_levels(poly: TetrahedralPolynomial, law, restarts: Optional[int] = None,
                      seed: Optional[int] = None) -> Tuple[Level, ...]:
    """Norms ||E nabla^k f(X)||_I for all k <= deg f and all partitions I of [k]."""
    d = poly.degree
    cap = int(get_settings("boolfn")["max_tensor_order"])
    if d > cap:
        logger.error(f"Polynomial degree {d} exceeds tensor order cap {cap}")
        raise CapacityError(f"polynomial degree {d} exceeds tensor order cap {cap}", module="bounds")
    candidates = []
    for k in range(1, d + 1):
        tensor = expected_derivative(poly, k, law)
        for partition, result in all_partition_norms(tensor, restarts=restarts, seed=seed).items():
            candidates.append(Level(k=k, label=str(partition), exponent=partition.size, norm=result.value))
    return tuple(sorted(candidates, key=lambda level: (level.k, level.exponent, level.label)))


def multilevel_tail(poly: TetrahedralPolynomial, law, constants: Optional[Dict[str, float]] = None,
                    restarts: Optional[int] = None, seed: Optional[int] = None) -> TailBound:
    """
    Multilevel bound 2 exp(-c_d min_{k, I} (t / ||E nabla^k f(X)||_I)^(2/|I|)).

    The constant is looked up as 'c_<degree>'. Zero-norm levels are skipped;
    a constant polynomial yields a bound that is 0 for t > 0.

    Raises:
        CapacityError: If the degree exceeds the tensor order cap
    """
    d = poly.degree
    name = f"c_{max(d, 1)}"
    if d == 0:
        return TailBound(BoundKind.MULTILEVEL, {name: _constant(constants, name)}, {}, (), calibration_name=name)
    levels = multilevel_levels(poly, law, restarts=restarts, seed=seed)
    norms = {f"k={level.k} {level.label}": level.norm for level in levels}
    return TailBound(BoundKind.MULTILEVEL, {name: _constant(constants, name)}, norms, _levels(levels),
                     calibration_name=name)


def multilevel_bound(poly: TetrahedralPolynomial, law, c_d: float, t: float) -> float:
    d = max(poly.degree, 1)
    return multilevel_tail(poly, law, {f"c_{d}": c_d}).evaluate(t)


def hanson_wright_tail(hs: float, op: float, c: float = None, A: Optional[np.ndarray] = None) -> TailBound:
    """
    2 exp(-c min(t^2 / hs^2, t / op)); norms are computed from A when not given.

    Raises:
        IsingConcError: If a norm is missing without A to compute it from, or a norm is negative
    """
    if A is None and (hs is None or op is None):
        logger.error("Hanson-Wright bound requested without norms or a matrix")
        raise IsingConcError("Hanson-Wright bound needs hs and op, or the matrix A", module="bounds")
    if A is not None and (hs is None or op is None):
        matrix = np.asarray(A, dtype=np.float64)
        hs = float(np.linalg.norm(matrix)) if hs is None else hs
        op = top_singular_value(matrix) if op is None else op
    if hs < 0 or op < 0:
        raise IsingConcError("norms must be nonnegative", module="bounds")
    c = _constant(None, "c") if c is None else c
    levels = _levels([Level(2, "{1,2}", 1, float(hs)), Level(2, "{1}{2}", 2, float(op))])
    return TailBound(BoundKind.HANSON_WRIGHT, {"c": c}, {"hs": hs, "op": op}, levels)


def hanson_wright_bound(A: Optional[np.ndarray], hs: float, op: float, c: float, t: float) -> float:
    return hanson_wright_tail(hs, op, c, A).evaluate(t)


def bonami_tail(hs: float, c: float = None) -> TailBound:
    """2 exp(-c t / hs): the Hanson-Wright form with the operator norm replaced by hs."""
    c = _constant(None, "c") if c is None else c
    levels = _levels([Level(2, "{1,2}", 2, float(hs))])
    return TailBound(BoundKind.BONAMI, {"c": c}, {"hs": hs}, levels)


def bonami_bound(hs: float, c: float, t: float) -> float:
    return bonami_tail(hs, c).evaluate(t)


def quadratic_mean_tail(A: np.ndarray, law, c: float = None) -> TailBound:
    """
    Quadratic form bound with a field: 2 exp(-c min(t^2 / (||A||_HS^2 + sum_i (sum_j a_ij E X_j)^2), t / ||A||_op)).
    """
    A = np.asarray(A, dtype=np.float64)
    means = np.array([law.moment(1 << j) for j in range(A.shape[0])])
    drift = float(np.sum((A @ means) ** 2))
    hs = float(np.linalg.norm(A))
    op = top_singular_value(A)
    c = _constant(None, "c") if c is None else c
    levels = _levels([Level(2, "{1,2}+drift", 1, math.sqrt(hs ** 2 + drift)), Level(2, "{1}{2}", 2, op)])
    return TailBound(BoundKind.QUADRATIC_MEAN, {"c": c}, {"hs": hs, "op": op, "drift": drift}, levels)


def linfty_tail(poly: TetrahedralPolynomial, c: float = None) -> TailBound:
    """
    2 exp(-c t^(2/d) / (n max|a|^(2/d))) with a the coefficient tensor of the degree-d part.

    The coefficient of a d-set S in the polynomial is d! a_S, so max|a| = max|coef| / d!.
    """
    d = poly.degree
    c = _constant(None, "c") if c is None else c
    if d == 0:
        return TailBound(BoundKind.LINFTY, {"c": c}, {}, ())
    top = max(abs(v) for v in poly.terms_of_degree(d).values()) / math.factorial(d)
    # (t / (n^(d/2) max|a|))^(2/d) = t^(2/d) / (n max|a|^(2/d))
    scale = poly.n ** (d / 2.0) * top
    return TailBound(BoundKind.LINFTY, {"c": c}, {"max_abs": top, "n": float(poly.n)},
                     (Level(d, "linfty", d, scale),))


def degree3_tail(A, law, c: float = None, restarts: Optional[int] = None, seed: Optional[int] = None) -> TailBound:
    """
    Degree-3 bound for f = sum_ijk a_ijk x_i x_j x_k with zero field:
    2 exp(-c min(t^2 / (||A||_{1,2,3}^2 + sum_i (sum_jk a_ijk E X_j X_k)^2),
                 t / ||A||_{1,2}{3}, t^(2/3) / ||A||_{1}{2}{3}^(2/3))).
    """
    tensor = as_tensor(A)
    if tensor.d != 3:
        raise IsingConcError(f"degree-3 bound needs an order-3 tensor, got order {tensor.d}", module="bounds")
    norms = all_partition_norms(tensor, restarts=restarts, seed=seed)
    full = norms[parse_partition("{1,2,3}")].value
    mixed = norms[parse_partition("{1,2}{3}")].value
    single = norms[parse_partition("{1}{2}{3}")].value
    drift = degree3_drift(tensor, law)
    c = _constant(None, "c") if c is None else c
    levels = _levels([
        Level(1, "{1,2,3}+drift", 1, math.sqrt(full ** 2 + drift)),
        Level(3, "{1,2}{3}", 2, mixed),
        Level(3, "{1}{2}{3}", 3, single),
    ])
    return TailBound(BoundKind.DEGREE3, {"c": c},
                     {"{1,2,3}": full, "{1,2}{3}": mixed, "{1}{2}{3}": single, "drift": drift}, levels)


def degree3_drift(A, law) -> float:
    """sum_i (sum_jk a_ijk E X_j X_k)^2."""
    tensor = as_tensor(A)
    n = tensor.n
    pair = np.ones((n, n))
    for j in range(n):
        for k in range(n):
            if j != k:
                pair[j, k] = law.moment((1 << j) | (1 << k))
    inner = np.einsum("ijk,jk->i", tensor.entries, pair)
    return float(np.sum(inner ** 2))


def degree3_bound(A, law, c: float, t: float) -> float:
    return degree3_tail(A, law, c).evaluate(t)


def linfty_bound(poly: TetrahedralPolynomial, c: float, t: float) -> float:
    return linfty_tail(poly, c).evaluate(t)


def quadratic_mean_bound(A: np.ndarray, law, c: float, t: float) -> float:
    return quadratic_mean_tail(A, law, c).evaluate(t)
