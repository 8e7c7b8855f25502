import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from core.bounds.calibration import Calibration, calibrate_constant
from core.bounds.tail import BoundCurve, TailBound
from core.errors import GridMismatchError, IsingConcError

logger = logging.getLogger(__name__)

SIDES = ("two-sided", "upper", "lower")


@dataclass(frozen=True)
class SurvivalCurve:
    """
    Empirical tail P(|f - center| >= t) (or one side of it) on a t-grid,
    with binomial standard errors sqrt(s (1 - s) / N).
    """

    t_grid: np.ndarray
    survival: np.ndarray
    stderr: np.ndarray
    samples: int
    side: str = "two-sided"
    center: float = 0.0


@dataclass(frozen=True)
class EnvelopeRow:
    t: float
    survival: float
    stderr: float
    bound: float
    branch: str
    ok: bool


@dataclass
class EnvelopeReport:
    violations: int
    calibration: Optional[Calibration]
    rows: List[EnvelopeRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _t_grid(t_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise IsingConcError("t-grid is empty", module="mc")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise IsingConcError("t-grid must be increasing and nonnegative", module="mc")
    return grid


def empirical_tail(samples: Sequence[float], t_grid: Sequence[float], side: str = "two-sided",
                   center: Optional[float] = None) -> SurvivalCurve:
    """
    Empirical survival of the deviation from `center` (the sample mean by default).

    Args:
        samples: Values f(X_k)
        t_grid: Increasing nonnegative levels
        side: 'two-sided' for |f - center| >= t, 'upper' for f - center >= t, 'lower' for f - center <= -t
        center: Centering value, e.g. the exact mean when enumeration is feasible

    Raises:
        IsingConcError: On empty samples or grid, or an unknown side
    """
    values = np.asarray(samples, dtype=np.float64).reshape(-1)
    if values.size == 0:
        logger.error("Empirical tail requested for an empty sample")
        raise IsingConcError("samples are empty", module="mc")
    if side not in SIDES:
        raise IsingConcError(f"unknown side '{side}', expected one of {', '.join(SIDES)}", module="mc")
    grid = _t_grid(t_grid)
    center = float(values.mean()) if center is None else float(center)
    deviation = values - center
    if side == "two-sided":
        deviation = np.abs(deviation)
    elif side == "lower":
        deviation = -deviation
    ordered = np.sort(deviation)
    # count of deviations >= t
    counts = ordered.size - np.searchsorted(ordered, grid, side="left")
    survival = counts / ordered.size
    stderr = np.sqrt(survival * (1.0 - survival) / ordered.size)
    return SurvivalCurve(grid, survival, stderr, int(ordered.size), side, center)


def _offset_rss(ns: np.ndarray, values: np.ndarray, exponent: float) -> float:
    design = np.column_stack([ns ** exponent, np.ones_like(ns)])
    coeffs, _, _, _ = np.linalg.lstsq(design, values, rcond=None)
    return float(np.sum((design @ coeffs - values) ** 2))


def _offset_exponent(ns: np.ndarray, values: np.ndarray) -> float:
    """Exponent s of the least-squares fit values ~ a n^s + b, with a and b profiled out."""
    ns = ns / ns.max()
    values = values / values.max()
    coarse = np.linspace(0.05, 6.0, 120)
    best = float(coarse[int(np.argmin([_offset_rss(ns, values, s) for s in coarse]))])
    result = minimize_scalar(lambda s: _offset_rss(ns, values, s), bounds=(max(best - 0.05, 0.01), best + 0.05),
                             method="bounded", options={"xatol": 1e-8})
    return float(result.x)


def fit_exponent(quantity: Union[Callable[[int], float], Sequence[float]], n_grid: Sequence[int],
                 offset: bool = False) -> float:
    """
    Least-squares slope of log(quantity) against log(n).

    With offset set, the exponent s of the fit a n^s + b instead; a constant
    correction bends the log-log line on short grids.

    Raises:
        IsingConcError: With fewer than 4 grid points or a nonpositive value
    """
    ns = np.asarray(n_grid, dtype=np.float64)
    if ns.size < 4:
        raise IsingConcError(f"exponent fit needs at least 4 grid points, got {ns.size}", module="mc")
    values = np.array([quantity(int(n)) for n in n_grid] if callable(quantity) else quantity, dtype=np.float64)
    if values.shape != ns.shape:
        raise GridMismatchError(f"{values.size} values for {ns.size} grid points")
    if np.any(values <= 0) or np.any(ns <= 0):
        logger.error(f"Exponent fit on nonpositive values: {values.tolist()}")
        raise IsingConcError("exponent fit needs positive values", module="mc")
    if offset:
        return _offset_exponent(ns, values)
    slope, _ = np.polyfit(np.log(ns), np.log(values), 1)
    return float(slope)


def validate_envelope(curve: SurvivalCurve, bound: Union[TailBound, BoundCurve]) -> EnvelopeReport:
    """
    Per-point check bound(t) + 2 stderr >= survival(t).

    A TailBound is evaluated on the curve's grid and also calibrated against it;
    a precomputed BoundCurve must share the grid.

    Raises:
        GridMismatchError: If a BoundCurve grid differs from the curve grid
    """
    calibration = None
    if isinstance(bound, TailBound):
        if bound.side != curve.side:
            raise GridMismatchError(f"bound is {bound.side} but the curve is {curve.side}")
        evaluated = bound.curve(curve.t_grid)
        calibration = calibrate_constant(bound, curve)
    else:
        evaluated = bound
        if evaluated.t_grid.shape != curve.t_grid.shape or not np.allclose(evaluated.t_grid, curve.t_grid,
                                                                            rtol=1e-12, atol=0.0):
            logger.error("Bound and survival curve grids differ")
            raise GridMismatchError("bound and survival curve are on different t-grids")
    rows = []
    for t, s, se, b, branch in zip(curve.t_grid, curve.survival, curve.stderr, evaluated.values, evaluated.branches):
        ok = bool(b + 2.0 * se >= s)
        rows.append(EnvelopeRow(float(t), float(s), float(se), float(b), branch, ok))
    violations = sum(1 for row in rows if not row.ok)
    if violations:
        logger.warning(f"Envelope check: {violations} of {len(rows)} grid points violated")
    else:
        logger.info(f"Envelope check passed on {len(rows)} grid points")
    return EnvelopeReport(violations=violations, calibration=calibration, rows=rows)

