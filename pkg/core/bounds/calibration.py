import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.bounds.tail import TailBound
from core.config.env_loader import get_settings
from core.errors import IsingConcError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Calibration:
    name: str
    value: float
    capped: bool
    binding_t: Optional[float]


def _feasible(bound: TailBound, value: float, t_grid: np.ndarray, target: np.ndarray) -> bool:
    candidate = bound.with_calibration(value)
    return all(candidate.evaluate(t) >= y for t, y in zip(t_grid, target))


def calibrate_constant(bound: TailBound, curve, cap: Optional[float] = None,
                       rtol: Optional[float] = None) -> Calibration:
    """
    Largest calibration parameter with bound(t) >= survival(t) + 2 stderr on every grid point.

    The parameter is the one named by bound.calibration_name (c, c_d, or 1/C for
    threshold constants); the bound is nonincreasing in it, so the feasible set
    is an interval (0, value] and bisection on a log scale finds its end.

    Args:
        bound: Tail bound whose norms are fixed
        curve: Survival curve with t_grid, survival and stderr arrays
        cap: Value returned when every parameter up to it is feasible (default: config)
        rtol: Relative bisection tolerance (default: config)

    Returns:
        The fitted parameter, whether it hit the cap, and the grid point that binds

    Raises:
        IsingConcError: If the curve is empty
    """
    settings = get_settings("bounds")
    cap = float(settings["calibration_cap"]) if cap is None else float(cap)
    rtol = float(settings["bisection_rtol"]) if rtol is None else float(rtol)
    t_grid = np.asarray(curve.t_grid, dtype=np.float64)
    if t_grid.size == 0:
        logger.error("Calibration requested on an empty survival curve")
        raise IsingConcError("survival curve is empty", module="bounds")
    target = np.asarray(curve.survival, dtype=np.float64) + 2.0 * np.asarray(curve.stderr, dtype=np.float64)
    positive = t_grid > 0
    t_grid, target = t_grid[positive], target[positive]

    if _feasible(bound, cap, t_grid, target):
        logger.info(f"Calibration of {bound.calibration_name} reached the cap {cap:g}")
        return Calibration(bound.calibration_name, cap, True, None)

    lo = cap
    while not _feasible(bound, lo, t_grid, target):
        lo /= 2.0
        if lo < 1e-300:
            raise IsingConcError("no feasible calibration constant", module="bounds")
    hi = min(cap, 2.0 * lo)
    while hi - lo > rtol * lo:
        mid = math.sqrt(lo * hi)
        if _feasible(bound, mid, t_grid, target):
            lo = mid
        else:
            hi = mid

    fitted = bound.with_calibration(lo)
    slack = np.array([fitted.evaluate(t) for t in t_grid]) - target
    binding = float(t_grid[int(np.argmin(slack))])
    logger.info(f"Calibrated {bound.calibration_name} = {lo:.6g} (binding at t={binding:.6g})")
    return Calibration(bound.calibration_name, lo, False, binding)
