from core.bounds.tail import (
    BoundKind,
    BoundCurve,
    Level,
    TailBound,
    multilevel_levels,
    multilevel_tail,
    multilevel_bound,
    hanson_wright_tail,
    hanson_wright_bound,
    bonami_tail,
    bonami_bound,
    linfty_tail,
    linfty_bound,
    degree3_tail,
    degree3_bound,
    degree3_drift,
    quadratic_mean_tail,
    quadratic_mean_bound,
)
from core.bounds.quadratic import (
    QuadThresholds,
    ConvexThreshold,
    quad_bounds,
    quad_profile,
    quad_upper_tail,
    quad_lower_tail,
    convex_lipschitz_bound,
    convex_tail,
    linear_grad_sup_norm,
    polynomial_grad_sup_norm,
)
from core.bounds.calibration import Calibration, calibrate_constant
from core.bounds.recentering import recenter
