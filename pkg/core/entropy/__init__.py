from core.entropy.tensorization import (
    InfluenceMatrix,
    ATReport,
    ATTrial,
    ATVerification,
    influence_matrix,
    tv_influence,
    beta,
    at_report,
    entropy_functional,
    conditional_entropy_sum,
    verify_at,
)
from core.entropy.gradient import (
    DiscreteGradient,
    FunctionalConstants,
    MomentCheck,
    PoincareConstant,
    discrete_gradient,
    dirichlet_matrix,
    poincare_constant,
    lp_norm,
    poincare_ratio,
    lsi_ratio,
    calibrate_functional_constants,
    moment_comparison,
    moment_growth,
)
