from core.mc.glauber import (
    GlauberChain,
    SampleResult,
    glauber_sweep,
    burn_in_sweeps,
    sample_states,
    sample_statistic,
    state_law_distance,
)
from core.mc.tails import SurvivalCurve, EnvelopeReport, empirical_tail, fit_exponent, validate_envelope
