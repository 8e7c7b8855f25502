from core.model.ising import (
    IsingModel,
    DobrushinReport,
    dobrushin_margin,
    local_fields,
    conditional_plus_prob,
    conditional_table,
    spins_table,
    config_index,
    chain_model,
    random_dobrushin_model,
)
from core.model.law import ExactLaw, ChainLaw, exact_law, moment, moments_of, subset_mask
from core.model.io import load_model, dump_model, parse_model
