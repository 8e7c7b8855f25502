from core.norms.partitions import Partition, parse_partition, all_partitions
from core.norms.partition_norm import (
    NormResult,
    partition_norm,
    all_partition_norms,
    multilinear_form,
    embed_witness,
    block_tensor,
)
from core.norms.interpolation import (
    latala_vector_norm,
    latala_maximizer,
    rearrangement_sandwich,
    matrix_norm_12p,
    matrix_norm_1_2_p,
)
from core.norms.spectral import top_singular_value, smallest_eigenvalue, is_nonnegative_definite
