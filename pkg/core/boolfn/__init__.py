from core.boolfn.tensors import SymmetricTensor, symmetrize, as_tensor, off_diagonal_mask
from core.boolfn.polynomial import (
    TetrahedralPolynomial,
    walsh_transform,
    cube_table,
    evaluate,
    from_tensor,
    quadratic_form,
    linear_form,
    mask_indices,
    indices_mask,
)
from core.boolfn.derivatives import (
    derivative_tensor,
    expected_derivative,
    expectation,
    second_moment,
    variance,
)
from core.boolfn.io import load_polynomial, dump_polynomial, parse_polynomial, load_tensor, dump_tensor
