import itertools
import logging

from core.boolfn.polynomial import TetrahedralPolynomial, indices_mask, mask_indices

logger = logging.getLogger(__name__)


def recenter(poly: TetrahedralPolynomial, law) -> TetrahedralPolynomial:
    """
    Replace the lower-degree part of poly so that E nabla^i f(X) = 0 for 1 <= i < deg f.

    The top-degree terms and the constant are kept. For a set T with
    1 <= |T| < d the expected partial derivative is
    sum_{S contains T} c_S E x^{S minus T}, so the coefficients c_T are solved
    from the largest |T| down:

        c_T = - sum_{S strictly contains T} c_S E x^{S minus T}

    Only subsets of top-degree supports can receive nonzero coefficients.
    """
    d = poly.degree
    if d <= 1:
        return TetrahedralPolynomial(poly.n, {m: v for m, v in poly.coeffs.items() if m == 0 or bin(m).count("1") == d})
    coeffs = dict(poly.terms_of_degree(d))
    candidates = {}
    for mask in coeffs:
        indices = mask_indices(mask)
        for size in range(1, d):
            for subset in itertools.combinations(indices, size):
                candidates.setdefault(size, set()).add(indices_mask(subset))
    for size in range(d - 1, 0, -1):
        for T in sorted(candidates.get(size, ())):
            correction = 0.0
            for S, c_S in coeffs.items():
                if S != T and S & T == T:
                    correction += c_S * law.moment(S ^ T)
            if correction != 0.0:
                coeffs[T] = -correction
    if poly.constant:
        coeffs[0] = poly.constant
    logger.debug(f"Recentered degree-{d} polynomial: {len(coeffs)} terms")
    return TetrahedralPolynomial(poly.n, coeffs)
