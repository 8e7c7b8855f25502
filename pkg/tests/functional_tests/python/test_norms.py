import logging
import math

import numpy as np
import pytest
from assertpy import assert_that
from scipy.optimize import minimize

from core.assertions.numeric_assertions import NumericAssertions
from core.boolfn.tensors import SymmetricTensor, symmetrize
from core.errors import DimensionError, InvalidPartitionError, IsingConcError
from core.norms.interpolation import (latala_maximizer, latala_vector_norm, matrix_norm_12p, matrix_norm_1_2_p,
                                      rearrangement_sandwich)
from core.norms.partition_norm import all_partition_norms, embed_witness, multilinear_form, partition_norm
from core.norms.partitions import Partition, all_partitions, parse_partition
from core.norms.spectral import is_nonnegative_definite, smallest_eigenvalue, top_singular_value
from core.reporting.allure_reporter import allure_reporter

logger = logging.getLogger(__name__)


@pytest.fixture
def random_cubic_tensor(rng):
    return SymmetricTensor(symmetrize(rng.normal(size=(5, 5, 5))))


class TestPartitions:

    @pytest.mark.functional
    @pytest.mark.parametrize("d, count", [(1, 1), (2, 2), (3, 5), (4, 15)])
    def test_partition_counts_are_bell_numbers(self, d, count):
        assert_that(all_partitions(d)).is_length(count)

    @pytest.mark.functional
    def test_parse_normalizes_block_order(self):
        # Act
        partition = parse_partition("{3}{2, 1}")

        # Assert
        assert_that(partition.blocks).is_equal_to(((1, 2), (3,)))
        assert_that(str(partition)).is_equal_to("{1,2}{3}")
        assert_that(partition.size).is_equal_to(2)

    @pytest.mark.functional
    @pytest.mark.parametrize("text", ["{1,1}{2}", "{1}{3}", "1,2", "{1}{x}", "{}{1}"])
    def test_invalid_partitions(self, text):
        with pytest.raises(InvalidPartitionError) as error:
            parse_partition(text)
        assert_that(error.value.module).is_equal_to("norms")

    @pytest.mark.functional
    def test_order_mismatch(self):
        with pytest.raises(InvalidPartitionError):
            parse_partition("{1}{2}", d=3)

    @pytest.mark.functional
    def test_refinement(self):
        fine = parse_partition("{1}{2}{3}")
        assert_that(fine.refines(parse_partition("{1,3}{2}"))).is_true()
        assert_that(parse_partition("{1,3}{2}").refines(fine)).is_false()


class TestPartitionNorms:
    """
    Test suite for partition norms of symmetric tensors.
    """

    @pytest.mark.functional
    def test_single_block_is_frobenius(self, random_cubic_tensor):
        # Act
        result = partition_norm(random_cubic_tensor, Partition(3, ((1, 2, 3),)))

        # Assert
        NumericAssertions.assert_close(result.value, random_cubic_tensor.frobenius(), rel=1e-12)
        assert_that(result.exact).is_true()

    @pytest.mark.functional
    def test_two_blocks_of_a_matrix_is_spectral_norm(self, rng):
        # Arrange
        allure_reporter.add_feature("norms")
        A = symmetrize(rng.normal(size=(6, 6)))

        # Act
        result = partition_norm(A, parse_partition("{1}{2}"))

        # Assert
        NumericAssertions.assert_close(result.value, np.linalg.norm(A, 2), rel=1e-12)
        NumericAssertions.assert_close(multilinear_form(A, parse_partition("{1}{2}"), result.witness),
                                       result.value, rel=1e-10)

    @pytest.mark.functional
    def test_rank_one_tensor_has_unit_norms(self):
        """u x u x u with |u| = 1 has every partition norm equal to 1."""
        # Arrange
        u = np.array([1.0, 2.0, -2.0, 0.0]) / 3.0
        A = np.einsum("i,j,k->ijk", u, u, u)

        # Act
        results = all_partition_norms(A, restarts=4, seed=1)

        # Assert
        for partition, result in results.items():
            NumericAssertions.assert_close(result.value, 1.0, rel=1e-9)

    @pytest.mark.functional
    def test_witness_certifies_value(self, random_cubic_tensor):
        # Arrange
        partition = parse_partition("{1}{2}{3}")

        # Act
        result = partition_norm(random_cubic_tensor, partition, restarts=8, seed=5)

        # Assert
        NumericAssertions.assert_certified_norm(random_cubic_tensor, partition, result, rtol=1e-10)
        assert_that(result.restarts_used).is_equal_to(9)

    @pytest.mark.functional
    def test_every_partition_is_certified(self, random_cubic_tensor):
        # Act
        results = all_partition_norms(random_cubic_tensor, restarts=4, seed=5)

        # Assert
        for partition, result in results.items():
            NumericAssertions.assert_certified_norm(random_cubic_tensor, partition, result, rtol=1e-10)

    @pytest.mark.functional
    def test_injective_norm_matches_sphere_search(self, rng):
        """For a symmetric 3 x 3 x 3 tensor the {1}{2}{3} norm is max |T(u, u, u)| over unit u."""
        # Arrange
        tensor = SymmetricTensor(symmetrize(rng.normal(size=(3, 3, 3))))
        theta, phi = np.meshgrid(np.linspace(0.0, math.pi, 200), np.linspace(0.0, 2.0 * math.pi, 400))
        u = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
        u = u.reshape(-1, 3)
        on_grid = np.abs(np.einsum("ijk,ni,nj,nk->n", tensor.entries, u, u, u))
        best = int(np.argmax(on_grid))

        def negative_form(angles):
            a, b = angles
            v = np.array([math.sin(a) * math.cos(b), math.sin(a) * math.sin(b), math.cos(a)])
            return -abs(float(np.einsum("ijk,i,j,k->", tensor.entries, v, v, v)))

        polished = minimize(negative_form, [theta.reshape(-1)[best], phi.reshape(-1)[best]], method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
        oracle = max(float(on_grid[best]), -float(polished.fun))

        # Act
        result = partition_norm(tensor, parse_partition("{1}{2}{3}"), restarts=16, seed=1)

        # Assert
        assert_that(result.value).is_greater_than_or_equal_to(float(on_grid[best]) * (1 - 1e-12))
        NumericAssertions.assert_close(result.value, oracle, rel=1e-6)

    @pytest.mark.functional
    def test_norms_are_homogeneous(self, random_cubic_tensor):
        # Arrange
        c = -2.5
        scaled = random_cubic_tensor.scaled(c)

        # Act
        results = all_partition_norms(random_cubic_tensor, restarts=4, seed=3)
        scaled_results = all_partition_norms(scaled, restarts=4, seed=3)

        # Assert
        for partition, result in results.items():
            NumericAssertions.assert_close(scaled_results[partition].value, abs(c) * result.value, rel=1e-9)

    @pytest.mark.functional
    def test_norms_are_monotone_under_refinement(self, random_cubic_tensor):
        """Coarser partitions never report smaller norms than the partitions refining them."""
        # Act
        results = all_partition_norms(random_cubic_tensor, restarts=8, seed=5)

        # Assert
        assert_that(results).is_length(5)
        for fine, fine_result in results.items():
            for coarse, coarse_result in results.items():
                if fine.refines(coarse):
                    assert_that(coarse_result.value).is_greater_than_or_equal_to(fine_result.value * (1 - 1e-12))

    @pytest.mark.functional
    def test_same_seed_gives_identical_witness(self, random_cubic_tensor):
        # Arrange
        partition = parse_partition("{1}{2}{3}")

        # Act
        first = partition_norm(random_cubic_tensor, partition, restarts=6, seed=9)
        second = partition_norm(random_cubic_tensor, partition, restarts=6, seed=9)

        # Assert
        assert_that(first.value).is_equal_to(second.value)
        for a, b in zip(first.witness, second.witness):
            NumericAssertions.assert_arrays_close(a, b, atol=0.0)

    @pytest.mark.functional
    def test_partition_must_match_order(self, random_cubic_tensor):
        with pytest.raises(InvalidPartitionError):
            partition_norm(random_cubic_tensor, parse_partition("{1}{2}"))

    @pytest.mark.functional
    def test_embedded_witness_is_feasible(self, random_cubic_tensor):
        # Arrange
        fine, coarse = parse_partition("{1}{2}{3}"), parse_partition("{1,3}{2}")
        result = partition_norm(random_cubic_tensor, fine, restarts=4, seed=2)

        # Act
        merged = embed_witness(result.witness, fine, coarse, 5)

        # Assert
        assert_that([v.size for v in merged]).is_equal_to([25, 5])
        NumericAssertions.assert_close(multilinear_form(random_cubic_tensor, coarse, merged), result.value, rel=1e-10)

    @pytest.mark.functional
    def test_embedding_requires_refinement(self):
        with pytest.raises(InvalidPartitionError):
            embed_witness([np.ones(4)], parse_partition("{1,2}"), parse_partition("{1}{2}"), 2)


class TestInterpolationNorms:
    """
    Test suite for the vector and matrix norms interpolating between l1 and sqrt(p) l2.
    """

    @pytest.mark.functional
    def test_unit_vector(self):
        # Act & Assert
        NumericAssertions.assert_close(latala_vector_norm(np.array([1.0, 0.0, 0.0]), 2.0), 1.0, rel=1e-14)
        NumericAssertions.assert_close(latala_vector_norm(np.array([1.0, 0.0, 0.0]), 0.5), math.sqrt(0.5), rel=1e-14)

    @pytest.mark.functional
    def test_large_p_gives_l1(self, rng):
        x = rng.normal(size=7)
        NumericAssertions.assert_close(latala_vector_norm(x, 7.0), np.abs(x).sum(), rel=1e-14)

    @pytest.mark.functional
    def test_small_p_gives_scaled_l2(self):
        """For a flat vector with p small every coordinate stays below 1."""
        x = np.ones(16)
        NumericAssertions.assert_close(latala_vector_norm(x, 4.0), math.sqrt(4.0) * 4.0, rel=1e-14)

    @pytest.mark.functional
    def test_maximizer_is_feasible(self, rng):
        # Arrange
        x = rng.normal(size=12)
        p = 3.5

        # Act
        value, y = latala_maximizer(x, p)

        # Assert
        NumericAssertions.assert_close(x @ y, value, rel=1e-12)
        assert_that(float(np.abs(y).max())).is_less_than_or_equal_to(1.0 + 1e-12)
        assert_that(float(y @ y)).is_less_than_or_equal_to(p * (1.0 + 1e-12))

    @pytest.mark.functional
    def test_rearrangement_sandwich(self, rng):
        for p in (0.5, 1.0, 2.5, 6.0):
            # Arrange
            x = rng.normal(size=10)

            # Act
            value = latala_vector_norm(x, p)
            _, _, total = rearrangement_sandwich(x, p)

            # Assert
            NumericAssertions.assert_within(total, value * (1 - 1e-12), 2.0 * value * (1 + 1e-12), name=f"p={p}")

    @pytest.mark.functional
    def test_non_positive_p(self):
        with pytest.raises(IsingConcError):
            latala_vector_norm(np.ones(3), 0.0)

    @pytest.mark.functional
    def test_row_norm_version_on_identity(self):
        """Rows of I_4 have unit norm; the flat vector (1,1,1,1) at p = 1 gives sqrt(4)."""
        NumericAssertions.assert_close(matrix_norm_12p(np.eye(4), 1.0), 2.0, rel=1e-14)

    @pytest.mark.functional
    def test_bilinear_version_on_rank_one(self):
        # Arrange
        A = np.zeros((4, 4))
        A[0, 0] = 1.0

        # Act & Assert
        NumericAssertions.assert_close(matrix_norm_1_2_p(A, 4.0, restarts=2, seed=0).value, 1.0, rel=1e-12)
        NumericAssertions.assert_close(matrix_norm_1_2_p(A, 0.25, restarts=2, seed=0).value, 0.25, rel=1e-12)

    @pytest.mark.functional
    def test_bilinear_version_is_sandwiched(self, rng):
        """Between the spectral-type bound p |A|_op-scale and the entrywise l1 sum."""
        # Arrange
        A = symmetrize(rng.normal(size=(6, 6)))
        p = 2.0

        # Act
        result = matrix_norm_1_2_p(A, p, restarts=8, seed=3)
        x, y = result.witness

        # Assert
        NumericAssertions.assert_close(x @ A @ y, result.value, rel=1e-12)
        assert_that(result.value).is_less_than_or_equal_to(min(p * np.linalg.norm(A, 2), np.abs(A).sum()) + 1e-9)
        assert_that(result.value).is_less_than_or_equal_to(matrix_norm_12p(A, p) * math.sqrt(p) + 1e-9)

    @pytest.mark.functional
    def test_bilinear_version_matches_grid_search(self, rng):
        """
        The supremum over y is exact by water-filling, and the objective is convex in x,
        so a dense grid over the clipped sphere of radius sqrt(p) brackets the 3 x 3 value.
        """
        # Arrange
        A = rng.normal(size=(3, 3))
        p = 1.5
        theta, phi = np.meshgrid(np.linspace(0.0, math.pi, 200), np.linspace(0.0, 2.0 * math.pi, 400))
        u = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
        candidates = np.clip(math.sqrt(p) * u.reshape(-1, 3), -1.0, 1.0)
        grid_max = max(latala_vector_norm(A.T @ x, p) for x in candidates)

        # Act
        result = matrix_norm_1_2_p(A, p, restarts=16, seed=2)

        # Assert
        x, y = result.witness
        NumericAssertions.assert_close(x @ A @ y, result.value, rel=1e-12)
        assert_that(result.value).is_greater_than_or_equal_to(grid_max - 1e-9)
        assert_that(result.value).is_less_than_or_equal_to(1.02 * grid_max)

    @pytest.mark.functional
    def test_interpolation_norms_are_homogeneous(self, rng):
        # Arrange
        c = -2.5
        x = rng.normal(size=9)
        A = rng.normal(size=(5, 5))

        # Act & Assert
        for p in (0.5, 1.0, 3.0, 12.0):
            NumericAssertions.assert_close(latala_vector_norm(c * x, p), abs(c) * latala_vector_norm(x, p), rel=1e-12)
            NumericAssertions.assert_close(matrix_norm_12p(c * A, p), abs(c) * matrix_norm_12p(A, p), rel=1e-12)
            NumericAssertions.assert_close(matrix_norm_1_2_p(c * A, p, restarts=4, seed=1).value,
                                           abs(c) * matrix_norm_1_2_p(A, p, restarts=4, seed=1).value, rel=1e-9)

    @pytest.mark.functional
    def test_vector_norm_inequalities(self, rng):
        """||x||_{tp} <= sqrt(t) ||x||_p for t >= 1, ||x||_p <= sqrt(p) |x|_2 and ||x||_p <= |x|_1."""
        for _ in range(200):
            # Arrange
            x = rng.normal(size=int(rng.integers(1, 30)))
            p = float(rng.uniform(0.1, 20.0))
            t = float(rng.uniform(1.0, 5.0))

            # Act
            value = latala_vector_norm(x, p)

            # Assert
            assert_that(latala_vector_norm(x, t * p)).is_less_than_or_equal_to(math.sqrt(t) * value * (1 + 1e-12))
            assert_that(latala_vector_norm(x, t * p)).is_greater_than_or_equal_to(value * (1 - 1e-12))
            assert_that(value).is_less_than_or_equal_to(math.sqrt(p) * np.linalg.norm(x) * (1 + 1e-12))
            assert_that(value).is_less_than_or_equal_to(np.abs(x).sum() * (1 + 1e-12))

    @pytest.mark.functional
    def test_zero_matrix(self):
        result = matrix_norm_1_2_p(np.zeros((3, 3)), 2.0)
        assert_that(result.value).is_equal_to(0.0)

    @pytest.mark.functional
    def test_non_square_matrix(self):
        with pytest.raises(DimensionError):
            matrix_norm_12p(np.zeros((2, 3)), 1.0)


class TestSpectral:

    @pytest.mark.functional
    def test_power_iteration_matches_svd(self, rng):
        M = rng.normal(size=(6, 6))
        NumericAssertions.assert_close(top_singular_value(M), np.linalg.norm(M, 2), rel=1e-6)

    @pytest.mark.functional
    def test_definiteness(self):
        NumericAssertions.assert_close(smallest_eigenvalue(np.diag([3.0, -1.0, 2.0])), -1.0, rel=1e-12)
        assert_that(is_nonnegative_definite(np.eye(3))).is_true()
        assert_that(is_nonnegative_definite(np.array([[0.0, 1.0], [1.0, 0.0]]))).is_false()
