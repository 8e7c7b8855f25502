from itertools import permutations
from typing import Any, Dict, Optional, Sequence

import jsonschema
import numpy as np
from assertpy import assert_that
from deepdiff import DeepDiff

from core.boolfn.tensors import as_tensor, off_diagonal_mask
from core.norms.partition_norm import NormResult, multilinear_form
from core.norms.partitions import Partition


class NumericAssertions:
    """
    Utility class for numeric assertions on arrays, curves and run artifacts.
    """

    @staticmethod
    def assert_close(actual: float, expected: float, rel: float = 1e-9, abs_tol: float = 0.0) -> None:
        """
        Assert |actual - expected| <= max(rel * |expected|, abs_tol).

        Args:
            actual: Observed value
            expected: Reference value
            rel: Relative tolerance
            abs_tol: Absolute tolerance

        Raises:
            AssertionError: If the assertion fails
        """
        tolerance = max(rel * abs(expected), abs_tol)
        assert_that(float(actual)).is_close_to(float(expected), tolerance)

    @staticmethod
    def assert_arrays_close(actual: Any, expected: Any, atol: float = 1e-12, rtol: float = 0.0) -> None:
        """
        Assert two arrays have equal shapes and agree entrywise.

        Raises:
            AssertionError: If the assertion fails
        """
        actual = np.asarray(actual, dtype=np.float64)
        expected = np.asarray(expected, dtype=np.float64)
        assert_that(actual.shape).is_equal_to(expected.shape)
        error = float(np.max(np.abs(actual - expected))) if actual.size else 0.0
        allowed = atol + rtol * (float(np.max(np.abs(expected))) if expected.size else 0.0)
        assert_that(error).described_as("max abs error").is_less_than_or_equal_to(allowed)

    @staticmethod
    def assert_nonincreasing(values: Sequence[float], tol: float = 0.0) -> None:
        values = np.asarray(values, dtype=np.float64)
        steps = np.diff(values)
        assert_that(float(steps.max()) if steps.size else 0.0).described_as("largest increase") \
            .is_less_than_or_equal_to(tol)

    @staticmethod
    def assert_nondecreasing(values: Sequence[float], tol: float = 0.0) -> None:
        NumericAssertions.assert_nonincreasing(-np.asarray(values, dtype=np.float64), tol)

    @staticmethod
    def assert_within(value: float, low: float, high: float, name: Optional[str] = None) -> None:
        """
        Assert low <= value <= high.

        Raises:
            AssertionError: If the assertion fails
        """
        assert_that(float(value)).described_as(name or "value").is_between(low, high)

    @staticmethod
    def assert_tetrahedral(tensor: Any, atol: float = 1e-12) -> None:
        """
        Assert a tensor is symmetric under index permutations and vanishes on its generalized diagonals.

        Raises:
            AssertionError: If the assertion fails
        """
        entries = np.asarray(getattr(tensor, "entries", tensor), dtype=np.float64)
        if entries.ndim < 2:
            return
        assert_that(len(set(entries.shape))).described_as("cubical shape").is_equal_to(1)
        asymmetry = max(float(np.max(np.abs(entries - np.transpose(entries, perm))))
                        for perm in permutations(range(entries.ndim)))
        assert_that(asymmetry).described_as("asymmetry").is_less_than_or_equal_to(atol)
        diagonal = entries[~off_diagonal_mask(entries.shape[0], entries.ndim)]
        largest = float(np.max(np.abs(diagonal))) if diagonal.size else 0.0
        assert_that(largest).described_as("generalized diagonal").is_less_than_or_equal_to(atol)

    @staticmethod
    def assert_certified_norm(tensor: Any, partition: Partition, result: NormResult, rtol: float = 1e-9) -> None:
        """
        Assert a norm result is attained: one unit vector per block, and the
        multilinear form at the witness equals the reported value.

        Raises:
            AssertionError: If the assertion fails
        """
        assert_that(result.witness).described_as("witness blocks").is_length(partition.size)
        for block, vector in zip(partition.blocks, result.witness):
            NumericAssertions.assert_close(np.linalg.norm(vector), 1.0, rel=rtol)
            assert_that(np.asarray(vector).size).is_equal_to(as_tensor(tensor).n ** len(block))
        attained = abs(multilinear_form(tensor, partition, result.witness))
        NumericAssertions.assert_close(attained, result.value, rel=rtol, abs_tol=rtol)

    @staticmethod
    def assert_probability(values: Any, upper: float = 1.0) -> None:
        values = np.asarray(values, dtype=np.float64)
        assert_that(bool(np.all(values >= 0.0))).described_as("nonnegative").is_true()
        assert_that(float(values.max()) if values.size else 0.0).is_less_than_or_equal_to(upper)

    @staticmethod
    def assert_within_stderr(estimate: float, expected: float, stderr: float, k: float = 3.0) -> None:
        """
        Assert |estimate - expected| <= k * stderr.

        Raises:
            AssertionError: If the assertion fails
        """
        assert_that(abs(float(estimate) - float(expected))).described_as(
            f"deviation from {expected}").is_less_than_or_equal_to(k * float(stderr))

    @staticmethod
    def assert_matches_schema(data: Dict[str, Any], schema: Dict[str, Any]) -> None:
        """
        Assert that data matches a JSON schema.

        Raises:
            AssertionError: If the assertion fails
        """
        try:
            jsonschema.validate(instance=data, schema=schema)
        except jsonschema.exceptions.ValidationError as e:
            raise AssertionError(f"JSON schema validation failed: {e.message}")

    @staticmethod
    def assert_manifests_equivalent(manifest1: Dict[str, Any], manifest2: Dict[str, Any],
                                    ignore_keys: Sequence[str] = ("created_at",)) -> None:
        """
        Assert two run manifests agree apart from ignored top-level keys.

        Raises:
            AssertionError: If the assertion fails
        """
        diff = DeepDiff(manifest1, manifest2, exclude_paths=[f"root['{key}']" for key in ignore_keys])
        assert_that(diff.to_dict()).is_empty()
