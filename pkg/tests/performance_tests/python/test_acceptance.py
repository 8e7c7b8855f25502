import logging
import math
import time
from dataclasses import asdict

import numpy as np
import pytest
from assertpy import assert_that
from scipy.optimize import minimize

from core.assertions.numeric_assertions import NumericAssertions
from core.boolfn.polynomial import cube_table, walsh_transform
from core.boolfn.tensors import SymmetricTensor, symmetrize
from core.entropy.tensorization import tv_influence, verify_at
from core.mc.experiments import EXAMPLE25_GRID, bond_law, example25_slopes, gumbel_profile, run_protocol
from core.mc.glauber import sample_states, state_law_distance
from core.model.ising import chain_model
from core.model.law import exact_law
from core.norms.interpolation import latala_vector_norm, rearrangement_sandwich
from core.norms.partition_norm import all_partition_norms, partition_norm
from core.norms.partitions import parse_partition
from core.reporting.allure_reporter import allure_reporter

logger = logging.getLogger(__name__)


class TestExactComputations:
    """
    Acceptance runs for the exact transforms and norms.
    """

    @pytest.mark.performance
    def test_walsh_round_trip(self, rng):
        # Arrange
        started = time.perf_counter()
        worst = 0.0

        # Act
        for n in range(2, 13):
            for _ in range(50):
                values = rng.normal(size=1 << n)
                worst = max(worst, float(np.max(np.abs(cube_table(walsh_transform(values)) - values))))

        # Assert
        assert_that(worst).is_less_than_or_equal_to(1e-12)
        assert_that(time.perf_counter() - started).is_less_than(10.0)

    @pytest.mark.performance
    def test_two_block_norm_is_largest_singular_value(self, rng):
        for _ in range(100):
            # Arrange
            A = symmetrize(rng.normal(size=(20, 20)))

            # Act
            value = partition_norm(A, parse_partition("{1}{2}")).value
            frobenius = partition_norm(A, parse_partition("{1,2}")).value

            # Assert
            NumericAssertions.assert_close(value, np.linalg.svd(A, compute_uv=False)[0], rel=1e-8)
            NumericAssertions.assert_close(frobenius, np.linalg.norm(A), rel=1e-14)

    @pytest.mark.performance
    def test_partition_norm_order(self, rng):
        """Every norm is at most the Frobenius norm and coarsening never decreases the value."""
        full = parse_partition("{1,2,3}")
        for trial in range(100):
            # Arrange
            tensor = SymmetricTensor(symmetrize(rng.normal(size=(6, 6, 6))))

            # Act
            results = all_partition_norms(tensor, restarts=8, seed=trial)

            # Assert
            for fine, fine_result in results.items():
                assert_that(fine_result.value).is_less_than_or_equal_to(results[full].value + 1e-9)
                for coarse, coarse_result in results.items():
                    if fine.refines(coarse):
                        assert_that(coarse_result.value).is_greater_than_or_equal_to(fine_result.value - 1e-9)

    @pytest.mark.performance
    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    def test_water_filling_matches_constrained_optimizer(self, rng, p):
        for _ in range(50):
            # Arrange
            x = rng.normal(size=4)
            constraint = {"type": "ineq", "fun": lambda y: p - y @ y, "jac": lambda y: -2.0 * y}

            # Act
            solved = minimize(lambda y: -(x @ y), np.zeros(4), jac=lambda y: -x, method="SLSQP",
                              bounds=[(-1.0, 1.0)] * 4, constraints=[constraint],
                              options={"ftol": 1e-12, "maxiter": 500})

            # Assert
            NumericAssertions.assert_close(latala_vector_norm(x, p), -solved.fun, rel=1e-4)

    @pytest.mark.performance
    def test_rearrangement_sandwich_on_random_instances(self, rng):
        for _ in range(1000):
            # Arrange
            x = rng.standard_cauchy(size=int(rng.integers(1, 40)))
            p = float(rng.uniform(0.1, 50.0))

            # Act
            value = latala_vector_norm(x, p)
            head, tail, total = rearrangement_sandwich(x, p)

            # Assert
            NumericAssertions.assert_within(total, value * (1 - 1e-12), 2.0 * value * (1 + 1e-12))
            assert_that(head).is_less_than_or_equal_to(value * (1 + 1e-12))

    @pytest.mark.performance
    def test_cubic_interval_statistic_exponents(self):
        # Arrange
        allure_reporter.add_feature("reproductions")
        started = time.perf_counter()

        # Act
        rows, slopes = example25_slopes(EXAMPLE25_GRID, seed=0)

        # Assert
        allure_reporter.add_json("slopes", {key: asdict(fit) for key, fit in slopes.items()})
        NumericAssertions.assert_within(slopes["{1,2,3}"].slope, 0.85, 1.15, name="{1,2,3}")
        NumericAssertions.assert_within(slopes["{1,2,3}"].corrected, 0.85, 1.15, name="{1,2,3} corrected")
        NumericAssertions.assert_within(slopes["{1,2}{3}"].slope, 0.85, 1.15, name="{1,2}{3}")
        # lower-order terms of the injective norm dominate the plain slope on n <= 48
        NumericAssertions.assert_within(slopes["{1}{2}{3}"].corrected, 0.35, 0.65, name="{1}{2}{3} corrected")
        assert_that(slopes["{1}{2}{3}"].corrected).is_less_than(slopes["{1}{2}{3}"].slope)
        NumericAssertions.assert_within(slopes["drift"].slope, 2.7, 3.3, name="drift")
        NumericAssertions.assert_within(slopes["variance"].slope, 2.7, 3.3, name="variance")
        assert_that(time.perf_counter() - started).is_less_than(300.0)

    @pytest.mark.performance
    def test_inverse_square_matrix_profile_stays_bounded(self):
        """Thresholds of a_ij = 1/(i+j)^2 grow at most like log p, uniformly in n."""
        # Arrange
        p_grid = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0]

        # Act
        profiles = {n: gumbel_profile(n, p_grid, restarts=8, seed=0)[0] for n in (50, 100, 200, 500)}

        # Assert
        base_12 = max(row["{1,2},p"] for row in profiles[50])
        base_1_2 = max(row["{1}{2},p"] / row["log_p"] for row in profiles[50])
        for n, rows in profiles.items():
            for row in rows:
                assert_that(row["{1,2},p"]).described_as(f"n={n}").is_less_than(3.0 * base_12)
                assert_that(row["{1}{2},p"] / row["log_p"]).described_as(f"n={n}").is_less_than(3.0 * base_1_2)


class TestEntropyAcceptance:
    """
    Acceptance runs for approximate tensorization and influences on random models.
    """

    @pytest.mark.performance
    def test_approximate_tensorization_has_no_violations(self, dobrushin_models):
        # Arrange
        started = time.perf_counter()

        # Act
        results = [verify_at(model, trials=10000, seed=k) for k, model in enumerate(dobrushin_models)]
        allure_reporter.add_step("approximate tensorization", f"{len(results)} models, 10000 trials each")

        # Assert
        for result in results:
            assert_that(result.violations).is_equal_to(0)
        assert_that(time.perf_counter() - started).is_less_than(120.0)

    @pytest.mark.performance
    def test_tv_influences_are_bounded_by_couplings(self, dobrushin_models):
        for model in dobrushin_models:
            # Act
            influence = tv_influence(model)

            # Assert
            excess = influence - np.abs(model.J)
            assert_that(float(excess.max())).is_less_than_or_equal_to(1e-12)


class TestSamplingAcceptance:
    """
    Acceptance runs for the sampler and the envelope protocol.
    """

    @pytest.mark.performance
    def test_glauber_states_reach_the_exact_law(self):
        # Arrange
        model = chain_model(8)
        law = exact_law(model)

        # Act
        states, _, _, _, _ = sample_states(model, 1000000, seed=17)

        # Assert
        distance = state_law_distance(states, law)
        allure_reporter.add_parameters({"tv_distance": distance})
        assert_that(distance).is_less_than_or_equal_to(0.01)

    @pytest.mark.performance
    def test_bond_marginals(self):
        # Arrange
        started = time.perf_counter()

        # Act
        report = bond_law(n=8, samples=100000, seed=29)

        # Assert
        closed_form = 1.0 / (1.0 + math.exp(-2.0 / 3.0))
        assert_that(report.enumerated_plus).is_length(7)
        for enumerated in report.enumerated_plus:
            assert_that(abs(enumerated - closed_form)).is_less_than_or_equal_to(1e-12)
        assert_that(report.max_dependence).is_less_than_or_equal_to(1e-12)
        for value, enumerated in zip(report.empirical_plus, report.enumerated_plus):
            NumericAssertions.assert_within(value, enumerated - 0.005, enumerated + 0.005)
        assert_that(time.perf_counter() - started).is_less_than(60.0)

    @pytest.mark.performance
    def test_envelope_protocol(self):
        """Calibrated on one seed, validated on another; the tightened control must fail."""
        # Arrange
        allure_reporter.add_story("envelope protocol")
        started = time.perf_counter()

        # Act
        result = run_protocol()

        # Assert
        allure_reporter.add_table("calibration", ("case", "name", "value", "violations"),
                                  [(case.name, case.calibration.name, case.calibration.value,
                                    case.report.violations) for case in result.cases])
        assert_that(result.cases).is_length(12)
        assert_that(result.violations).is_equal_to(0)
        assert_that(result.control_violations).is_greater_than_or_equal_to(1)
        assert_that(result.passed).is_true()
        assert_that(time.perf_counter() - started).is_less_than(600.0)
