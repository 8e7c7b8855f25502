import logging
import os

import numpy as np
import pytest
from assertpy import assert_that
from loguru import logger as loguru_logger

from core.assertions.numeric_assertions import NumericAssertions
from core.config.env_loader import ConfigLoader, get_config, get_profile_name, get_settings
from core.config.logging_config import _size_to_rotation, configure_logging, is_configured
from core.errors import IsingConcError, ModelFormatError, PolynomialFormatError
from core.model.io import load_schema
from core.reporting.artifacts import build_manifest, format_cell, read_csv, validate_manifest, write_csv
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)


@pytest.fixture
def run_files(tmp_path):
    model_path = tmp_path / "model.json"
    model_path.write_text('{"n": 2, "J": [[0, 1, 0.25]], "h": [0.0, 0.0]}\n')
    output_path = tmp_path / "out.csv"
    output_path.write_text("t,bound\n1,0.5\n")
    return str(model_path), str(output_path)


class TestConfiguration:
    """
    Test suite for configuration profiles and environment substitution.
    """

    @pytest.mark.functional
    def test_quick_profile_overrides_defaults(self):
        # Act
        quick = get_settings("mc")
        default = get_settings("mc", profile="default")

        # Assert
        assert_that(get_profile_name()).is_equal_to("quick")
        assert_that(quick["samples"]).is_equal_to(20000)
        assert_that(default["samples"]).is_equal_to(100000)
        assert_that(quick["burn_in_factor"]).is_equal_to(default["burn_in_factor"])

    @pytest.mark.functional
    def test_unknown_profile(self):
        with pytest.raises(IsingConcError) as error:
            get_settings("mc", profile="nightly")
        assert_that(error.value.module).is_equal_to("config")

    @pytest.mark.functional
    def test_unknown_section(self):
        with pytest.raises(IsingConcError):
            get_settings("plotting")

    @pytest.mark.functional
    def test_full_configuration_lists_profiles(self):
        # Act
        config = get_config()

        # Assert
        assert_that(config["profiles"]).contains_key("default", "quick", "full")
        assert_that(config["norms"]["seed"]).is_equal_to(get_settings("norms")["seed"])

    @pytest.mark.functional
    def test_environment_substitution(self, monkeypatch):
        # Arrange
        loader = ConfigLoader()
        monkeypatch.delenv("ISING_CONC_UNSET_VAR", raising=False)
        monkeypatch.setenv("ISING_CONC_SET_VAR", "3")

        # Act & Assert
        assert_that(loader._substitute_env_vars("${ISING_CONC_UNSET_VAR:-7}")).is_equal_to("7")
        assert_that(loader._substitute_env_vars("${ISING_CONC_SET_VAR:-7}")).is_equal_to("3")
        assert_that(loader._substitute_env_vars("${ISING_CONC_UNSET_VAR}")).is_equal_to("${ISING_CONC_UNSET_VAR}")

    @pytest.mark.functional
    def test_thread_cap_from_environment(self, monkeypatch):
        # Act & Assert
        monkeypatch.setenv("ISING_CONC_THREADS", "2")
        assert_that(RunUtils.worker_count(16)).is_equal_to(2)
        monkeypatch.setenv("ISING_CONC_THREADS", "many")
        assert_that(RunUtils.worker_count(3)).is_equal_to(3)
        monkeypatch.delenv("ISING_CONC_THREADS")
        assert_that(RunUtils.worker_count(0)).is_greater_than_or_equal_to(1)


class TestRunUtils:
    """
    Test suite for seed derivation, grids, constants and structured files.
    """

    @pytest.mark.functional
    def test_derive_seed(self):
        # Act
        seed = RunUtils.derive_seed(12345, "chain", 0)

        # Assert
        assert_that(seed).is_equal_to(RunUtils.derive_seed(12345, "chain", 0))
        assert_that(seed).is_not_equal_to(RunUtils.derive_seed(12345, "chain", 1))
        assert_that(seed).is_not_equal_to(RunUtils.derive_seed(12346, "chain", 0))
        assert_that(seed).is_between(0, 2 ** 32 - 1)

    @pytest.mark.functional
    def test_hash_arrays_sees_shape(self):
        assert_that(RunUtils.hash_arrays(np.zeros(4))).is_not_equal_to(RunUtils.hash_arrays(np.zeros((2, 2))))
        assert_that(RunUtils.hash_arrays([1, 2])).is_equal_to(RunUtils.hash_arrays(np.array([1.0, 2.0])))

    @pytest.mark.functional
    def test_parse_grid(self):
        # Act & Assert
        assert_that(RunUtils.parse_grid("0:1:5")).is_equal_to([0.0, 0.25, 0.5, 0.75, 1.0])
        assert_that(RunUtils.parse_grid("0.5, 2,4")).is_equal_to([0.5, 2.0, 4.0])
        assert_that(RunUtils.parse_grid("12,18,18.2,24", integer=True)).is_equal_to([12, 18, 24])

    @pytest.mark.functional
    @pytest.mark.parametrize("text", ["3,1", "", "1:2", "a,b", "1,1"])
    def test_invalid_grid(self, text):
        with pytest.raises(IsingConcError) as error:
            RunUtils.parse_grid(text)
        assert_that(error.value.module).is_equal_to("cli")

    @pytest.mark.functional
    def test_parse_constants(self):
        # Act
        constants = RunUtils.parse_constants("c=2, C_K=0.5")

        # Assert
        assert_that(constants).is_equal_to({"c": 2.0, "C_K": 0.5})
        assert_that(RunUtils.parse_constants(None)).is_empty()

    @pytest.mark.functional
    @pytest.mark.parametrize("text", ["c=-1", "c", "=2", "c=zero", "c=0"])
    def test_invalid_constants(self, text):
        with pytest.raises(IsingConcError):
            RunUtils.parse_constants(text)

    @pytest.mark.functional
    def test_merge_dictionaries(self):
        # Act
        merged = RunUtils.merge_dictionaries({"mc": {"samples": 1, "seed": 2}}, {"mc": {"samples": 5}})

        # Assert
        assert_that(merged).is_equal_to({"mc": {"samples": 5, "seed": 2}})

    @pytest.mark.functional
    def test_structured_files(self, tmp_path):
        # Arrange
        yaml_path = tmp_path / "settings.yaml"
        yaml_path.write_text("mc:\n  samples: 10\n")
        json_path = str(tmp_path / "nested" / "settings.json")

        # Act
        RunUtils.save_json_file({"b": 1, "a": [1, 2]}, json_path)

        # Assert
        assert_that(RunUtils.load_structured_file(str(yaml_path))).is_equal_to({"mc": {"samples": 10}})
        assert_that(RunUtils.load_structured_file(json_path)).is_equal_to({"a": [1, 2], "b": 1})
        with pytest.raises(FileNotFoundError):
            RunUtils.load_structured_file(str(tmp_path / "missing.json"))


class TestArtifacts:
    """
    Test suite for CSV output and run manifests.
    """

    @pytest.mark.functional
    def test_float_cells_round_trip(self):
        # Act & Assert
        assert_that(format_cell(0.1)).is_equal_to("0.10000000000000001")
        assert_that(float(format_cell(1.0 / 3.0))).is_equal_to(1.0 / 3.0)
        assert_that(format_cell(np.int64(3))).is_equal_to("3")
        assert_that(format_cell(np.bool_(True))).is_equal_to("true")
        assert_that(format_cell(None)).is_equal_to("")

    @pytest.mark.functional
    def test_write_csv(self, tmp_path):
        # Arrange
        path = str(tmp_path / "curves" / "tail.csv")

        # Act
        write_csv(path, ["t", "bound", "branch"], [(0.5, 2.0, "k=2 {1}{2}"), (1.0, 0.25, "k=2 {1,2}")])

        # Assert
        rows = read_csv(path)
        assert_that(rows).is_length(2)
        assert_that(rows[0]).is_equal_to({"t": "0.5", "bound": "2", "branch": "k=2 {1}{2}"})
        with open(path) as handle:
            assert_that(handle.readline()).is_equal_to("t,bound,branch\n")

    @pytest.mark.functional
    def test_manifest_is_valid(self, run_files):
        # Arrange
        model_path, output_path = run_files

        # Act
        manifest = build_manifest("check", {"model": model_path}, "quick", {"seed": 1}, {"c": 1.0},
                                  {"model": model_path}, [output_path])

        # Assert
        validate_manifest(manifest)
        NumericAssertions.assert_matches_schema(manifest, load_schema("manifest.schema.json"))
        assert_that(manifest["hashes"]["model"]).is_equal_to(RunUtils.hash_file(model_path))
        assert_that(manifest["outputs"]).contains_key("out.csv")
        assert_that(manifest["versions"]).contains_key("numpy", "scipy", "package", "python")
        assert_that(manifest).does_not_contain_key("status")

    @pytest.mark.functional
    def test_manifest_rejects_nonpositive_constants(self, run_files):
        # Arrange
        model_path, output_path = run_files
        manifest = build_manifest("bound", {}, "quick", {}, {"c": -1.0}, {}, [output_path])

        # Act & Assert
        with pytest.raises(IsingConcError):
            validate_manifest(manifest)

    @pytest.mark.functional
    def test_manifests_compare_without_timestamps(self, run_files):
        # Arrange
        model_path, output_path = run_files
        first = build_manifest("check", {}, "quick", {"seed": 1}, {}, {"model": model_path}, [output_path])
        second = dict(first, created_at="2000-01-01T00:00:00")

        # Act & Assert
        assert_that(RunUtils.compare_manifests(first, second)).is_empty()
        NumericAssertions.assert_manifests_equivalent(first, second)
        assert_that(RunUtils.compare_manifests(first, dict(second, seeds={"seed": 2}))).is_not_empty()


class TestErrorsAndLogging:

    @pytest.mark.functional
    def test_format_errors_carry_line_numbers(self):
        # Act
        error = ModelFormatError("duplicate triplet", line=3)
        poly_error = PolynomialFormatError("malformed term", line=7)

        # Assert
        assert_that(str(error)).is_equal_to("line 3: duplicate triplet")
        assert_that(error.line).is_equal_to(3)
        assert_that(error.module).is_equal_to("model")
        assert_that(poly_error.module).is_equal_to("boolfn")
        assert_that(isinstance(poly_error, IsingConcError)).is_true()
        assert_that(str(ModelFormatError("empty document"))).is_equal_to("empty document")

    @pytest.mark.functional
    def test_rotation_sizes(self):
        assert_that(_size_to_rotation("10MB")).is_equal_to("10 MB")
        assert_that(_size_to_rotation("512")).is_equal_to("512 B")

    @pytest.mark.functional
    def test_standard_logging_reaches_loguru(self):
        # Arrange
        captured = []
        configure_logging(level="info", settings={"console": {"enabled": False}, "file": {"enabled": False}})
        sink = loguru_logger.add(lambda message: captured.append(message.record["message"]), level="INFO")

        # Act
        try:
            logging.getLogger("core.mc.glauber").info("sampled 10 states")
            logging.getLogger("core.mc.glauber").debug("not shown")
        finally:
            loguru_logger.remove(sink)

        # Assert
        assert_that(is_configured()).is_true()
        assert_that(captured).is_equal_to(["sampled 10 states"])

    @pytest.mark.functional
    def test_file_sink(self, tmp_path):
        # Arrange
        path = str(tmp_path / "logs" / "run.log")
        settings = {"console": {"enabled": False},
                    "file": {"enabled": True, "path": path, "max_size": "1MB", "backup_count": 1}}

        # Act
        configure_logging(level="warning", settings=settings)
        logging.getLogger("core.cli").warning("model outside the Dobrushin regime")
        loguru_logger.remove()

        # Assert
        assert_that(os.path.exists(path)).is_true()
        with open(path) as handle:
            assert_that(handle.read()).contains("WARNING - model outside the Dobrushin regime")
