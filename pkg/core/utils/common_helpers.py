import os
import json
import hashlib
import logging
import datetime
from typing import Dict, Any, List, Optional

import numpy as np
import yaml
from deepdiff import DeepDiff

from core.errors import IsingConcError

logger = logging.getLogger(__name__)


class RunUtils:
    """
    A collection of helpers shared by the library, the command line and the tests:
    seed derivation, hashing, structured file I/O and argument parsing.
    """

    @staticmethod
    def derive_seed(root_seed: int, *labels: Any) -> int:
        """
        Derive a 32-bit child seed from a root seed and a sequence of labels.

        The derivation hashes the textual form of its inputs with sha256, so
        the child seed depends only on the values and never on scheduling.

        Args:
            root_seed: Root seed of the run
            labels: Additional labels (names, indices) identifying the work unit

        Returns:
            An unsigned 32-bit integer seed
        """
        text = ":".join([str(int(root_seed))] + [str(label) for label in labels])
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        return int.from_bytes(digest[:4], "big")

    @staticmethod
    def hash_arrays(*arrays: Any) -> str:
        """
        Compute a sha256 hex digest over the canonical bytes of numeric arrays.

        Args:
            arrays: Arrays (or array-likes) to hash, in order

        Returns:
            The hex digest
        """
        digest = hashlib.sha256()
        for array in arrays:
            canonical = np.ascontiguousarray(np.asarray(array, dtype=np.float64))
            digest.update(str(canonical.shape).encode("utf-8"))
            digest.update(canonical.tobytes())
        return digest.hexdigest()

    @staticmethod
    def hash_file(file_path: str) -> str:
        with open(file_path, "rb") as f:
            return hashlib.sha256(f.read()).hexdigest()

    @staticmethod
    def get_iso_timestamp() -> str:
        """
        Get the current timestamp in ISO 8601 format.

        Returns:
            Current timestamp in ISO 8601 format
        """
        return datetime.datetime.now().isoformat()

    @staticmethod
    def load_structured_file(file_path: str) -> Any:
        """
        Load a JSON or YAML file, chosen by extension.

        Args:
            file_path: Path to the file (.json, .yaml or .yml)

        Returns:
            The parsed content

        Raises:
            FileNotFoundError: If the file does not exist
            json.JSONDecodeError: If a .json file is not valid JSON
            yaml.YAMLError: If a YAML file cannot be parsed
        """
        try:
            with open(file_path, "r") as f:
                if file_path.endswith((".yaml", ".yml")):
                    return yaml.safe_load(f)
                return json.load(f)
        except FileNotFoundError:
            logger.error(f"File not found: {file_path}")
            raise
        except json.JSONDecodeError:
            logger.error(f"Invalid JSON in file: {file_path}")
            raise
        except yaml.YAMLError:
            logger.error(f"Invalid YAML in file: {file_path}")
            raise

    @staticmethod
    def save_json_file(data: Any, file_path: str) -> None:
        """
        Save data to a JSON file with sorted keys.

        Args:
            data: Data to save
            file_path: Path to the JSON file

        Raises:
            IOError: If the file cannot be written
        """
        try:
            directory = os.path.dirname(file_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(file_path, "w") as f:
                json.dump(data, f, indent=2, sort_keys=True)
                f.write("\n")
        except IOError:
            logger.error(f"Error writing to file: {file_path}")
            raise

    @staticmethod
    def parse_grid(text: str, integer: bool = False) -> List[float]:
        """
        Parse a grid string.

        Accepts either "a:b:steps" (inclusive, evenly spaced) or a comma
        separated list of values.

        Args:
            text: Grid string
            integer: Round grid values to integers (duplicates removed)

        Returns:
            The grid as an increasing list

        Raises:
            IsingConcError: If the grid is malformed or not increasing
        """
        try:
            if ":" in text:
                start, stop, steps = text.split(":")
                grid = np.linspace(float(start), float(stop), int(steps)).tolist()
            else:
                grid = [float(item) for item in text.split(",") if item.strip()]
        except ValueError:
            logger.error(f"Malformed grid: {text}")
            raise IsingConcError(f"malformed grid '{text}'", module="cli")

        if integer:
            grid = sorted({int(round(value)) for value in grid})
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            logger.error(f"Grid is empty or not increasing: {text}")
            raise IsingConcError(f"grid '{text}' must be nonempty and increasing", module="cli")
        return grid

    @staticmethod
    def parse_constants(text: Optional[str]) -> Dict[str, float]:
        """
        Parse a "name=value,name=value" constants map.

        Args:
            text: Constants string (None or empty gives an empty map)

        Returns:
            Mapping from constant name to positive value

        Raises:
            IsingConcError: If an entry is malformed or a value is not positive
        """
        constants: Dict[str, float] = {}
        if not text:
            return constants
        for item in text.split(","):
            name, sep, value = item.partition("=")
            try:
                parsed = float(value)
            except ValueError:
                parsed = float("nan")
            if not sep or not name.strip() or not parsed > 0:
                logger.error(f"Malformed constant: {item}")
                raise IsingConcError(f"constant '{item}' must be name=positive value", module="cli")
            constants[name.strip()] = parsed
        return constants

    @staticmethod
    def merge_dictionaries(dict1: Dict[str, Any], dict2: Dict[str, Any],
                           overwrite: bool = True) -> Dict[str, Any]:
        """
        Merge two dictionaries recursively.

        Args:
            dict1: First dictionary
            dict2: Second dictionary
            overwrite: Whether to overwrite values in dict1 with values from dict2

        Returns:
            The merged dictionary
        """
        result = dict1.copy()

        for key, value in dict2.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = RunUtils.merge_dictionaries(result[key], value, overwrite)
            elif key not in result or overwrite:
                result[key] = value

        return result

    @staticmethod
    def compare_manifests(manifest1: Dict[str, Any], manifest2: Dict[str, Any],
                          ignore_keys: Optional[List[str]] = None) -> Dict[str, Any]:
        """
        Compare two run manifests, optionally ignoring certain top-level keys.

        Args:
            manifest1: First manifest
            manifest2: Second manifest
            ignore_keys: Keys to ignore in the comparison (default: the timestamp)

        Returns:
            The DeepDiff result as a dictionary; empty when the manifests agree
        """
        if ignore_keys is None:
            ignore_keys = ["created_at"]
        excluded = [f"root['{key}']" for key in ignore_keys]
        return DeepDiff(manifest1, manifest2, exclude_paths=excluded).to_dict()

    @staticmethod
    def worker_count(configured: Any = 0) -> int:
        """
        Resolve the number of worker threads.

        The configured value (0 meaning one per CPU) is capped by the
        ISING_CONC_THREADS environment variable when that is set.

        Args:
            configured: Worker count from configuration

        Returns:
            A positive worker count
        """
        try:
            workers = int(configured)
        except (TypeError, ValueError):
            workers = 0
        if workers <= 0:
            workers = os.cpu_count() or 1
        cap = os.environ.get("ISING_CONC_THREADS")
        if cap:
            try:
                if int(cap) > 0:
                    workers = min(workers, int(cap))
            except ValueError:
                logger.warning(f"Ignoring non-integer ISING_CONC_THREADS={cap}")
        return max(1, workers)
