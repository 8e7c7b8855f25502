import csv
import logging
import os
import platform
from typing import Any, Dict, Iterable, List, Optional, Sequence

import jsonschema
import numpy as np
import scipy

import core
from core.config.env_loader import get_reporting_config
from core.errors import IsingConcError
from core.model.io import load_schema
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)


def _float_format() -> str:
    return get_reporting_config().get("csv", {}).get("float_format", ".17g")


def format_cell(value: Any, float_format: Optional[str] = None) -> str:
    """Floats with the configured round-trip format; everything else via str."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return format(float(value), float_format or _float_format())
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Write rows to a CSV file with byte-stable float formatting.

    Args:
        path: Output file path; parent directories are created
        header: Column names
        rows: Row values, one sequence per row

    Returns:
        The path written
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    float_format = _float_format()
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_cell(value, float_format) for value in row])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def versions() -> Dict[str, str]:
    return {
        "package": core.__version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def build_manifest(command: str, arguments: Dict[str, Any], profile: str, seeds: Dict[str, int],
                   constants: Dict[str, float], inputs: Dict[str, str], outputs: Sequence[str],
                   status: Optional[int] = None) -> Dict[str, Any]:
    """
    Manifest sufficient to re-run a command: arguments, seeds, constants,
    sha256 of every input file, output file names with their sha256, and library versions.
    """
    hashes = {name: RunUtils.hash_file(path) for name, path in inputs.items() if path}
    manifest = {
        "command": command,
        "arguments": arguments,
        "profile": profile,
        "seeds": seeds,
        "constants": constants,
        "hashes": hashes,
        "versions": versions(),
        "created_at": RunUtils.get_iso_timestamp(),
        "outputs": {os.path.basename(path): RunUtils.hash_file(path) for path in outputs},
    }
    if status is not None:
        manifest["status"] = status
    return manifest


def validate_manifest(manifest: Dict[str, Any]) -> None:
    """
    Raises:
        IsingConcError: If the manifest does not match its schema
    """
    try:
        jsonschema.validate(instance=manifest, schema=load_schema("manifest.schema.json"))
    except jsonschema.exceptions.ValidationError as e:
        logger.error(f"Manifest validation failed: {e.message}")
        raise IsingConcError(f"invalid manifest: {e.message}", module="cli") from e


def write_manifest(directory: str, manifest: Dict[str, Any]) -> str:
    validate_manifest(manifest)
    name = get_reporting_config().get("manifest", {}).get("file_name", "manifest.json")
    path = os.path.join(directory, name)
    RunUtils.save_json_file(manifest, path)
    return path
