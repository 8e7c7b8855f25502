"""
Model file grammar.

A model file is a JSON (or YAML) object:

    {
      "n": 4,
      "J": [[0, 1, 0.3333], [1, 2, 0.3333], [2, 3, 0.3333]],
      "h": [0.0, 0.0, 0.0, 0.0],
      "name": "optional label"
    }

J lists [i, j, value] triplets with 0-based sites; each unordered pair is
given once (i < j is the canonical upper-triangle form). A pair listed in
both orientations must carry the same value, otherwise the file is rejected
as asymmetric. Diagonal triplets must be zero. Missing pairs are zero.
"""
import os
import json
import logging
from typing import Any, List, Optional

import numpy as np
import yaml
from jsonschema import Draft7Validator

from core.errors import ModelFormatError
from core.model.ising import IsingModel
from core.utils.common_helpers import RunUtils

logger = logging.getLogger(__name__)

SCHEMA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config", "schemas")


def load_schema(name: str) -> dict:
    return RunUtils.load_structured_file(os.path.join(SCHEMA_DIR, name))


def read_document(text: str, path: str, error_cls=ModelFormatError):
    """
    Parse JSON or YAML text, returning (data, node) where node is the YAML
    node tree used to recover source lines (None if unavailable).
    """
    is_json = path.endswith(".json")
    try:
        data = json.loads(text) if is_json else yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        logger.error(f"Invalid JSON in {path}: {exc.msg}")
        raise error_cls(exc.msg, line=exc.lineno)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        logger.error(f"Invalid YAML in {path}: {exc}")
        raise error_cls(str(getattr(exc, "problem", exc)), line=mark.line + 1 if mark else None)
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        node = None
    return data, node


def node_line(node, path: List[Any]) -> Optional[int]:
    """1-based source line of the element at a JSON path, falling back to the deepest known parent."""
    if node is None:
        return None
    line = node.start_mark.line + 1
    for key in path:
        if isinstance(node, yaml.MappingNode):
            match = [value for k, value in node.value if k.value == str(key)]
            if not match:
                break
            node = match[0]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
        line = node.start_mark.line + 1
    return line


def validate_document(data: Any, schema_name: str, node, error_cls=ModelFormatError) -> None:
    validator = Draft7Validator(load_schema(schema_name))
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        line = node_line(node, list(first.absolute_path))
        location = "/".join(str(p) for p in first.absolute_path) or "document"
        logger.error(f"Schema violation at {location}: {first.message}")
        raise error_cls(f"{location}: {first.message}", line=line)


def parse_model(data: Any, node=None) -> IsingModel:
    """
    Build a model from parsed file content.

    Raises:
        ModelFormatError: With the offending line when the content breaks the grammar
    """
    validate_document(data, "model.schema.json", node)
    n = data["n"]
    if len(data["h"]) != n:
        raise ModelFormatError(f"h has {len(data['h'])} entries, expected {n}", line=node_line(node, ["h"]))

    J = np.zeros((n, n))
    seen = {}
    for k, (i, j, value) in enumerate(data["J"]):
        line = node_line(node, ["J", k])
        if i >= n or j >= n:
            raise ModelFormatError(f"triplet [{i}, {j}, {value}] has a site outside [0, {n})", line=line)
        if not np.isfinite(value):
            raise ModelFormatError(f"triplet [{i}, {j}, {value}] is not finite", line=line)
        if i == j:
            if value != 0:
                raise ModelFormatError(f"nonzero diagonal coupling J[{i},{i}] = {value}", line=line)
            continue
        if (i, j) in seen:
            raise ModelFormatError(f"duplicate triplet for ({i}, {j})", line=line)
        if (j, i) in seen and seen[(j, i)] != value:
            raise ModelFormatError(f"asymmetric couplings J[{i},{j}] = {value} and J[{j},{i}] = {seen[(j, i)]}",
                                   line=line)
        seen[(i, j)] = value
        J[i, j] = value
        J[j, i] = value
    return IsingModel(J, np.asarray(data["h"], dtype=np.float64), name=data.get("name", ""))


def load_model(path: str) -> IsingModel:
    """
    Load and validate a model file.

    Args:
        path: Path to a .json, .yaml or .yml model file

    Returns:
        The model

    Raises:
        FileNotFoundError: If the file does not exist
        ModelFormatError: If the file breaks the grammar (with its line number)
    """
    try:
        with open(path, "r") as f:
            text = f.read()
    except FileNotFoundError:
        logger.error(f"Model file not found: {path}")
        raise
    data, node = read_document(text, path)
    model = parse_model(data, node)
    logger.info(f"Loaded model '{model.name or path}' with n={model.n}")
    return model


def model_to_dict(model: IsingModel) -> dict:
    rows, cols = np.nonzero(np.triu(model.J, k=1))
    return {
        "n": model.n,
        "J": [[int(i), int(j), float(model.J[i, j])] for i, j in zip(rows, cols)],
        "h": [float(v) for v in model.h],
        "name": model.name,
    }


def dump_model(model: IsingModel, path: str) -> None:
    RunUtils.save_json_file(model_to_dict(model), path)
