"""
Polynomial and tensor file grammars.

Polynomial files are plain text:

    # comment lines and blank lines are ignored
    n: 4
    [] : 0.5
    [1] : 2.0
    [1, 2] : -1.25
    [2, 3, 4] : 0.75

The header `n: <int>` comes first. Each term line is `S : a_S` with S a
sorted list of distinct 1-based sites. A subset may appear only once.

Tensor files are either dense `.npy` arrays or JSON/YAML objects

    {"n": 5, "order": 3, "entries": [[0, 1, 2, 0.5], ...], "symmetrize": true}

whose entries are 0-based index tuples followed by a value. With
`symmetrize` (the default) each entry is copied to all permutations of its
indices; conflicting values for the same index set are rejected.
"""
import json
import logging
import re
from itertools import permutations
from typing import List

import numpy as np

from core.boolfn.polynomial import TetrahedralPolynomial, indices_mask, mask_indices
from core.boolfn.tensors import SymmetricTensor, as_tensor
from core.errors import PolynomialFormatError
from core.model.io import read_document, validate_document, node_line

logger = logging.getLogger(__name__)

_HEADER = re.compile(r"^n\s*:\s*(\d+)$")
_TERM = re.compile(r"^\[([^\]]*)\]\s*:\s*(\S+)$")


def parse_polynomial(text: str) -> TetrahedralPolynomial:
    """
    Parse the polynomial text grammar.

    Raises:
        PolynomialFormatError: With the 1-based line of the first offending line
    """
    n = None
    coeffs = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            header = _HEADER.match(line)
            if not header or int(header.group(1)) < 1:
                raise PolynomialFormatError("expected header 'n: <positive int>'", line=number)
            n = int(header.group(1))
            continue
        term = _TERM.match(line)
        if not term:
            raise PolynomialFormatError(f"expected '[i, j, ...] : value', got '{line}'", line=number)
        try:
            sites: List[int] = [int(tok) for tok in term.group(1).split(",") if tok.strip()]
            value = float(term.group(2))
        except ValueError:
            raise PolynomialFormatError(f"malformed term '{line}'", line=number)
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise PolynomialFormatError("sites must be strictly increasing", line=number)
        if sites and (sites[0] < 1 or sites[-1] > n):
            raise PolynomialFormatError(f"sites must lie in [1, {n}]", line=number)
        if not np.isfinite(value):
            raise PolynomialFormatError("coefficient is not finite", line=number)
        mask = indices_mask(s - 1 for s in sites)
        if mask in coeffs:
            raise PolynomialFormatError(f"duplicate subset {sites}", line=number)
        coeffs[mask] = value
    if n is None:
        raise PolynomialFormatError("missing header 'n: <int>'", line=1)
    return TetrahedralPolynomial(n, coeffs)


def format_polynomial(poly: TetrahedralPolynomial) -> str:
    lines = [f"n: {poly.n}"]
    for mask in sorted(poly.coeffs, key=lambda m: (bin(m).count("1"), mask_indices(m))):
        sites = ", ".join(str(i + 1) for i in mask_indices(mask))
        lines.append(f"[{sites}] : {poly.coeffs[mask]!r}")
    return "\n".join(lines) + "\n"


def load_polynomial(path: str) -> TetrahedralPolynomial:
    try:
        with open(path, "r") as f:
            text = f.read()
    except FileNotFoundError:
        logger.error(f"Polynomial file not found: {path}")
        raise
    poly = parse_polynomial(text)
    logger.info(f"Loaded polynomial with n={poly.n}, degree {poly.degree}, {len(poly.coeffs)} terms")
    return poly


def dump_polynomial(poly: TetrahedralPolynomial, path: str) -> None:
    with open(path, "w") as f:
        f.write(format_polynomial(poly))


def parse_tensor(data, node=None) -> SymmetricTensor:
    validate_document(data, "tensor.schema.json", node, error_cls=PolynomialFormatError)
    n, order = data["n"], data["order"]
    symmetric = data.get("symmetrize", True)
    array = np.zeros((n,) * order)
    assigned = {}
    for k, entry in enumerate(data["entries"]):
        line = node_line(node, ["entries", k])
        if len(entry) != order + 1:
            raise PolynomialFormatError(f"entry needs {order} indices and a value", line=line)
        *index, value = entry
        if not all(isinstance(i, int) and 0 <= i < n for i in index):
            raise PolynomialFormatError(f"indices {index} must be integers in [0, {n})", line=line)
        if not isinstance(value, (int, float)) or not np.isfinite(value):
            raise PolynomialFormatError(f"value {value!r} is not a finite number", line=line)
        key = tuple(sorted(index)) if symmetric else tuple(index)
        if key in assigned and assigned[key] != value:
            raise PolynomialFormatError(f"conflicting values for indices {key}", line=line)
        assigned[key] = value
        targets = set(permutations(index)) if symmetric else {tuple(index)}
        for target in targets:
            array[target] = value
    try:
        return as_tensor(array)
    except ValueError as exc:
        raise PolynomialFormatError(str(exc))


def load_tensor(path: str) -> SymmetricTensor:
    """
    Load a symmetric tensor from a .npy array or a JSON/YAML entry list.

    Raises:
        FileNotFoundError: If the file does not exist
        PolynomialFormatError: If the content is malformed or not symmetric
    """
    if path.endswith(".npy"):
        try:
            array = np.load(path, allow_pickle=False)
        except FileNotFoundError:
            logger.error(f"Tensor file not found: {path}")
            raise
        try:
            tensor = as_tensor(array)
        except ValueError as exc:
            raise PolynomialFormatError(str(exc))
    else:
        try:
            with open(path, "r") as f:
                text = f.read()
        except FileNotFoundError:
            logger.error(f"Tensor file not found: {path}")
            raise
        data, node = read_document(text, path, error_cls=PolynomialFormatError)
        tensor = parse_tensor(data, node)
    logger.info(f"Loaded order-{tensor.d} tensor with n={tensor.n}")
    return tensor


def dump_tensor(tensor: SymmetricTensor, path: str) -> None:
    if path.endswith(".npy"):
        np.save(path, tensor.entries)
        return
    entries = [list(map(int, idx)) + [float(tensor.entries[idx])]
               for idx in zip(*np.nonzero(tensor.entries)) if list(idx) == sorted(idx)]
    with open(path, "w") as f:
        json.dump({"n": tensor.n, "order": tensor.d, "entries": entries}, f, indent=2)
