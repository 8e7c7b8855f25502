import json
import os

import pytest

from core.cli import main
from core.reporting.artifacts import read_csv

CHAIN4 = {
    "n": 4,
    "J": [[0, 1, 0.3333333333333333], [1, 2, 0.3333333333333333], [2, 3, 0.3333333333333333]],
    "h": [0.0, 0.0, 0.0, 0.0],
    "name": "chain4",
}

ASYMMETRIC = """{
  "n": 3,
  "J": [
    [0, 1, 0.2],
    [1, 0, 0.3]
  ],
  "h": [0, 0, 0]
}
"""

STRONG = """n: 3
J:
  - [0, 1, 0.7]
  - [1, 2, 0.7]
h: [0.0, 0.0, 0.0]
"""

POLY = """# sum of spins and one bond
n: 4
[1] : 0.5
[2] : 0.5
[3] : 0.5
[4] : 0.5
[2, 3] : 0.25
"""

BAD_POLY = """n: 4
[1] : 1.0
[2, 1] : 1.0
"""


@pytest.fixture(autouse=True)
def quick_profile(monkeypatch):
    """The command line reads the profile from the environment; restore it after each test."""
    monkeypatch.setenv("ISING_CONC_PROFILE", "quick")
    monkeypatch.delenv("ISING_CONC_THREADS", raising=False)


@pytest.fixture
def inputs(tmp_path):
    files = {
        "chain": tmp_path / "chain4.json",
        "asymmetric": tmp_path / "asymmetric.json",
        "strong": tmp_path / "strong.yaml",
        "poly": tmp_path / "sum.poly",
        "bad_poly": tmp_path / "bad.poly",
        "matrix": tmp_path / "e1.json",
    }
    files["chain"].write_text(json.dumps(CHAIN4))
    files["asymmetric"].write_text(ASYMMETRIC)
    files["strong"].write_text(STRONG)
    files["poly"].write_text(POLY)
    files["bad_poly"].write_text(BAD_POLY)
    files["matrix"].write_text(json.dumps({"n": 3, "order": 2, "entries": [[0, 0, 1.0]]}))
    return {name: str(path) for name, path in files.items()}


class CliRun:
    """Result of one command line invocation."""

    def __init__(self, status: int, out: str, stdout: str, stderr: str):
        self.status = status
        self.out = out
        self.stdout = stdout
        self.stderr = stderr

    def csv(self, name: str):
        return read_csv(os.path.join(self.out, name))

    @property
    def manifest(self):
        with open(os.path.join(self.out, "manifest.json")) as handle:
            return json.load(handle)


@pytest.fixture
def cli(tmp_path, capsys):
    """Run the command line with --out under tmp_path; each call gets its own directory."""
    counter = {"runs": 0}

    def run(*argv: str) -> CliRun:
        counter["runs"] += 1
        out = str(tmp_path / f"run{counter['runs']}")
        status = main(list(argv) + ["--out", out])
        captured = capsys.readouterr()
        return CliRun(status, out, captured.out, captured.err)

    return run
