"""
Shared fixtures: seeded random generators and a runner for the command line application.
"""

from pathlib import Path
from typing import List, NamedTuple

import io

import numpy as np
import pytest

from tvtree.app.__main__ import parse_and_dispatch

class RunResult(NamedTuple):
    code: int
    output: str

    @property
    def Lines(self) -> List[str]:
        return self.output.splitlines()

    def value(self, name: str) -> float:
        """ The number of the output line `<name> <value>`. """
        for line in self.Lines:
            key, _, value = line.partition(" ")
            if key == name:
                return float(value)
        raise KeyError(name)

@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)

@pytest.fixture
def runApp(tmp_path: Path, monkeypatch):
    """ Runs the application with the temporary directory as working directory and returns exit code and standard output. """
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("TVTREE_THREADS", raising = False)

    def run(*argv) -> RunResult:
        output = io.StringIO()
        code = parse_and_dispatch([str(argument) for argument in argv], tmp_path, output)
        return RunResult(code, output.getvalue())

    return run
