from __future__ import annotations

import numpy as np
import pytest

from sqgsheets import SolverConfig, continuation
from sqgsheets.solver import eps_grid

# acceptance lines collected during the run, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def cfg() -> SolverConfig:
    return SolverConfig()


@pytest.fixture(scope="session")
def sweep(cfg):
    """Default branch d = 1, eps = 0, 0.01, ..., 0.1 (N = 32, M = 256)."""
    return continuation(eps_grid(0.0, 0.1, 0.01), 1.0, cfg)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
