"""Shared small systems.  Production-size runs live in test_acceptance.py."""

import numpy as np
import pytest

from kgdecay.core.grid import make_grid
from kgdecay.free_kg import ModelParams
from kgdecay.kg_dynamics import KgGenerator, riesz_projectors
from kgdecay.schrodinger import PotentialSpec, assemble_h


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(30.0, 299)


@pytest.fixture(scope="session")
def params():
    return ModelParams(1.0)


@pytest.fixture(scope="session")
def square_well():
    return PotentialSpec("square_well", 4.0, 1.0)


@pytest.fixture(scope="session")
def small_system(small_grid, params, square_well):
    gen = KgGenerator(assemble_h(square_well, small_grid), params)
    return gen, riesz_projectors(gen)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
