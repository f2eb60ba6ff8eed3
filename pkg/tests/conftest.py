"""Shared solver fixtures; the expensive solves run once per session."""

import numpy as np
import pytest

from shapelab.grid import GridDomain
from shapelab.lame import solve_goursat_ex8, solve_triple_s2

EX8_DATA = (0.3, 0.2)
TRIPLE_DATA = (1.0, 0.2, 0.1)


@pytest.fixture(scope="session")
def ex8_domain():
    return GridDomain((0.0, 0.0), (0.5, 0.5), 64)


@pytest.fixture(scope="session")
def ex8(ex8_domain):
    return solve_goursat_ex8(*EX8_DATA, ex8_domain)


@pytest.fixture(scope="session")
def triple_domain():
    return GridDomain((0.0, 0.0, 0.0), (0.4, 0.4, 0.4), 24)


@pytest.fixture(scope="session")
def triple(triple_domain):
    return solve_triple_s2(*TRIPLE_DATA, triple_domain)


@pytest.fixture(scope="session")
def triple_shifted(triple_domain):
    # same rotation coefficients, eta shifted to (1, 2, 4) so lambda = 0 is admissible
    return solve_triple_s2(*TRIPLE_DATA, triple_domain, c=(1.0, 2.0, 4.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines, echoed after the run so they show without -s
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
