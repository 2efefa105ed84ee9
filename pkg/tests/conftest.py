import numpy as np
import pytest

from capwaves import DimensionlessParams, Grid, StripGrid

_LINES = []


def record_criterion(number, name, passed, detail):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    _LINES.append(line)
    print(line)
    return passed


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid64():
    return Grid(64)


@pytest.fixture(scope="session")
def strip64(grid64):
    return StripGrid(grid64, 24)


@pytest.fixture
def wavy(grid64):
    """A variable surface and bottom with eps = beta = 0.5."""
    x = grid64.x
    zeta = np.cos(x) + 0.3 * np.sin(2 * x)
    b = 0.8 * np.cos(x + 1.0)
    return zeta, b, DimensionlessParams(eps=0.5, mu=0.5, beta=0.5)
