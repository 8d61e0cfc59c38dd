import numpy as np
import pytest

from fourthnls import ComplexField, RandomFieldSpec, make_grid, seeded_random_field

TWO_PI = 2.0 * np.pi


def random_field(dim, P, seed=0, band=None, L=TWO_PI, amplitude=1.0, mean_free=True):
    grid = make_grid(dim, P, L)
    band = P // 2 - 1 if band is None else band
    u = seeded_random_field(grid, RandomFieldSpec(seed, band, amplitude=amplitude, mean_free=mean_free))
    return ComplexField(grid, u.physical())


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = np.max(np.abs(b))
    return float(np.max(np.abs(a - b)) / scale) if scale else float(np.max(np.abs(a - b)))


@pytest.fixture
def grid1():
    return make_grid(1, 8, TWO_PI)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
