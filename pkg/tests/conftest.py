import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lpmhd.grid import Grid

settings.register_profile("lpmhd", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lpmhd")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid32():
    return Grid(2, 32)


@pytest.fixture
def grid64():
    return Grid(2, 64)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def mode_coeffs(grid: Grid, m, amplitude: complex = 1.0) -> np.ndarray:
    """Coefficients of the real field 2 Re(a e^{i k.x}) / L^{d/2} for integer mode ``m``."""
    c = np.zeros(grid.shape, dtype=complex)
    idx = tuple(int(x) % grid.N for x in m)
    neg = tuple(int(-x) % grid.N for x in m)
    c[idx] += amplitude
    c[neg] += np.conj(amplitude)
    return c


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
