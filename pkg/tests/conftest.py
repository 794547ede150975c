import numpy as np
import pytest

from kgmtorus.grid import SystemParams, TorusGrid
from kgmtorus.ground_state import shoot_ground_state


def band_limited(grid: TorusGrid, rng, kmax=3, amplitude=1.0, positive=False):
    """Random trigonometric polynomial with |k_i| <= kmax, scaled to max |u| = amplitude."""
    X, Y, Z = grid.mesh()
    w = 2 * np.pi / grid.length
    u = np.zeros(grid.shape)
    for _ in range(6):
        k = rng.integers(-kmax, kmax + 1, size=3)
        phase = rng.uniform(0, 2 * np.pi)
        u += rng.normal() * np.cos(w * (k[0] * X + k[1] * Y + k[2] * Z) + phase)
    if positive:
        u = u - u.min() + 0.1 * np.abs(u).max()
    return amplitude * u / np.abs(u).max()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid16():
    return TorusGrid(16)


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid(32)


@pytest.fixture(scope="session")
def kgm():
    return SystemParams("KGM", eps=1.0, q=1.0, omega=0.5, p=4.0, a=2.0)


@pytest.fixture(scope="session")
def sm():
    return SystemParams("SM", eps=1.0, q=1.0, omega=0.8, p=5.0)


@pytest.fixture(scope="session")
def profile_kgm():
    """Ground state for c0 = 2 - 0.5^2, p = 4."""
    return shoot_ground_state(1.75, 4.0)


@pytest.fixture(scope="session")
def profile_sm():
    return shoot_ground_state(1.0, 5.0)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
