import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from shiftlab.grid import make_grid
from shiftlab.verify import random_band_limited

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# criterion number -> (passed, detail); printed in the terminal summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid():
    return make_grid(8, 1024)


@pytest.fixture
def band_limited(rng, small_grid):
    return random_band_limited(small_grid, rng, (-8.0, 8.0))
