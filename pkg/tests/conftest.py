import numpy as np
import pytest

from romscatter.experiments import DEFAULT_TRUE_POTENTIAL
from romscatter.forward import PotentialModel, SpatialGrid, generate_spectrum, wavenumber_grid


@pytest.fixture(scope="session")
def grid():
    return SpatialGrid(1000)


@pytest.fixture(scope="session")
def ks():
    return wavenumber_grid(10, 10.0)


@pytest.fixture(scope="session")
def default_data(grid, ks):
    """Noiseless default spectrum and states (m=10, n=1000)."""
    return generate_spectrum(DEFAULT_TRUE_POTENTIAL, ks, grid, return_states=True)


@pytest.fixture(scope="session")
def free_data(grid, ks):
    return generate_spectrum(PotentialModel.zero(), ks, grid, return_states=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
