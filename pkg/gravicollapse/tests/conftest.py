"""
Shared fixtures for the GraviCollapse test suite
"""
import pytest

from gravicollapse.core.grid import make_grid
from gravicollapse.core.kernel import BallSpec, build_grid_kernel
from gravicollapse.core.units import PhysicalConstants


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow ensemble tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: large ensembles, skipped unless --runslow is given")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def unit_constants():
    return PhysicalConstants(G=1.0, hbar=1.0)


@pytest.fixture
def unit_ball(unit_constants):
    """G = M = R = hbar = 1"""
    return BallSpec(mass=1.0, radius=1.0, constants=unit_constants)


@pytest.fixture
def harmonic_ball():
    """M = hbar = omega_G = 1 with R far beyond any grid, so U is quadratic everywhere"""
    return BallSpec(mass=1.0, radius=1e5, constants=PhysicalConstants(G=1e15, hbar=1.0))


@pytest.fixture
def small_grid():
    """n = 64 on L = 12: the cat at +/-1.5 with width 0.5 sits on grid points"""
    return make_grid(64, 12.0)


@pytest.fixture
def unit_kernel(unit_ball, small_grid):
    return build_grid_kernel(unit_ball, small_grid)


@pytest.fixture
def harmonic_grid():
    return make_grid(128, 12.0)


@pytest.fixture
def harmonic_kernel(harmonic_ball, harmonic_grid):
    return build_grid_kernel(harmonic_ball, harmonic_grid)


@pytest.fixture
def unravel_settings():
    """Flat configuration for the small unraveling checks"""
    return {
        "unit_mode": "none",
        "mass": 1.0,
        "density": None,
        "radius": 1.0,
        "G": 1.0,
        "hbar": 1.0,
        "grid_points": 64,
        "domain_length": 12.0,
        "separation": 3.0,
        "packet_width": 0.5,
        "dt": 0.005,
        "steps": 100,
        "record_stride": 10,
    }
