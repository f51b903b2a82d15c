"""Shared fixtures: the expensive ground states and evolutions are computed
once per session and reused across module and acceptance tests."""

import math

import numpy as np
import pytest

from gpelattice import Grid, PhysicalParams, ground_state, quench_and_evolve, to_dimensionless


@pytest.fixture(scope="session")
def default_grid():
    return Grid.default()


@pytest.fixture(scope="session")
def default_phys():
    return PhysicalParams()  # s=3.21, beta=1, 25 Hz trap, Rb-87 defaults


@pytest.fixture(scope="session")
def default_sim(default_phys):
    return to_dimensionless(default_phys)


@pytest.fixture(scope="session")
def gs_default(default_sim, default_grid):
    """Ground state of the experimental configuration on the production grid."""
    return ground_state(default_sim, default_grid).field


@pytest.fixture(scope="session")
def series45(gs_default, default_sim):
    """Quench at 45 deg, 1 us cadence out to ~1.5 periods (covers the F window)."""
    cadence = 1e-6 / default_sim.time_unit
    times = np.arange(0.0, 6.5, cadence)
    return quench_and_evolve(gs_default, math.radians(45.0), default_sim, times)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(1024, 64.0)


def make_small_sim(depth=3.21, beta=1.0, omega_ext=0.02):
    """Dimensionless parameters with a stiffer trap for fast small-box tests."""
    from gpelattice import SimParams
    base = to_dimensionless(PhysicalParams(depth=depth, beta=beta))
    return SimParams(gamma=base.gamma, omega_ext=omega_ext, beta=beta,
                     time_unit=base.time_unit, length_unit=base.length_unit)


@pytest.fixture(scope="session")
def gs_small(small_grid):
    """Ground state on the small box (s=3.21, beta=1, trap 1/50)."""
    return ground_state(make_small_sim(), small_grid).field
