import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpelattice import (PhaseSchedule, PhysicalParams, from_dimensionless,
                        theta_to_displacement, to_dimensionless, tof_fringe_spacing)
from gpelattice.units import smoothstep


def test_time_unit_matches_published_value():
    sp = to_dimensionless(PhysicalParams())
    assert sp.time_unit * 1e6 == pytest.approx(24.3, abs=0.05)


def test_trap_frequency_reduction():
    sp = to_dimensionless(PhysicalParams())
    assert 1.0 / sp.omega_ext == pytest.approx(262.0, rel=0.01)


def test_gamma_is_pi_squared_s_over_eight():
    sp = to_dimensionless(PhysicalParams(depth=3.21))
    assert sp.gamma == pytest.approx(math.pi**2 * 3.21 / 8.0, rel=1e-15)


def test_displacement_examples():
    d = 532e-9
    assert theta_to_displacement(math.radians(90), d) == pytest.approx(266e-9, rel=1e-12)
    assert theta_to_displacement(math.radians(45), d) == pytest.approx(133e-9, rel=1e-12)
    assert theta_to_displacement(0.0, d) == 0.0


def test_displacement_rejects_out_of_range():
    with pytest.raises(ValueError):
        theta_to_displacement(-0.1)
    with pytest.raises(ValueError):
        theta_to_displacement(math.pi + 0.1)


def test_displacement_full_angle_gives_half_period_pair():
    d = 532e-9
    assert theta_to_displacement(math.pi, d) == pytest.approx(d, rel=1e-12)


def test_tof_fringe_spacing():
    p = PhysicalParams()
    assert tof_fringe_spacing(p) * 1e6 == pytest.approx(215.0, abs=1.0)
    assert tof_fringe_spacing(PhysicalParams(tof_time=0.0)) == 0.0
    assert tof_fringe_spacing(PhysicalParams(tof_time=50e-3)) == pytest.approx(
        2.0 * tof_fringe_spacing(p), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    depth=st.floats(0.1, 30.0),
    beta=st.floats(0.0, 2.0),
    freq=st.floats(1.0, 200.0),
    mass=st.floats(1e-26, 1e-24),
    d=st.floats(1e-7, 2e-6),
)
def test_roundtrip_identity(depth, beta, freq, mass, d):
    p = PhysicalParams(atom_mass=mass, lattice_spacing=d, depth=depth,
                       omega_ext=2 * math.pi * freq, beta=beta)
    q = from_dimensionless(to_dimensionless(p), tof_time=p.tof_time)
    assert q.atom_mass == pytest.approx(p.atom_mass, rel=1e-12)
    assert q.lattice_spacing == pytest.approx(p.lattice_spacing, rel=1e-12)
    assert q.depth == pytest.approx(p.depth, rel=1e-12)
    assert q.omega_ext == pytest.approx(p.omega_ext, rel=1e-12)
    assert q.beta == p.beta


@settings(max_examples=50, deadline=None)
@given(depth=st.floats(1e-3, 50.0))
def test_gamma_linear_in_depth(depth):
    g1 = to_dimensionless(PhysicalParams(depth=depth)).gamma
    g2 = to_dimensionless(PhysicalParams(depth=2 * depth)).gamma
    assert g2 == pytest.approx(2 * g1, rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(theta=st.floats(0.0, math.pi), scale=st.floats(0.1, 0.9))
def test_displacement_linear(theta, scale):
    full = theta_to_displacement(theta)
    part = theta_to_displacement(scale * theta)
    assert part == pytest.approx(scale * full, rel=1e-12, abs=1e-18)


def test_invalid_params_name_the_field():
    with pytest.raises(ValueError, match="depth"):
        PhysicalParams(depth=-1.0)
    with pytest.raises(ValueError, match="atom_mass"):
        PhysicalParams(atom_mass=0.0)
    with pytest.raises(ValueError, match="beta"):
        PhysicalParams(beta=-0.5)


def test_smoothstep_shape():
    assert smoothstep(0.0) == 0.0
    assert smoothstep(1.0) == 1.0
    assert smoothstep(0.5) == pytest.approx(0.5)
    values = [smoothstep(u / 50) for u in range(51)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_quench_schedule_is_a_step():
    sched = PhaseSchedule.quench(gamma=4.0, theta0=math.radians(45))
    assert sched.theta_at(-1e-12) == 0.0
    assert abs(sched.theta_at(0.0)) == pytest.approx(math.radians(45))
    assert sched.gamma_at(0.0) == 4.0
    assert sched.is_static


def test_ramp_schedule_monotone():
    sched = PhaseSchedule.amplitude_ramp(gamma=4.0, ramp_time=10.0)
    values = [sched.gamma_at(t) for t in [0, 1, 2, 5, 8, 10, 12]]
    assert values[0] == 0.0
    assert values[-1] == 4.0
    assert all(b >= a for a, b in zip(values, values[1:]))
