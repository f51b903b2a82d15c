import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ellipk as scipy_ellipk

from gpelattice import classical_period, classical_trajectory, ellipk_agm, well_frequency


@settings(max_examples=60, deadline=None)
@given(k=st.floats(0.0, 0.999))
def test_agm_matches_scipy(k):
    assert ellipk_agm(k) == pytest.approx(float(scipy_ellipk(k * k)), rel=1e-12)


def test_agm_domain():
    with pytest.raises(ValueError):
        ellipk_agm(1.0)
    with pytest.raises(ValueError):
        ellipk_agm(-0.1)


def test_harmonic_limit():
    s = 3.21
    tiny = math.radians(0.01)
    assert classical_period(s, tiny) == pytest.approx(16.0 / (math.pi * math.sqrt(s)),
                                                      rel=1e-7)


def test_small_angle_trajectory_matches_harmonic():
    s = 3.21
    traj = classical_trajectory(s, math.radians(1.0))
    assert traj.period == pytest.approx(2 * math.pi / well_frequency(s), rel=1e-4)


@pytest.mark.parametrize("s,theta_deg", [(3.21, 45.0), (1.5, 30.0), (6.0, 70.0)])
def test_closed_form_agrees_with_integrator(s, theta_deg):
    theta = math.radians(theta_deg)
    t_closed = classical_period(s, theta)
    t_verlet = classical_trajectory(s, theta).period
    assert t_verlet == pytest.approx(t_closed, rel=1e-6)


def test_energy_conservation_along_trajectory():
    traj = classical_trajectory(3.21, math.radians(45.0))
    drift = np.max(np.abs(traj.energy - traj.energy[0])) / abs(traj.energy[0])
    assert drift < 1e-8


def test_anharmonic_growth_with_angle():
    s = 3.21
    ratio = classical_period(s, math.radians(80)) / classical_period(s, math.radians(30))
    assert ratio > 1.4


def test_separatrix_rejected():
    with pytest.raises(ValueError):
        classical_period(3.21, math.pi / 2)
    with pytest.raises(ValueError):
        classical_period(3.21, 0.0)


def test_no_return_reported_at_unstable_equilibrium():
    # released exactly on the barrier top: never crosses the bottom
    with pytest.raises(RuntimeError, match="separatrix"):
        classical_trajectory(3.21, math.pi / 2, max_periods=2.0)


@settings(max_examples=30, deadline=None)
@given(s=st.floats(1.0, 10.0), theta=st.floats(math.radians(5), math.radians(80)))
def test_period_monotone_in_angle(s, theta):
    assert classical_period(s, theta * 1.05) > classical_period(s, theta)


@settings(max_examples=30, deadline=None)
@given(s=st.floats(1.0, 10.0), theta=st.floats(math.radians(5), math.radians(85)))
def test_period_scales_as_inverse_sqrt_depth(s, theta):
    t1 = classical_period(s, theta)
    t2 = classical_period(2.0 * s, theta)
    assert t2 == pytest.approx(t1 / math.sqrt(2.0), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(s=st.floats(1.0, 10.0), theta=st.floats(math.radians(5), math.radians(85)))
def test_closed_form_vs_integrator_property(s, theta):
    t_closed = classical_period(s, theta)
    t_verlet = classical_trajectory(s, theta).period
    assert t_verlet == pytest.approx(t_closed, rel=1e-6)
