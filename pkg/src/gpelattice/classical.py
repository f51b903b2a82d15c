"""Classical single-particle reference in the lattice potential.

The lattice term -gamma cos^2(pi X/4 + theta) reduces to a pendulum in the
angle phi = pi X / 2 with frequency omega0 = pi^2 sqrt(s) / 8, so the
oscillation period after a phase quench theta0 is the textbook pendulum
result 4 K(sin theta0) / omega0.  A velocity-Verlet integrator provides an
independent check of the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClassicalState:
    x: float
    p: float
    energy: float


@dataclass
class ClassicalTrajectory:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    period: float

    def state(self, i: int) -> ClassicalState:
        return ClassicalState(float(self.x[i]), float(self.p[i]), float(self.energy[i]))


def well_frequency(s: float) -> float:
    """Small-oscillation frequency at the bottom of a well of depth s."""
    if s <= 0:
        raise ValueError("depth s must be > 0")
    return math.pi**2 * math.sqrt(s) / 8.0


def ellipk_agm(k: float) -> float:
    """Complete elliptic integral K(k), modulus convention, by the AGM.

    K(k) = pi / (2 AGM(1, sqrt(1 - k^2))); converges quadratically and needs
    no special-function dependency.
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must satisfy 0 <= k < 1, got {k}")
    a, b = 1.0, math.sqrt(1.0 - k * k)
    while abs(a - b) > 1e-15 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def classical_period(s: float, theta0: float) -> float:
    """Pendulum period of a particle released at rest after a quench theta0.

    Valid for librating orbits, 0 < theta0 < pi/2; the separatrix theta0 =
    pi/2 and rotations are rejected.
    """
    if not 0.0 < theta0 < math.pi / 2:
        raise ValueError(
            f"theta0 must lie strictly inside (0, pi/2) for a librating orbit, got {theta0}")
    return 4.0 * ellipk_agm(math.sin(theta0)) / well_frequency(s)


def classical_trajectory(s: float, theta0: float, dt: float = 5e-5,
                         max_periods: float = 10.0) -> ClassicalTrajectory:
    """Velocity-Verlet trajectory from rest at displacement 4 theta0 / pi.

    The period is measured from the first and third crossings of the well
    bottom (one full oscillation); the default step keeps the energy
    oscillation below 1e-8 of the well depth per period.
    """
    if not 0.0 < theta0 < math.pi:
        raise ValueError(f"theta0 must lie in (0, pi), got {theta0}")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    gamma = math.pi**2 * s / 8.0
    omega0 = well_frequency(s)
    t_harm = 2.0 * math.pi / omega0

    def force(x: float) -> float:
        # -dV/dx with V = -gamma cos^2(pi x / 4)
        return -gamma * math.pi / 4.0 * math.sin(math.pi * x / 2.0)

    x = 4.0 * theta0 / math.pi
    p = 0.0
    t = 0.0
    xs, ps, ts = [x], [p], [t]
    crossings = []
    f = force(x)
    n_max = int(max_periods * t_harm / dt)
    for _ in range(n_max):
        p_half = p + 0.5 * dt * f
        x_new = x + dt * p_half
        f_new = force(x_new)
        p_new = p_half + 0.5 * dt * f_new
        t += dt
        if x > 0.0 >= x_new or x < 0.0 <= x_new:
            # linear interpolation of the bottom crossing
            frac = x / (x - x_new)
            crossings.append(t - dt + frac * dt)
        x, p, f = x_new, p_new, f_new
        xs.append(x)
        ps.append(p)
        ts.append(t)
        if len(crossings) >= 3:
            break
    if len(crossings) < 3:
        raise RuntimeError(
            f"no full oscillation within {max_periods} harmonic periods "
            f"(near-separatrix orbit, theta0={theta0})")
    period = crossings[2] - crossings[0]
    xs = np.array(xs)
    ps = np.array(ps)
    energy = 0.5 * ps**2 - gamma * np.cos(math.pi * xs / 4.0) ** 2
    return ClassicalTrajectory(np.array(ts), xs, ps, energy, period)
