"""Physical constants and the dimensionless reduction used by the solver.

The solver works in units where the lattice period is 4 (length unit d/4)
and the kinetic term is -Delta/2, which fixes the time unit to
m d^2 / (16 hbar).  For Rb-87 in a 532 nm lattice this is 24.3 us, so a
dimensionless time of ~4.4 is a dipole period of ~106 us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

HBAR = 1.054571817e-34  # J s
PLANCK = 2.0 * math.pi * HBAR

# Rounded Rb-87 mass. The published time normalization md^2/(16 hbar) = 24.3 us
# and trap ratio 1/262 correspond to this value; the CODATA mass (below) gives
# 24.21 us / 1/263 instead.
RB87_MASS = 1.45e-25  # kg
RB87_MASS_CODATA = 1.44316060e-25  # kg

DEFAULT_LATTICE_SPACING = 532e-9  # m, half of 1064 nm


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory-frame parameters of the lattice + trap system.

    Attributes
    ----------
    atom_mass : float
        Atomic mass in kg.
    lattice_spacing : float
        Lattice period d in m.
    depth : float
        Lattice depth s in units of E_L = h^2 / (2 m d^2).
    omega_ext : float
        External trap angular frequency in rad/s.
    beta : float
        Dimensionless 1D interaction strength.
    tof_time : float
        Time of flight used for the momentum readout, in s.
    """

    atom_mass: float = RB87_MASS
    lattice_spacing: float = DEFAULT_LATTICE_SPACING
    depth: float = 3.21
    omega_ext: float = 2.0 * math.pi * 25.0
    beta: float = 1.0
    tof_time: float = 25e-3

    def __post_init__(self):
        if not self.atom_mass > 0:
            raise ValueError(f"atom_mass must be > 0, got {self.atom_mass}")
        if not self.lattice_spacing > 0:
            raise ValueError(f"lattice_spacing must be > 0, got {self.lattice_spacing}")
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")
        if self.omega_ext < 0:
            raise ValueError(f"omega_ext must be >= 0, got {self.omega_ext}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.tof_time < 0:
            raise ValueError(f"tof_time must be >= 0, got {self.tof_time}")

    def lattice_energy(self) -> float:
        """Characteristic lattice energy E_L = h^2 / (2 m d^2) in J."""
        return PLANCK**2 / (2.0 * self.atom_mass * self.lattice_spacing**2)

    def with_depth(self, depth: float) -> "PhysicalParams":
        return replace(self, depth=depth)


@dataclass(frozen=True)
class SimParams:
    """Dimensionless parameters of the reduced equation.

    gamma is the lattice amplitude pi^2 s / 8, omega_ext the trap frequency
    in units of 1/time_unit.  time_unit and length_unit convert back to SI.
    """

    gamma: float
    omega_ext: float
    beta: float
    time_unit: float   # s
    length_unit: float  # m

    def __post_init__(self):
        if self.gamma < 0 or self.omega_ext < 0 or self.beta < 0:
            raise ValueError("gamma, omega_ext and beta must be >= 0")
        if not (self.time_unit > 0 and self.length_unit > 0):
            raise ValueError("time_unit and length_unit must be > 0")

    @property
    def depth(self) -> float:
        return 8.0 * self.gamma / math.pi**2

    def seconds(self, t_dimensionless: float) -> float:
        return t_dimensionless * self.time_unit

    def dimensionless_time(self, t_seconds: float) -> float:
        return t_seconds / self.time_unit


def to_dimensionless(p: PhysicalParams) -> SimParams:
    """Reduce laboratory parameters to the dimensionless system."""
    time_unit = p.atom_mass * p.lattice_spacing**2 / (16.0 * HBAR)
    return SimParams(
        gamma=math.pi**2 * p.depth / 8.0,
        omega_ext=p.omega_ext * time_unit,
        beta=p.beta,
        time_unit=time_unit,
        length_unit=p.lattice_spacing / 4.0,
    )


def from_dimensionless(sp: SimParams, tof_time: float = 25e-3) -> PhysicalParams:
    """Invert :func:`to_dimensionless`; mass and spacing follow from the units."""
    d = 4.0 * sp.length_unit
    mass = 16.0 * HBAR * sp.time_unit / d**2
    return PhysicalParams(
        atom_mass=mass,
        lattice_spacing=d,
        depth=sp.depth,
        omega_ext=sp.omega_ext / sp.time_unit,
        beta=sp.beta,
        tof_time=tof_time,
    )


def theta_to_displacement(theta0: float, lattice_spacing: float = DEFAULT_LATTICE_SPACING) -> float:
    """Spatial shift of the lattice for a phase jump theta0 (radians).

    theta0 = pi/2 shifts by half a period, so the shift is theta0 * d / pi.
    """
    if not 0.0 <= theta0 <= math.pi:
        raise ValueError(f"theta0 must lie in [0, pi], got {theta0}")
    return theta0 * lattice_spacing / math.pi


def tof_fringe_spacing(p: PhysicalParams) -> float:
    """Distance between adjacent momentum orders after time of flight: h t / (m d)."""
    return PLANCK * p.tof_time / (p.atom_mass * p.lattice_spacing)


def smoothstep(u: float) -> float:
    """C1 ramp profile u^2 (3 - 2u), clipped to [0, 1]."""
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class PhaseSchedule:
    """Time dependence of the lattice phase and amplitude.

    A quench jumps the phase at t = 0 from 0 to a constant; the jump sign is
    chosen so the lattice moves towards +X and the packets acquire their
    first momentum maximum at +h/d (the B peak of the readout).  A ramp
    raises the amplitude from 0 to gamma with the smoothstep profile.
    """

    gamma: float
    theta0: float = 0.0
    ramp_time: float = 0.0

    @classmethod
    def quench(cls, gamma: float, theta0: float) -> "PhaseSchedule":
        if not 0.0 <= theta0 <= math.pi:
            raise ValueError(f"theta0 must lie in [0, pi], got {theta0}")
        return cls(gamma=gamma, theta0=theta0, ramp_time=0.0)

    @classmethod
    def amplitude_ramp(cls, gamma: float, ramp_time: float) -> "PhaseSchedule":
        if ramp_time < 0:
            raise ValueError("ramp_time must be >= 0")
        return cls(gamma=gamma, theta0=0.0, ramp_time=ramp_time)

    @classmethod
    def static(cls, gamma: float) -> "PhaseSchedule":
        return cls(gamma=gamma)

    def theta_at(self, t: float) -> float:
        if t < 0.0:
            return 0.0
        return -self.theta0  # lattice minima move towards +X

    def gamma_at(self, t: float) -> float:
        if self.ramp_time == 0.0:
            return self.gamma
        return self.gamma * smoothstep(t / self.ramp_time)

    @property
    def is_static(self) -> bool:
        return self.ramp_time == 0.0

    def describe(self) -> str:
        return (f"PhaseSchedule(gamma={self.gamma!r}, theta0={self.theta0!r}, "
                f"ramp_time={self.ramp_time!r})")
