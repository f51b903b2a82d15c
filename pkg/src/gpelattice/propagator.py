"""Split-step spectral integrator for the dimensionless GPE.

The equation is  i d_t psi = [(-Delta + w^2 X^2)/2 - gamma cos^2(pi X/4 + theta)
+ beta |psi|^2] psi, advanced with Strang splitting: exact kinetic half steps
in momentum space around a pointwise potential/nonlinear step.  The density
is constant during the potential substep (it only rotates the phase), so the
scheme is exactly norm-preserving and time-reversible also at beta > 0.

Imaginary-time mode replaces the phases by decay factors and renormalizes
after every step; it is used to prepare ground states.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .field import Field, Grid, MomentumSnapshot, gaussian_packet, momentum_density, total_energy
from .units import PhaseSchedule, SimParams


class NumericsError(RuntimeError):
    """Raised when the state stops being finite during propagation."""


class ConvergenceError(RuntimeError):
    """Raised when imaginary-time relaxation fails to converge."""


@dataclass(frozen=True)
class Potential:
    """V(X) = omega_ext^2 X^2 / 2 - gamma cos^2(pi X/4 + theta).

    The lattice term has minima at -gamma and barrier tops at 0.
    """

    gamma: float
    theta: float = 0.0
    omega_ext: float = 0.0

    def values(self, grid: Grid) -> np.ndarray:
        x = grid.x
        return (0.5 * self.omega_ext**2 * x**2
                - self.gamma * np.cos(math.pi * x / 4.0 + self.theta) ** 2)

    @property
    def barrier_top(self) -> float:
        return 0.0

    @property
    def lattice_minimum(self) -> float:
        return -self.gamma


@dataclass(frozen=True)
class EvolutionSpec:
    """Time stepping plan: step-size cap, snapshot times and mode."""

    dt: float = 5e-3
    snapshot_times: tuple = ()
    mode: str = "real"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.mode not in ("real", "imaginary"):
            raise ValueError(f"mode must be 'real' or 'imaginary', got {self.mode!r}")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot_times must be sorted")
        if times and times[0] < 0:
            raise ValueError("snapshot_times must be >= 0")
        object.__setattr__(self, "snapshot_times", times)


def _check_finite(psi: np.ndarray, step_index: int) -> None:
    if not np.all(np.isfinite(psi.view(np.float64))):
        raise NumericsError(f"non-finite amplitudes at step {step_index}")


def step(f: Field, potential: Potential, beta: float, dt: float,
         mode: str = "real") -> Field:
    """One Strang step: half kinetic, full potential + nonlinear, half kinetic.

    In imaginary mode the result is renormalized to unit norm.
    """
    grid = f.grid
    v = potential.values(grid)
    if mode == "real":
        half_kin = np.exp(-0.25j * dt * grid.k**2)
        psi = np.fft.ifft(half_kin * np.fft.fft(f.psi))
        psi = psi * np.exp(-1j * dt * (v + beta * np.abs(psi) ** 2))
        psi = np.fft.ifft(half_kin * np.fft.fft(psi))
        out = Field(grid, psi)
    elif mode == "imaginary":
        half_kin = np.exp(-0.25 * dt * grid.k**2)
        psi = np.fft.ifft(half_kin * np.fft.fft(f.psi))
        psi = psi * np.exp(-dt * (v + beta * np.abs(psi) ** 2))
        psi = np.fft.ifft(half_kin * np.fft.fft(psi))
        out = Field(grid, psi).normalized()
    else:
        raise ValueError(f"unknown mode {mode!r}")
    _check_finite(out.psi, 0)
    return out


class _Stepper:
    """Caches the spectral factors for repeated real-time steps."""

    def __init__(self, grid: Grid, beta: float, omega_ext: float,
                 schedule: PhaseSchedule):
        self.grid = grid
        self.beta = beta
        self.omega_ext = omega_ext
        self.schedule = schedule
        self._dt = None
        self._half_kin = None
        self._static_phase = None
        if schedule.is_static:
            pot = Potential(schedule.gamma_at(0.0), schedule.theta_at(0.0), omega_ext)
            self._v_static = pot.values(grid)
        else:
            self._v_static = None
        self._trap = 0.5 * omega_ext**2 * grid.x**2

    def _factors(self, dt: float):
        if dt != self._dt:
            self._dt = dt
            self._half_kin = np.exp(-0.25j * dt * self.grid.k**2)
            if self._v_static is not None:
                self._static_phase = np.exp(-1j * dt * self._v_static)
        return self._half_kin, self._static_phase

    def advance(self, psi: np.ndarray, t: float, dt: float, step_index: int) -> np.ndarray:
        half_kin, static_phase = self._factors(dt)
        psi = np.fft.ifft(half_kin * np.fft.fft(psi))
        if static_phase is not None:
            if self.beta != 0.0:
                psi = psi * (static_phase * np.exp(-1j * dt * self.beta * np.abs(psi) ** 2))
            else:
                psi = psi * static_phase
        else:
            tm = t + 0.5 * dt  # midpoint evaluation keeps second order for ramps
            v = (self._trap
                 - self.schedule.gamma_at(tm)
                 * np.cos(math.pi * self.grid.x / 4.0 + self.schedule.theta_at(tm)) ** 2)
            psi = psi * np.exp(-1j * dt * (v + self.beta * np.abs(psi) ** 2))
        psi = np.fft.ifft(half_kin * np.fft.fft(psi))
        _check_finite(psi, step_index)
        return psi


@dataclass
class GroundStateResult:
    field: Field
    energy: float
    energy_trace: np.ndarray
    steps: int
    converged: bool


def ground_state(sim: SimParams, grid: Optional[Grid] = None, tol: float = 1e-9,
                 dtau: float = 5e-3, dtau_coarse: float = 0.04,
                 max_steps: int = 400_000, n_steps: Optional[int] = None,
                 check_every: int = 25) -> GroundStateResult:
    """Imaginary-time relaxation to the (GPE) ground state.

    Starts from a Gaussian of the trap length 1/sqrt(omega_ext) and relaxes
    first with a coarse step, then with `dtau`, until the energy change per
    step drops below `tol * max(1, |E|)`.  With `n_steps` set, exactly that
    many fine steps are taken instead (no stopping test); useful for
    determinism and discretization studies.
    """
    if grid is None:
        grid = Grid.default()
    if tol <= 0:
        raise ValueError("tol must be > 0")
    pot = Potential(sim.gamma, 0.0, sim.omega_ext)
    v = pot.values(grid)
    if sim.omega_ext > 0:
        width = 1.0 / math.sqrt(sim.omega_ext)
    else:
        # no trap: seed at the per-well scale of the lattice
        width = max(1.0, 1.0 / math.sqrt(max(sim.gamma, 1e-6)))
    f = gaussian_packet(grid, 0.0, width / math.sqrt(2.0))

    def energy(fld: Field) -> float:
        return total_energy(fld, v, sim.beta)

    trace = [energy(f)]
    steps_done = 0

    def relax(fld: Field, dt: float, budget: int, stop_tol: Optional[float]):
        nonlocal steps_done
        half_kin = np.exp(-0.25 * dt * grid.k**2)
        psi = fld.psi
        e_prev = energy(Field(grid, psi))
        done = 0
        converged = stop_tol is None
        while done < budget:
            block = min(check_every, budget - done)
            for _ in range(block):
                psi = np.fft.ifft(half_kin * np.fft.fft(psi))
                psi = psi * np.exp(-dt * (v + sim.beta * np.abs(psi) ** 2))
                psi = np.fft.ifft(half_kin * np.fft.fft(psi))
                nrm = math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.dx)
                psi = psi / nrm
            done += block
            steps_done += block
            _check_finite(psi, steps_done)
            e = energy(Field(grid, psi))
            trace.append(e)
            slope = abs(e - e_prev) / block
            e_prev = e
            if stop_tol is not None and slope < stop_tol * max(1.0, abs(e)):
                converged = True
                break
        return Field(grid, psi), converged, e_prev

    if n_steps is not None:
        f, _, e = relax(f, dtau, n_steps, None)
        return GroundStateResult(f, e, np.array(trace), steps_done, True)

    budget = max_steps
    if dtau_coarse and dtau_coarse > dtau:
        f, _, _ = relax(f, dtau_coarse, budget // 2, tol)
    f, converged, e = relax(f, dtau, budget - steps_done, tol)
    if not converged:
        last_slope = abs(trace[-1] - trace[-2]) / check_every if len(trace) > 1 else float("nan")
        raise ConvergenceError(
            f"imaginary time not converged after {steps_done} steps; "
            f"last energy slope {last_slope:.3e} per step")
    return GroundStateResult(f, e, np.array(trace), steps_done, converged)


def _evolve(psi0: Field, sim: SimParams, schedule: PhaseSchedule,
            snapshot_times: Sequence[float], dt_max: float,
            window_halfwidth: float, keep_fields: bool):
    """Advance through the snapshot times, hitting each one exactly."""
    times = [float(t) for t in snapshot_times]
    if not times:
        raise ValueError("at least one snapshot time is required")
    stepper = _Stepper(psi0.grid, sim.beta, sim.omega_ext, schedule)
    psi = psi0.psi.copy()
    t = 0.0
    step_index = 0
    snapshots: List[MomentumSnapshot] = []
    fields: List[Field] = []

    def capture(tau: float):
        fld = Field(psi0.grid, psi)
        pot_now = Potential(schedule.gamma_at(tau), schedule.theta_at(tau), sim.omega_ext)
        e = total_energy(fld, pot_now.values(psi0.grid), sim.beta)
        snapshots.append(momentum_density(fld, hold_time=tau,
                                          window_halfwidth=window_halfwidth, energy=e))
        if keep_fields:
            fields.append(fld.copy())

    for target in times:
        if target < t - 1e-12:
            raise ValueError("snapshot times must be sorted")
        span = target - t
        if span > 1e-12:
            n_sub = max(1, int(math.ceil(span / dt_max - 1e-12)))
            dt = span / n_sub
            for _ in range(n_sub):
                psi = stepper.advance(psi, t, dt, step_index)
                t += dt
                step_index += 1
            t = target  # absorb accumulated roundoff
        capture(target)
    return snapshots, fields


def quench_and_evolve(psi0: Field, theta0: float, sim: SimParams,
                      snapshot_times: Sequence[float], dt_max: float = 5e-3,
                      window_halfwidth: float = math.pi / 4,
                      keep_fields: bool = False):
    """Shift the lattice phase instantaneously and evolve the given state.

    The phase jump acts on the potential only; psi0 is left untouched, which
    is the sudden-quench limit.  Snapshots of the momentum distribution are
    emitted at the requested hold times (dimensionless units).

    Returns the snapshot list, or (snapshots, fields) with keep_fields=True.
    """
    schedule = PhaseSchedule.quench(sim.gamma, theta0)
    snapshots, fields = _evolve(psi0, sim, schedule, snapshot_times, dt_max,
                                window_halfwidth, keep_fields)
    if keep_fields:
        return snapshots, fields
    return snapshots


def adiabatic_load(sim: SimParams, ramp_time: float, grid: Optional[Grid] = None,
                   dt_max: float = 5e-3, gs_tol: float = 1e-9) -> Field:
    """Ramp the lattice from zero to gamma with the smoothstep profile.

    Starts from the trap-only ground state and returns the state at the end
    of the ramp.  A zero ramp time returns the trap state itself (sudden
    limit).
    """
    if grid is None:
        grid = Grid.default()
    trap_sim = SimParams(gamma=0.0, omega_ext=sim.omega_ext, beta=sim.beta,
                         time_unit=sim.time_unit, length_unit=sim.length_unit)
    start = ground_state(trap_sim, grid, tol=gs_tol).field
    if ramp_time <= 0.0 or sim.gamma == 0.0:
        if sim.gamma == 0.0 and ramp_time > 0.0:
            schedule = PhaseSchedule.amplitude_ramp(0.0, ramp_time)
            snaps, fields = _evolve(start, sim, schedule, [ramp_time], dt_max,
                                    math.pi / 4, True)
            return fields[-1]
        return start
    schedule = PhaseSchedule.amplitude_ramp(sim.gamma, ramp_time)
    _, fields = _evolve(start, sim, schedule, [ramp_time], dt_max, math.pi / 4, True)
    return fields[-1]


def schedule_hash(schedule: PhaseSchedule) -> str:
    return hashlib.sha256(schedule.describe().encode()).hexdigest()[:16]


def save_checkpoint(path_prefix: str, f: Field, sim: SimParams,
                    schedule: PhaseSchedule, t: float, dt: float) -> None:
    """Field dump plus a JSON manifest sufficient to resume the evolution."""
    from .field import save_field_dump
    save_field_dump(str(path_prefix) + ".field", f)
    manifest = {
        "format": "gpelattice-checkpoint-1",
        "t": t,
        "dt": dt,
        "n_points": f.grid.n_points,
        "box_length": f.grid.length,
        "gamma": sim.gamma,
        "omega_ext": sim.omega_ext,
        "beta": sim.beta,
        "time_unit": sim.time_unit,
        "length_unit": sim.length_unit,
        "schedule": schedule.describe(),
        "schedule_hash": schedule_hash(schedule),
    }
    with open(str(path_prefix) + ".json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path_prefix: str):
    from .field import load_field_dump
    f = load_field_dump(str(path_prefix) + ".field")
    with open(str(path_prefix) + ".json") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "gpelattice-checkpoint-1":
        raise ValueError("unknown checkpoint format")
    sim = SimParams(gamma=manifest["gamma"], omega_ext=manifest["omega_ext"],
                    beta=manifest["beta"], time_unit=manifest["time_unit"],
                    length_unit=manifest["length_unit"])
    return f, sim, manifest
