"""The three measurements: period calibration, tunneling delay, MZI readout.

Everything here consumes momentum snapshots produced by the propagator and
reduces them to fitted numbers.  The dipole period is read from the cadence
of return-to-bottom events (maxima of the zero-order population), which is
the simulation analog of the image sequence the calibration is based on; it
stays well defined when the wave packet splits and the mean momentum turns
non-sinusoidal.  The tunneling delay is the lag between the brightness
maxima of the -1 (reflected) and +1 (tunneled) orders, each refined by a
Gaussian fit of the population-vs-time trace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bands import bound_fraction
from .classical import classical_period, well_frequency
from .field import Field, Grid, MomentumSnapshot, fit_gaussian_peak
from .propagator import ground_state, quench_and_evolve
from .units import PhysicalParams, SimParams, to_dimensionless


class ExtractionError(RuntimeError):
    """Raised when a measurement cannot be read from a snapshot series."""


# ---------------------------------------------------------------------------
# run setup and ground-state cache

@dataclass(frozen=True)
class RunSetup:
    """Everything needed to run one simulated experiment."""

    phys: PhysicalParams
    grid: Grid
    theta0_deg: float = 45.0
    dt: float = 5e-3
    gs_tol: float = 1e-9
    gs_dtau: float = 5e-3
    gs_dtau_coarse: float = 0.04
    window_halfwidth: float = math.pi / 4

    @property
    def sim(self) -> SimParams:
        return to_dimensionless(self.phys)

    @property
    def theta0(self) -> float:
        return math.radians(self.theta0_deg)


_GS_CACHE: Dict[tuple, Field] = {}


def prepared_ground_state(setup: RunSetup) -> Field:
    """Ground state for the setup, cached across scan points."""
    sim = setup.sim
    key = (round(sim.gamma, 12), round(sim.omega_ext, 12), sim.beta,
           setup.grid.n_points, setup.grid.length,
           setup.gs_tol, setup.gs_dtau, setup.gs_dtau_coarse)
    if key not in _GS_CACHE:
        result = ground_state(sim, setup.grid, tol=setup.gs_tol,
                              dtau=setup.gs_dtau, dtau_coarse=setup.gs_dtau_coarse)
        _GS_CACHE[key] = result.field
    return _GS_CACHE[key].copy()


def clear_ground_state_cache() -> None:
    _GS_CACHE.clear()


# ---------------------------------------------------------------------------
# snapshot schedules

def _classical_guess(sim: SimParams, theta0_deg: float) -> float:
    theta = math.radians(min(max(theta0_deg, 5.0), 85.0))
    return classical_period(sim.depth, theta)


def period_schedule(sim: SimParams, theta0_deg: float) -> np.ndarray:
    """Hold times for a period run: 1.7 classical periods, 40+ samples per period."""
    t_cl = _classical_guess(sim, theta0_deg)
    t_harm = 2.0 * math.pi / well_frequency(sim.depth)
    span = max(1.7 * t_cl, 2.6 * t_harm)
    cadence = t_harm / 40.0
    return np.arange(0.0, span + cadence / 2, cadence)


def delay_schedule(sim: SimParams, cadence_seconds: float = 1e-6) -> np.ndarray:
    """Hold times for a delay run: 1 us cadence out to ~1.2 periods."""
    span = 1.55 * _classical_guess(sim, 45.0)
    cadence = cadence_seconds / sim.time_unit
    return np.arange(0.0, span + cadence / 2, cadence)


def mzi_schedule(sim: SimParams) -> np.ndarray:
    """Hold times covering the F window around 5T/4."""
    t_cl = _classical_guess(sim, 45.0)
    t_harm = 2.0 * math.pi / well_frequency(sim.depth)
    span = 1.95 * t_cl
    cadence = t_harm / 40.0
    return np.arange(0.0, span + cadence / 2, cadence)


# ---------------------------------------------------------------------------
# trace helpers

def _traces(series: Sequence[MomentumSnapshot]) -> Tuple[np.ndarray, Dict[int, np.ndarray]]:
    t = np.array([s.hold_time for s in series])
    orders = series[0].populations.keys()
    pops = {n: np.array([s.populations[n] for s in series]) for n in orders}
    return t, pops


def _interior_maxima(y: np.ndarray) -> List[int]:
    return [i for i in range(1, len(y) - 1) if y[i] >= y[i - 1] and y[i] >= y[i + 1]]


def _refine_vertex(t: np.ndarray, y: np.ndarray, i: int) -> float:
    if i <= 0 or i >= len(y) - 1:
        return float(t[i])
    denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
    if denom >= 0:
        return float(t[i])
    shift = 0.5 * (y[i - 1] - y[i + 1]) / denom
    return float(t[i] + shift * (t[min(i + 1, len(t) - 1)] - t[i]))


# ---------------------------------------------------------------------------
# period extraction and depth calibration

@dataclass
class PeriodResult:
    period: float
    sigma: float
    event_times: np.ndarray


def extract_period(series: Sequence[MomentumSnapshot]) -> PeriodResult:
    """Dipole period from the cadence of return-to-bottom events.

    The zero-order population peaks every half period, when the per-site
    packets sit at a turning point or at the well bottom at rest; twice the
    mean spacing of those maxima is the oscillation period.  The result is
    invariant under time shifts of the series and under rescaling of the
    mean-momentum amplitude.
    """
    if len(series) < 8:
        raise ExtractionError("series too short for period extraction")
    t, pops = _traces(series)
    mean_p = np.array([s.mean_p for s in series])
    if np.max(np.abs(mean_p - mean_p.mean())) < 1e-6:
        raise ExtractionError("no oscillation detected: mean momentum is flat")
    pi0 = pops[0]
    midline = 0.5 * (pi0.max() + pi0.min())
    events = [i for i in _interior_maxima(pi0) if pi0[i] > midline]
    if len(events) < 2:
        raise ExtractionError(
            f"fewer than two return-to-bottom events in the series (found {len(events)})")
    times = np.array([_refine_vertex(t, pi0, i) for i in events])
    spacings = np.diff(times)
    cadence = float(np.median(np.diff(t)))
    if len(times) == 2:
        half = float(spacings[0])
        sigma = cadence
    else:
        k = np.arange(len(times))
        coeffs, residuals, *_ = np.polyfit(k, times, 1, full=True)
        half = float(coeffs[0])
        rms = math.sqrt(float(residuals[0]) / len(times)) if len(residuals) else 0.0
        sigma = max(2.0 * rms, cadence / 2.0)
    return PeriodResult(period=2.0 * half, sigma=sigma, event_times=times)


@dataclass
class CalibrationTable:
    depth: np.ndarray
    period: np.ndarray

    @classmethod
    def from_csv(cls, path) -> "CalibrationTable":
        data = np.genfromtxt(path, delimiter=",", names=True)
        return cls(depth=np.atleast_1d(data["s"]), period=np.atleast_1d(data["period"]))

    @classmethod
    def packaged_default(cls) -> "CalibrationTable":
        from importlib.resources import files
        with files("gpelattice.data").joinpath("period_vs_s.csv").open("rb") as fh:
            data = np.genfromtxt(fh, delimiter=",", names=True)
        return cls(depth=np.atleast_1d(data["s"]), period=np.atleast_1d(data["period"]))


@dataclass
class CalibrationResult:
    depth: float
    sigma: float


def calibrate_depth(period: float, sigma: float,
                    table: CalibrationTable) -> CalibrationResult:
    """Invert the simulated period-vs-depth curve at a measured period.

    Linear inverse interpolation between the bracketing table points; the
    uncertainty propagates through the local slope.
    """
    s = np.asarray(table.depth, dtype=float)
    T = np.asarray(table.period, dtype=float)
    order = np.argsort(s)
    s, T = s[order], T[order]
    if not (T.min() <= period <= T.max()):
        raise ValueError(
            f"period {period:.4f} outside the calibration range "
            f"[{T.min():.4f}, {T.max():.4f}]")
    diffs = np.diff(T)
    if not (np.all(diffs < 0) or np.all(diffs > 0)):
        raise ValueError("calibration table is not monotone in period")
    # find the bracketing segment
    for i in range(len(s) - 1):
        lo, hi = sorted((T[i], T[i + 1]))
        if lo <= period <= hi:
            slope = (T[i + 1] - T[i]) / (s[i + 1] - s[i])
            s0 = s[i] + (period - T[i]) / slope
            return CalibrationResult(depth=float(s0), sigma=float(abs(sigma / slope)))
    raise ValueError("period not bracketed by the calibration table")


# ---------------------------------------------------------------------------
# tunneling delay

@dataclass
class DelayResult:
    status: str                      # "ok" or "unresolvable"
    delay_us: Optional[float]
    sigma_us: Optional[float]
    t_reflected: Optional[float]     # dimensionless
    t_tunneled: Optional[float]
    dip_ratio: Optional[float]


_DIP_LIMIT = 1.0 / 3.0  # valley between B and D2 must drop below this fraction of D2


def _trace_peak_time(t: np.ndarray, y: np.ndarray, i_peak: int,
                     cadence: float) -> Tuple[float, float]:
    fit = fit_gaussian_peak(t, y, i_peak)
    if fit is None:
        return _refine_vertex(t, y, i_peak), cadence / 2.0
    return fit.center, max(cadence / 4.0, 0.0)


def extract_delay(series: Sequence[MomentumSnapshot], period: float,
                  time_unit: float) -> DelayResult:
    """Delay between the tunneled (+1) and reflected (-1) packet maxima.

    Both populations are tracked inside the window (T/2, 1.05 T); each bump
    maximum is refined by a Gaussian fit of the population-vs-time trace.
    The reading is reported unresolvable when the +1 trace has no interior
    maximum there, or when the valley between the B remnant and the tunneled
    bump retains more than a third of the bump height (partial overlap).
    """
    t, pops = _traces(series)
    cadence = float(np.median(np.diff(t)))
    window = (t > 0.5 * period) & (t < 1.05 * period)
    if not np.any(window):
        raise ExtractionError("series does not cover the (T/2, 1.05T) window")
    idx = np.where(window)[0]

    peaks = {}
    for label, order in (("reflected", -1), ("tunneled", +1)):
        y = pops[order][idx]
        interior = _interior_maxima(y)
        if not interior:
            return DelayResult("unresolvable", None, None, None, None, None)
        j = max(interior, key=lambda jj: y[jj])
        peaks[label] = idx[j]

    trace_plus = pops[+1]
    b_window = (t > 0.05 * period) & (t < 0.45 * period)
    dip_ratio = None
    if np.any(b_window):
        i_b = int(np.where(b_window)[0][np.argmax(trace_plus[b_window])])
        i_d2 = peaks["tunneled"]
        if i_b < i_d2:
            dip = float(trace_plus[i_b:i_d2 + 1].min())
            dip_ratio = dip / float(trace_plus[i_d2])
            if dip_ratio > _DIP_LIMIT:
                return DelayResult("unresolvable", None, None, None, None, dip_ratio)

    t1, s1 = _trace_peak_time(t, pops[-1], peaks["reflected"], cadence)
    t2, s2 = _trace_peak_time(t, pops[+1], peaks["tunneled"], cadence)
    scale = time_unit / 1e-6
    sigma = math.hypot(max(s1, cadence / 4.0), max(s2, cadence / 4.0)) * scale
    return DelayResult(
        status="ok",
        delay_us=(t2 - t1) * scale,
        sigma_us=sigma,
        t_reflected=t1,
        t_tunneled=t2,
        dip_ratio=dip_ratio,
    )


# ---------------------------------------------------------------------------
# Mach-Zehnder readout

@dataclass
class MziResult:
    ratio: float
    phi: float
    t_read: float
    pi_plus: float
    pi_minus: float


def two_mode_mzi(phi: float) -> Tuple[complex, complex]:
    """Two passes of the tunneling beam splitter applied to |+p0>.

    Each pass mixes the channels with amplitude reflection cos(phi) and
    transmission i sin(phi); the composition gives cos(2 phi)|+p0>
    + i sin(2 phi)|-p0>.
    """
    if not 0.0 <= phi <= math.pi / 2:
        raise ValueError(f"phi must lie in [0, pi/2], got {phi}")
    splitter = np.array([[math.cos(phi), 1j * math.sin(phi)],
                         [1j * math.sin(phi), math.cos(phi)]])
    out = splitter @ (splitter @ np.array([1.0, 0.0]))
    return complex(out[0]), complex(out[1])


def mzi_readout(series: Sequence[MomentumSnapshot], period: float,
                threshold: float = 0.1) -> MziResult:
    """Interferometer output read in the F window around 5T/4.

    The readout time maximizes the combined first-order population; the
    splitter angle follows from ratio = sin^2(2 phi).
    """
    t, pops = _traces(series)
    window = (t >= 1.125 * period) & (t <= 1.375 * period)
    if not np.any(window):
        raise ExtractionError("series does not cover the F window around 5T/4")
    idx = np.where(window)[0]
    combined = pops[+1][idx] + pops[-1][idx]
    j = int(np.argmax(combined))
    if combined[j] < threshold:
        raise ExtractionError(
            f"first-order population {combined[j]:.3f} below threshold {threshold}; "
            "readout undefined")
    i = idx[j]
    pi_plus = float(pops[+1][i])
    pi_minus = float(pops[-1][i])
    ratio = pi_minus / (pi_plus + pi_minus)
    phi = 0.5 * math.asin(math.sqrt(min(ratio, 1.0)))
    return MziResult(ratio=ratio, phi=phi, t_read=float(t[i]),
                     pi_plus=pi_plus, pi_minus=pi_minus)


# ---------------------------------------------------------------------------
# packet tracks (labels of the quarter-period cadence)

@dataclass
class PacketTrack:
    label: str
    times: np.ndarray
    populations: np.ndarray


_TRACK_WINDOWS = {
    # label: (window start, window end, momentum order), in units of T
    "B": (0.125, 0.375, +1),
    "C": (0.375, 0.625, 0),
    "D1": (0.5, 1.0, -1),
    "D2": (0.5, 1.05, +1),
    "E": (0.875, 1.125, 0),
    "F": (1.125, 1.375, -1),
}


def packet_tracks(series: Sequence[MomentumSnapshot], period: float) -> Dict[str, PacketTrack]:
    """Population time series of the labeled packets, one per cadence window."""
    t, pops = _traces(series)
    tracks = {}
    for label, (lo, hi, order) in _TRACK_WINDOWS.items():
        mask = (t >= lo * period) & (t <= hi * period)
        if not np.any(mask):
            continue
        tracks[label] = PacketTrack(
            label=label,
            times=t[mask],
            populations=np.clip(pops[order][mask], 0.0, 1.0),
        )
    return tracks


# ---------------------------------------------------------------------------
# scans

@dataclass
class ScanPoint:
    value: float
    observable: Optional[float]
    sigma: Optional[float]
    status: str
    diagnostics: dict


@dataclass
class ScanResult:
    axis: str
    observable: str
    points: List[ScanPoint]
    setup_echo: dict

    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def observables(self) -> np.ndarray:
        return np.array([math.nan if p.observable is None else p.observable
                         for p in self.points])

    def to_csv(self, path) -> None:
        from .field import csv_float
        with open(path, "w") as fh:
            fh.write(f"{self.axis},{self.observable},sigma,status\n")
            for p in self.points:
                obs = "" if p.observable is None else csv_float(p.observable)
                sig = "" if p.sigma is None else csv_float(p.sigma)
                fh.write(f"{csv_float(p.value)},{obs},{sig},{p.status}\n")

    def to_json(self, path) -> None:
        payload = {
            "axis": self.axis,
            "observable": self.observable,
            "setup": self.setup_echo,
            "points": [
                {"value": p.value, "observable": p.observable, "sigma": p.sigma,
                 "status": p.status, "diagnostics": p.diagnostics}
                for p in self.points
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")


_SCAN_AXES = ("s", "theta0", "beta", "omega_ext")
_OBSERVABLES = ("period", "delay", "mzi")


def _setup_for(setup: RunSetup, axis: str, value: float) -> RunSetup:
    if axis == "s":
        return replace(setup, phys=replace(setup.phys, depth=value))
    if axis == "theta0":
        return replace(setup, theta0_deg=value)
    if axis == "beta":
        return replace(setup, phys=replace(setup.phys, beta=value))
    if axis == "omega_ext":
        # value is the dimensionless trap frequency
        omega = value / to_dimensionless(setup.phys).time_unit
        return replace(setup, phys=replace(setup.phys, omega_ext=omega))
    raise ValueError(f"unknown scan axis {axis!r}; expected one of {_SCAN_AXES}")


def run_point(setup: RunSetup, observable: str) -> ScanPoint:
    """Ground state, quench, evolve and extract one observable."""
    sim = setup.sim
    psi0 = prepared_ground_state(setup)
    diagnostics = {
        "gamma": sim.gamma, "beta": sim.beta, "omega_ext": sim.omega_ext,
        "theta0_deg": setup.theta0_deg, "depth": sim.depth,
        "time_unit_us": sim.time_unit * 1e6,
    }
    if observable == "period":
        times = period_schedule(sim, setup.theta0_deg)
    elif observable == "delay":
        times = delay_schedule(sim)
    elif observable == "mzi":
        times = mzi_schedule(sim)
    else:
        raise ValueError(f"unknown observable {observable!r}; expected one of {_OBSERVABLES}")
    series = quench_and_evolve(psi0, setup.theta0, sim, times, dt_max=setup.dt,
                               window_halfwidth=setup.window_halfwidth)
    fit = extract_period(series)
    diagnostics["period"] = fit.period
    diagnostics["period_sigma"] = fit.sigma
    if observable == "period":
        return ScanPoint(math.nan, fit.period, fit.sigma, "ok", diagnostics)
    if observable == "delay":
        res = extract_delay(series, fit.period, sim.time_unit)
        diagnostics["dip_ratio"] = res.dip_ratio
        if res.status != "ok":
            return ScanPoint(math.nan, None, None, "unresolvable", diagnostics)
        return ScanPoint(math.nan, res.delay_us, res.sigma_us, "ok", diagnostics)
    res = mzi_readout(series, fit.period)
    diagnostics["phi"] = res.phi
    diagnostics["t_read"] = res.t_read
    return ScanPoint(math.nan, res.ratio, None, "ok", diagnostics)


def scan(axis: str, values: Sequence[float], setup: RunSetup,
         observable: str) -> ScanResult:
    """Run the pipeline once per axis value; per-point failures are recorded."""
    if axis not in _SCAN_AXES:
        raise ValueError(f"unknown scan axis {axis!r}; expected one of {_SCAN_AXES}")
    if observable not in _OBSERVABLES:
        raise ValueError(f"unknown observable {observable!r}; expected one of {_OBSERVABLES}")
    if len(values) == 0:
        raise ValueError("scan needs at least one axis value")
    points = []
    for value in values:
        sub = _setup_for(setup, axis, float(value))
        try:
            point = run_point(sub, observable)
            point = replace(point, value=float(value))
        except Exception as exc:  # record and continue
            point = ScanPoint(float(value), None, None, f"failed: {exc}", {})
        points.append(point)
    echo = {
        "axis": axis, "observable": observable,
        "depth": setup.phys.depth, "beta": setup.phys.beta,
        "omega_ext_rad_s": setup.phys.omega_ext,
        "theta0_deg": setup.theta0_deg,
        "grid": [setup.grid.n_points, setup.grid.length],
        "dt": setup.dt,
    }
    return ScanResult(axis=axis, observable=observable, points=points, setup_echo=echo)
