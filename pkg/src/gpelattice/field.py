"""Spatial grid, wavefunction storage and quadrature observables.

Everything downstream (propagation, band projection, the measurement
pipeline) works on a uniform periodic grid commensurate with the lattice
period 4.  The spectral transform is kept unitary so that momentum-space
densities integrate to the position-space norm (Parseval).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .units import PhysicalParams

LATTICE_PERIOD = 4.0       # dimensionless lattice period, fixed by cos^2(pi X / 4)
RECIPROCAL_G = math.pi / 2  # reciprocal lattice vector; momentum orders sit at n*G
DEFAULT_WINDOW_HALFWIDTH = math.pi / 4
DEFAULT_ORDERS = (-2, -1, 0, 1, 2)

_DUMP_MAGIC = b"GPLFLD01"


class PeakFit(NamedTuple):
    center: float
    width: float
    amplitude: float


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid over a box commensurate with the lattice."""

    n_points: int
    length: float

    def __post_init__(self):
        if self.n_points <= 0 or (self.n_points & (self.n_points - 1)) != 0:
            raise ValueError(f"n_points must be a positive power of two, got {self.n_points}")
        n_sites = self.length / LATTICE_PERIOD
        if abs(n_sites - round(n_sites)) > 1e-9 or round(n_sites) < 1:
            raise ValueError(f"box length {self.length} is not a multiple of the lattice period 4")
        if self.n_points / n_sites < 16:
            raise ValueError("fewer than 16 grid points per lattice period")

    @classmethod
    def default(cls) -> "Grid":
        return cls(n_points=4096, length=256.0)

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.length

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.dx

    @cached_property
    def k(self) -> np.ndarray:
        """FFT-ordered wavenumbers."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    @cached_property
    def k_sorted(self) -> np.ndarray:
        return np.fft.fftshift(self.k)


@dataclass
class Field:
    """Complex wavefunction on a grid, normalized to unit probability."""

    grid: Grid
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=np.complex128)
        if self.psi.shape != (self.grid.n_points,):
            raise ValueError("psi shape does not match grid")

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.psi) ** 2)) * self.grid.dx)

    def normalized(self) -> "Field":
        return Field(self.grid, self.psi / self.norm())

    def copy(self) -> "Field":
        return Field(self.grid, self.psi.copy())

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def spectral(self) -> np.ndarray:
        """Unitary transform, FFT-ordered: sum |psi_k|^2 dk = sum |psi|^2 dx."""
        return np.fft.fft(self.psi) * (self.grid.dx / math.sqrt(2.0 * math.pi))

    def fidelity(self, other: "Field") -> float:
        overlap = np.sum(np.conj(self.psi) * other.psi) * self.grid.dx
        return float(abs(overlap) ** 2)


def gaussian_packet(grid: Grid, center: float = 0.0, width: float = 1.0,
                    k0: float = 0.0) -> Field:
    """Normalized Gaussian with mean position `center` and mean momentum `k0`."""
    psi = np.exp(-((grid.x - center) ** 2) / (4.0 * width**2) + 1j * k0 * grid.x)
    return Field(grid, psi).normalized()


@dataclass
class MomentumSnapshot:
    """Momentum density at one hold time plus the derived peak data."""

    hold_time: float
    k: np.ndarray                      # sorted ascending
    density: np.ndarray                # |psi_tilde|^2 on the sorted axis
    populations: dict                  # order n -> Pi_n
    peak_fits: dict                    # order n -> PeakFit | None
    window_halfwidth: float
    mean_x: Optional[float] = None
    mean_p: Optional[float] = None
    norm: Optional[float] = None
    energy: Optional[float] = None

    @property
    def dk(self) -> float:
        return float(self.k[1] - self.k[0])

    def total_population(self) -> float:
        return float(sum(self.populations.values()))


def expectation_x(f: Field) -> float:
    den = f.density()
    return float(np.sum(f.grid.x * den) * f.grid.dx / (np.sum(den) * f.grid.dx))


def expectation_p(f: Field) -> float:
    amp = np.abs(f.spectral()) ** 2
    return float(np.sum(f.grid.k * amp) / np.sum(amp))


def total_energy(f: Field, potential_values: np.ndarray, beta: float = 0.0) -> float:
    """GPE energy functional: kinetic + potential + (beta/2) |psi|^4."""
    amp = np.abs(f.spectral()) ** 2
    norm2 = float(np.sum(amp))
    kinetic = float(np.sum(0.5 * f.grid.k**2 * amp)) / norm2
    den = f.density()
    dx = f.grid.dx
    pot = float(np.sum(potential_values * den)) * dx
    inter = 0.5 * beta * float(np.sum(den**2)) * dx
    return kinetic + pot + inter


def fit_gaussian_peak(x: np.ndarray, y: np.ndarray, i_peak: int) -> Optional[PeakFit]:
    """Gaussian fit around a peak via log-parabola over the upper-half region.

    The fit uses the contiguous samples above half of the peak value, which
    recovers the exact parameters for a true Gaussian and stays local when a
    peak sits on structured background.  Returns None when the data around
    the peak is not concave or the region is degenerate.
    """
    if y[i_peak] <= 0:
        return None
    half = 0.5 * y[i_peak]
    lo = i_peak
    while lo > 0 and y[lo - 1] >= half and y[lo - 1] > 0:
        lo -= 1
    hi = i_peak
    while hi < len(y) - 1 and y[hi + 1] >= half and y[hi + 1] > 0:
        hi += 1
    if hi - lo < 2:
        lo = max(0, i_peak - 1)
        hi = min(len(y) - 1, i_peak + 1)
        if hi - lo < 2 or np.any(y[lo:hi + 1] <= 0):
            return None
    coeffs = np.polyfit(x[lo:hi + 1], np.log(y[lo:hi + 1]), 2)
    a, b, c = coeffs
    if a >= 0:
        return None
    center = -b / (2.0 * a)
    width = math.sqrt(-1.0 / (2.0 * a))
    amplitude = math.exp(c - b**2 / (4.0 * a))
    return PeakFit(center=float(center), width=float(width), amplitude=float(amplitude))


def _window_mask(k: np.ndarray, n: int, halfwidth: float) -> np.ndarray:
    # strict inequality keeps the assignment symmetric under k -> -k and
    # avoids double counting when touching windows share a boundary point
    return np.abs(k - n * RECIPROCAL_G) < halfwidth


def momentum_density(f: Field, hold_time: float = 0.0,
                     window_halfwidth: float = DEFAULT_WINDOW_HALFWIDTH,
                     orders: tuple = DEFAULT_ORDERS,
                     energy: Optional[float] = None) -> MomentumSnapshot:
    """Momentum-space density with populations and Gaussian fits per order."""
    spec = f.spectral()
    k = f.grid.k_sorted
    density = np.fft.fftshift(np.abs(spec) ** 2)
    dk = f.grid.dk
    norm = float(np.sum(density) * dk)
    mean_p = float(np.sum(k * density) * dk / norm)

    snapshot = MomentumSnapshot(
        hold_time=hold_time,
        k=k,
        density=density,
        populations={},
        peak_fits={},
        window_halfwidth=window_halfwidth,
        mean_x=expectation_x(f),
        mean_p=mean_p,
        norm=f.norm(),
        energy=energy,
    )
    snapshot.populations = peak_populations(snapshot, window_halfwidth, orders)
    for n in orders:
        mask = _window_mask(k, n, window_halfwidth)
        idx = np.where(mask)[0]
        fit = None
        if idx.size >= 3:
            y = density[idx]
            i_peak = int(np.argmax(y))
            if y[i_peak] > 1e-12:
                fit = fit_gaussian_peak(k[idx], y, i_peak)
        snapshot.peak_fits[n] = fit
    return snapshot


def peak_populations(snapshot: MomentumSnapshot,
                     window_halfwidth: float = DEFAULT_WINDOW_HALFWIDTH,
                     orders: tuple = DEFAULT_ORDERS) -> dict:
    """Integrate the momentum density over a window around each order n*pi/2."""
    if window_halfwidth > RECIPROCAL_G / 2 + 1e-12:
        raise ValueError(
            f"window halfwidth {window_halfwidth} exceeds pi/4; windows would overlap")
    if window_halfwidth <= 0:
        raise ValueError("window halfwidth must be > 0")
    dk = snapshot.dk
    return {
        n: float(np.sum(snapshot.density[_window_mask(snapshot.k, n, window_halfwidth)]) * dk)
        for n in orders
    }


def tof_map(snapshot: MomentumSnapshot, p: PhysicalParams) -> np.ndarray:
    """Far-field positions of the momentum axis after time of flight, in m.

    A dimensionless wavenumber K corresponds to physical momentum
    hbar K / (d/4); order n = K / (pi/2) lands at n * h t_TOF / (m d).
    """
    from .units import HBAR
    if p.tof_time <= 0:
        raise ValueError("tof_time must be > 0 for a time-of-flight map")
    kphys = snapshot.k / (p.lattice_spacing / 4.0)
    return HBAR * kphys * p.tof_time / p.atom_mass


def save_field_dump(path, f: Field) -> None:
    """Binary dump: 32-byte header (magic, n_points, box length) + (re, im) float64 LE."""
    header = _DUMP_MAGIC + struct.pack("<Qd", f.grid.n_points, f.grid.length)
    header += b"\x00" * (32 - len(header))
    interleaved = np.empty(2 * f.grid.n_points, dtype="<f8")
    interleaved[0::2] = f.psi.real
    interleaved[1::2] = f.psi.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(interleaved.tobytes())


def load_field_dump(path) -> Field:
    with open(path, "rb") as fh:
        header = fh.read(32)
        if header[:8] != _DUMP_MAGIC:
            raise ValueError(f"{path}: not a field dump (bad magic)")
        n_points, length = struct.unpack("<Qd", header[8:24])
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != 2 * n_points:
        raise ValueError(f"{path}: truncated field dump")
    psi = raw[0::2] + 1j * raw[1::2]
    return Field(Grid(int(n_points), float(length)), psi)


def csv_float(x) -> str:
    """Shortest round-trip decimal form, identical across runs."""
    return repr(float(x))


def snapshot_to_csv(snapshot: MomentumSnapshot, path) -> None:
    with open(path, "w") as fh:
        fh.write("k,density\n")
        for kk, dd in zip(snapshot.k, snapshot.density):
            fh.write(f"{csv_float(kk)},{csv_float(dd)}\n")


def snapshot_sidecar(snapshot: MomentumSnapshot, path) -> None:
    payload = {
        "hold_time": snapshot.hold_time,
        "window_halfwidth": snapshot.window_halfwidth,
        "populations": {str(n): v for n, v in snapshot.populations.items()},
        "peak_fits": {
            str(n): (None if fit is None else
                     {"center": fit.center, "width": fit.width, "amplitude": fit.amplitude})
            for n, fit in snapshot.peak_fits.items()
        },
        "mean_x": snapshot.mean_x,
        "mean_p": snapshot.mean_p,
        "norm": snapshot.norm,
        "energy": snapshot.energy,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
