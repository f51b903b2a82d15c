"""Bloch bands of the cos^2 lattice and the bound/unbound decomposition.

The lattice term alone is -gamma cos^2(pi X/4 + theta) = -gamma/2
- (gamma/4)(e^{i(G X + 2 theta)} + c.c.) with G = pi/2, so in the plane-wave
basis e^{i(q+mG)X} the Hamiltonian is tridiagonal.  A band counts as bound
when its q-averaged energy lies below the barrier top (zero in this
convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .field import Field, RECIPROCAL_G


@dataclass
class BandSet:
    """Bloch spectrum of the pure lattice at one value of gamma."""

    gamma: float
    theta: float
    q: np.ndarray             # quasimomenta in (-G/2, G/2]
    energies: np.ndarray      # (n_q, n_bands), ascending per q
    eigenvectors: np.ndarray  # (n_q, n_pw, n_bands) in the plane-wave basis
    n_plane_waves: int

    @property
    def barrier_top(self) -> float:
        return 0.0

    def band_mean_energies(self) -> np.ndarray:
        return self.energies.mean(axis=0)


@dataclass
class BoundFraction:
    bound: float
    unbound: float
    completeness: float
    n_bound_bands: int
    band_populations: np.ndarray


@dataclass
class EffectiveMass:
    mass_ratio: float          # m*/m
    curvature: float           # d^2 E0 / dq^2 at q = 0
    omega_dip: Optional[float]  # hydrodynamic dipole frequency, if omega_ext given


def _bloch_hamiltonian(q: float, gamma: float, theta: float, m_range: np.ndarray) -> np.ndarray:
    h = np.diag(0.5 * (q + m_range * RECIPROCAL_G) ** 2 - gamma / 2.0).astype(complex)
    off = -(gamma / 4.0) * np.exp(2j * theta) * np.ones(len(m_range) - 1)
    h += np.diag(off, -1) + np.diag(off.conj(), 1)
    return h


def bloch_bands(gamma: float, n_q: int = 64, n_pw: int = 21,
                theta: float = 0.0) -> BandSet:
    """Diagonalize the lattice Hamiltonian on a uniform quasimomentum mesh."""
    if n_pw < 21 or n_pw % 2 == 0:
        raise ValueError("n_pw must be an odd integer >= 21")
    if n_q < 32:
        raise ValueError("n_q must be >= 32")
    m_half = n_pw // 2
    m_range = np.arange(-m_half, m_half + 1)
    dq = RECIPROCAL_G / n_q
    q = -RECIPROCAL_G / 2.0 + dq * np.arange(1, n_q + 1)  # (-G/2, G/2]
    energies = np.empty((n_q, n_pw))
    vectors = np.empty((n_q, n_pw, n_pw), dtype=complex)
    for i, qi in enumerate(q):
        w, v = np.linalg.eigh(_bloch_hamiltonian(qi, gamma, theta, m_range))
        energies[i] = w
        vectors[i] = v
    return BandSet(gamma=gamma, theta=theta, q=q, energies=energies,
                   eigenvectors=vectors, n_plane_waves=n_pw)


def count_bound_states(bands: BandSet) -> int:
    """Number of bands whose q-averaged energy lies below the barrier top."""
    return int(np.sum(bands.band_mean_energies() < bands.barrier_top))


def effective_mass(bands: BandSet, omega_ext: Optional[float] = None) -> EffectiveMass:
    """Inverse curvature of the lowest band at q = 0, in free-particle units."""
    idx = np.argsort(np.abs(bands.q))[:5]
    idx.sort()
    qs = bands.q[idx]
    e0 = bands.energies[idx, 0]
    coeffs = np.polyfit(qs, e0, 2)
    curvature = 2.0 * coeffs[0]
    if curvature <= 0:
        raise ValueError(
            f"non-positive band curvature {curvature:.3e} at q=0 (band-edge regime)")
    mass_ratio = 1.0 / curvature
    omega_dip = None
    if omega_ext is not None:
        omega_dip = math.sqrt(curvature) * omega_ext
    return EffectiveMass(mass_ratio=mass_ratio, curvature=curvature, omega_dip=omega_dip)


def bound_fraction(f: Field, gamma: float, theta: float = 0.0,
                   n_bound: Optional[int] = None, n_pw: int = 33) -> BoundFraction:
    """Decompose a field into bound vs unbound Bloch populations.

    The external trap is ignored; the projection uses the lattice term only,
    at the phase currently applied to it.  The quasimomentum mesh is the one
    induced by the periodic box (q_j = 2 pi j / L folded into the zone), so
    the Bloch basis is exactly complete on the grid up to the plane-wave
    cutoff.  Completeness below 1 - 1e-3 aborts.
    """
    grid = f.grid
    teeth = RECIPROCAL_G / grid.dk
    if abs(teeth - round(teeth)) > 1e-9:
        raise ValueError("grid is not commensurate with the lattice")
    teeth = int(round(teeth))
    if n_pw % 2 == 0:
        raise ValueError("n_pw must be odd")
    m_half = n_pw // 2
    m_range = np.arange(-m_half, m_half + 1)

    if n_bound is None:
        n_bound = count_bound_states(bloch_bands(gamma, n_q=64, n_pw=max(n_pw, 21),
                                                 theta=theta))

    a = np.fft.fft(f.psi)
    a = a / np.linalg.norm(a)
    n = grid.n_points
    j = np.arange(n)
    jj = np.where(j < n // 2, j, j - n)              # signed wavenumber index
    qi = ((jj + teeth // 2) % teeth) - teeth // 2    # folded zone index
    m = (jj - qi) // teeth                           # reciprocal-lattice offset

    band_pops = np.zeros(n_pw)
    bound_w = 0.0
    total_w = 0.0
    for q_index in range(-teeth // 2, teeth // 2):
        sel = np.where(qi == q_index)[0]
        c = np.zeros(n_pw, dtype=complex)
        for mv, av in zip(m[sel], a[sel]):
            if -m_half <= mv <= m_half:
                c[mv + m_half] = av
        qv = q_index * grid.dk
        _, v = np.linalg.eigh(_bloch_hamiltonian(qv, gamma, theta, m_range))
        pops = np.abs(v.conj().T @ c) ** 2
        band_pops += pops
        total_w += float(pops.sum())
        bound_w += float(pops[:n_bound].sum())

    if abs(1.0 - total_w) > 1e-3:
        raise ValueError(
            f"Bloch completeness {total_w:.6f} deviates by more than 1e-3; "
            f"increase n_pw (currently {n_pw})")
    return BoundFraction(
        bound=bound_w / total_w,
        unbound=1.0 - bound_w / total_w,
        completeness=total_w,
        n_bound_bands=n_bound,
        band_populations=band_pops,
    )


def bands_to_csv(bands: BandSet, path, n_bands: Optional[int] = None) -> None:
    from .field import csv_float
    nb = n_bands if n_bands is not None else min(8, bands.energies.shape[1])
    with open(path, "w") as fh:
        fh.write("q," + ",".join(f"E{b}" for b in range(nb)) + "\n")
        for i, qv in enumerate(bands.q):
            row = ",".join(csv_float(bands.energies[i, b]) for b in range(nb))
            fh.write(f"{csv_float(qv)},{row}\n")
