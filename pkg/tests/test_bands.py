import math

import numpy as np
import pytest

from gpelattice import (Field, Grid, bloch_bands, bound_fraction, count_bound_states,
                        effective_mass, gaussian_packet, to_dimensionless)
from gpelattice.field import RECIPROCAL_G
from gpelattice.units import PhysicalParams

GAMMA_321 = to_dimensionless(PhysicalParams(depth=3.21)).gamma


def test_free_particle_bands():
    bands = bloch_bands(0.0, n_q=64, n_pw=21)
    i0 = int(np.argmin(np.abs(bands.q)))
    assert bands.q[i0] == pytest.approx(0.0, abs=1e-12)
    assert bands.energies[i0, 0] == pytest.approx(0.0, abs=1e-12)
    # folded parabolas: band b at q matches the b-th smallest (q + m G)^2 / 2
    for iq in (3, 17, 40):
        q = bands.q[iq]
        m = np.arange(-10, 11)
        free = np.sort(0.5 * (q + m * RECIPROCAL_G) ** 2)
        assert np.allclose(bands.energies[iq, :5], free[:5], atol=1e-10)
    assert count_bound_states(bands) == 0


def test_two_bound_states_at_calibrated_depth():
    bands = bloch_bands(GAMMA_321)
    assert count_bound_states(bands) == 2


def test_deep_lattice_band_count_and_gap():
    gamma20 = to_dimensionless(PhysicalParams(depth=20.0)).gamma
    bands = bloch_bands(gamma20, n_pw=41)
    assert count_bound_states(bands) >= 4
    # lowest gap approaches the harmonic spacing pi^2 sqrt(s) / 8
    i0 = int(np.argmin(np.abs(bands.q)))
    gap = bands.energies[i0, 1] - bands.energies[i0, 0]
    omega0 = math.pi**2 * math.sqrt(20.0) / 8.0
    assert gap == pytest.approx(omega0, rel=0.10)


def test_band_symmetry_and_orthonormality():
    bands = bloch_bands(GAMMA_321, n_q=64, n_pw=25)
    # E_b(q) = E_b(-q)
    for iq, q in enumerate(bands.q):
        jq = int(np.argmin(np.abs(bands.q + q)))
        if abs(bands.q[jq] + q) < 1e-12:
            assert np.allclose(bands.energies[iq], bands.energies[jq], atol=1e-10)
    # eigenvector orthonormality per q
    for iq in (0, 13, 31):
        v = bands.eigenvectors[iq]
        gram = v.conj().T @ v
        assert np.max(np.abs(gram - np.eye(v.shape[1]))) < 1e-10


def test_band_energies_sorted():
    bands = bloch_bands(GAMMA_321)
    assert np.all(np.diff(bands.energies, axis=1) >= -1e-12)


def test_plane_wave_truncation_converged():
    b21 = bloch_bands(GAMMA_321, n_pw=21)
    b41 = bloch_bands(GAMMA_321, n_pw=41)
    for band in (0, 1):
        rel = np.abs(b41.energies[:, band] - b21.energies[:, band]) / np.abs(
            b41.energies[:, band])
        assert np.max(rel) < 1e-8


def test_parameter_validation():
    with pytest.raises(ValueError):
        bloch_bands(GAMMA_321, n_pw=20)
    with pytest.raises(ValueError):
        bloch_bands(GAMMA_321, n_pw=19)
    with pytest.raises(ValueError):
        bloch_bands(GAMMA_321, n_q=16)


def test_effective_mass_free_limit():
    em = effective_mass(bloch_bands(0.0))
    assert em.mass_ratio == pytest.approx(1.0, rel=1e-9)


def test_effective_mass_grows_with_depth():
    ratios = [effective_mass(bloch_bands(g)).mass_ratio for g in (0.5, 1.5, 3.0, 4.0)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))


def test_hydrodynamic_frequency_inapplicable_at_depth():
    """The effective-mass dipole frequency is far from the micromotion scale."""
    sim = to_dimensionless(PhysicalParams())
    em = effective_mass(bloch_bands(sim.gamma), omega_ext=sim.omega_ext)
    assert em.mass_ratio > 1.0
    assert em.omega_dip < sim.omega_ext
    period_hydro = 2 * math.pi / em.omega_dip
    assert period_hydro / 4.37 > 10.0  # nothing like the measured cadence


def test_bound_fraction_of_ground_state(gs_default, default_sim):
    res = bound_fraction(gs_default, default_sim.gamma, theta=0.0)
    assert res.bound > 0.99
    assert abs(res.completeness - 1.0) < 1e-4
    assert res.n_bound_bands == 2


def test_bound_fraction_invariances(gs_small):
    gamma = to_dimensionless(PhysicalParams(depth=3.21)).gamma
    base = bound_fraction(gs_small, gamma, theta=0.0)
    phase = Field(gs_small.grid, gs_small.psi * np.exp(1j * 0.7))
    shifted = bound_fraction(phase, gamma, theta=0.0)
    assert shifted.bound == pytest.approx(base.bound, abs=1e-12)
    # translating the state by one lattice period leaves the fractions alone
    pts = int(round(4.0 / gs_small.grid.dx))
    rolled = Field(gs_small.grid, np.roll(gs_small.psi, pts))
    assert bound_fraction(rolled, gamma, theta=0.0).bound == pytest.approx(
        base.bound, abs=1e-9)


def test_bound_fraction_completeness_guard():
    grid = Grid(512, 32.0)
    # momentum beyond the plane-wave rails of a 21-wave basis (|K| ~ 10 G/2)
    fast = gaussian_packet(grid, width=0.5, k0=18.0)
    with pytest.raises(ValueError, match="completeness"):
        bound_fraction(fast, GAMMA_321, n_pw=21)


def test_bound_fraction_rejects_even_plane_wave_count(gs_small):
    with pytest.raises(ValueError, match="odd"):
        bound_fraction(gs_small, GAMMA_321, n_pw=32)
