"""1D GPE simulator for tunneling dynamics in a suddenly shifted optical lattice."""

__version__ = "0.1.0"

from .bands import (BandSet, bloch_bands, bound_fraction, count_bound_states,
                    effective_mass)
from .classical import classical_period, classical_trajectory, ellipk_agm, well_frequency
from .field import (Field, Grid, MomentumSnapshot, expectation_p, expectation_x,
                    gaussian_packet, momentum_density, peak_populations, tof_map,
                    total_energy)
from .pipeline import (CalibrationTable, RunSetup, calibrate_depth, extract_delay,
                       extract_period, mzi_readout, packet_tracks, run_point, scan,
                       two_mode_mzi)
from .propagator import (EvolutionSpec, Potential, adiabatic_load, ground_state,
                         quench_and_evolve, step)
from .units import (PhaseSchedule, PhysicalParams, SimParams, from_dimensionless,
                    theta_to_displacement, to_dimensionless, tof_fringe_spacing)
