"""Controllability Gramians and minimum control energy on lattice networks."""

from .bessel import log_mbffk_scaled, mbffk, mbffk_scaled, mbffk_scaled_sequence
from .control import (ControlProblem, EnergyReport, MinimumEnergyControl, SingularGramianError,
                      control_action, energy_report, expm_action, min_energy, simulate,
                      synthesize_control)
from .gramian import (ComparisonReport, EnergyRangeError, FiniteGramian, GramianTable,
                      SpectralGramian, build_table, compare, finite_gramian_closed,
                      finite_gramian_ode, infinite_entry, infinite_entry_limit, integrand,
                      output_gramian_finite, output_gramian_infinite, single_target_energy)
from .lattice import (FiniteLatticeSpec, LatticeParams, build_system,
                      check_output_controllability, flat_index, neighbors, unflat_index)
from .quad import IntegrandDomainError, QuadResult, QuadratureError, integrate, integrate_to_convergence

__version__ = "0.1.0"
