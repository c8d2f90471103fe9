"""Travelling-wave solver for a charged particle coupled to its own field.

The package minimizes the constrained energy of a matter wave coupled to
a solenoidal vector potential on a periodic box, for both the scalar
("S") and the spin ("P") coupling models, and ships the diagnostics
needed to corroborate the structural facts about the minimizers: energy
form identities, a priori bounds, the explicit negativity witness, the
concentration and splitting machinery, and the small-velocity effective
mass law.
"""

from .energy import (
    EnergyBreakdown,
    apriori_bounds,
    energy_functional,
    field_energy,
    sobolev_constant,
    speed_gate,
    theta_thresholds,
    travelling_energy,
)
from .errors import DomainGateError, InputError, MpwaveError, SolverError
from .fields import PhysParams, ScalarField, SpinorField, VectorField, random_fields
from .grid import Grid
from .io import read_state, write_state
from .minimize import (
    MinimizeConfig,
    MinimizeReport,
    el_residual,
    grad_A,
    grad_psi,
    lagrange_theta,
    minimize,
    plane_wave_state,
    solve_vector_potential,
)
from .diagnostics import (
    SplitSpec,
    TrialSpec,
    base_quadratures,
    centering,
    concentration_function,
    coulomb_double_integral,
    coulomb_lower_bound,
    mass_sweep,
    negativity_witness,
    split_energy_check,
    split_fields,
    trial_energy_terms,
    trial_fields,
)

__version__ = "0.1.0"

__all__ = [
    "DomainGateError",
    "EnergyBreakdown",
    "Grid",
    "InputError",
    "MinimizeConfig",
    "MinimizeReport",
    "MpwaveError",
    "PhysParams",
    "ScalarField",
    "SolverError",
    "SpinorField",
    "SplitSpec",
    "TrialSpec",
    "VectorField",
    "apriori_bounds",
    "base_quadratures",
    "centering",
    "concentration_function",
    "coulomb_double_integral",
    "coulomb_lower_bound",
    "el_residual",
    "energy_functional",
    "field_energy",
    "grad_A",
    "grad_psi",
    "lagrange_theta",
    "mass_sweep",
    "minimize",
    "negativity_witness",
    "plane_wave_state",
    "random_fields",
    "read_state",
    "sobolev_constant",
    "solve_vector_potential",
    "speed_gate",
    "split_energy_check",
    "split_fields",
    "theta_thresholds",
    "travelling_energy",
    "trial_energy_terms",
    "trial_fields",
    "write_state",
    "__version__",
]
