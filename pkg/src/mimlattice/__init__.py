"""Traveling waves in mass-in-mass lattices with small resonator mass.

Spectral solvers for the monatomic solitary wave, the linear dispersion
structure, exact periodic waves and nanopteron solutions, plus a direct
lattice integrator to check that the computed profiles travel steadily.
"""

__version__ = "0.1.0"

from .dispersion import (
    DispersionScalars,
    LatticeParams,
    Omega_mu,
    antiresonance_mass,
    in_admissible_set,
    kernel_scalars,
    lambda_pm,
    solve_omega_mu,
    symbol_matrix,
)
from .monatomic import MonatomicWave, RefinedLimit, refine_limit, solve_Hc, solve_sigma
from .nanopteron import NanopteronConfig, NanopteronSolution, amplitude_sweep, solve_nanopteron
from .periodic import PeriodicCoeffs, PeriodicFamilyPoint, solve_periodic
from .simulation import ChainState, SimConfig, init_from_profiles, run
from .spectral import DomainSpec, Parity, TrigSeries, domain_for_frequency

__all__ = [
    "ChainState",
    "DispersionScalars",
    "DomainSpec",
    "LatticeParams",
    "MonatomicWave",
    "NanopteronConfig",
    "NanopteronSolution",
    "Omega_mu",
    "Parity",
    "PeriodicCoeffs",
    "PeriodicFamilyPoint",
    "RefinedLimit",
    "SimConfig",
    "TrigSeries",
    "amplitude_sweep",
    "antiresonance_mass",
    "domain_for_frequency",
    "in_admissible_set",
    "init_from_profiles",
    "kernel_scalars",
    "lambda_pm",
    "refine_limit",
    "run",
    "solve_Hc",
    "solve_nanopteron",
    "solve_omega_mu",
    "solve_periodic",
    "solve_sigma",
    "symbol_matrix",
]
