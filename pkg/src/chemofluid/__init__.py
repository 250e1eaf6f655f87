"""Finite-volume solver for chemotaxis with signal-dependent motility coupled to Navier-Stokes flow."""

from .errors import ChemoFluidError, ConfigError, DomainError, SimulationError, SolverError, StateCorruptionError
from .grid import BcKind, GridSpec, StaggeredVectorField
from .motility import MotilitySpec, motility_bounds, phi, phi_prime
from .simulation import InitialSpec, RunSummary, SimConfig, SimState, check_smallness, run

__version__ = "0.1.0"

__all__ = [
    "BcKind", "ChemoFluidError", "ConfigError", "DomainError", "GridSpec", "InitialSpec", "MotilitySpec",
    "RunSummary", "SimConfig", "SimState", "SimulationError", "SolverError", "StaggeredVectorField",
    "StateCorruptionError", "check_smallness", "motility_bounds", "phi", "phi_prime", "run",
]
