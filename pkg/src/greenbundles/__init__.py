"""Green bundles, index forms and hyperbolicity tests for convex Lagrangian flows."""
from .catalog import CatalogEntry
from .catalog import get as get_system
from .conjugate import GreenBundles, find_conjugate_points, green_bundles
from .errors import ConfigurationError, GreenBundlesError, NumericalError
from .flow import PhasePoint, integrate_jacobi_frame, integrate_orbit, monodromy
from .index_form import disconjugacy_via_index, index_form_direct, index_form_factorized
from .lagrangian import (
    ConfigSpace,
    HamiltonianModel,
    LagrangianModel,
    hamiltonian_from_lagrangian,
    mechanical_pair,
)
from .riccati import riccati_bound, solve_riccati
from .sysfile import load_system

__version__ = "0.1.0"

__all__ = [
    "CatalogEntry", "ConfigSpace", "ConfigurationError", "GreenBundles", "GreenBundlesError",
    "HamiltonianModel", "LagrangianModel", "NumericalError", "PhasePoint",
    "disconjugacy_via_index", "find_conjugate_points", "get_system", "green_bundles",
    "hamiltonian_from_lagrangian", "index_form_direct", "index_form_factorized",
    "integrate_jacobi_frame", "integrate_orbit", "load_system", "mechanical_pair", "monodromy",
    "riccati_bound", "solve_riccati",
]
