"""Low-energy single-peak solutions of Klein-Gordon-Maxwell and Schroedinger-Maxwell
systems on the flat 3-torus, via Nehari-constrained minimization."""
from .grid import System, SystemParams, TorusGrid
from .ground_state import RadialProfile, bump_field, shoot_ground_state
from .psi import solve_psi, solve_V
from .energy import NehariPoint, energy, gradient, nehari_residual, phi_seed, project_nehari
from .minimizer import SolveOptions, SolveResult, Status, minimize, multi_start
from .analysis import SolutionRecord, barycenter, find_peaks, maxval_certificate, profile_residual

__all__ = [
    "System", "SystemParams", "TorusGrid", "RadialProfile", "bump_field", "shoot_ground_state",
    "solve_psi", "solve_V", "NehariPoint", "energy", "gradient", "nehari_residual", "phi_seed",
    "project_nehari", "SolveOptions", "SolveResult", "Status", "minimize", "multi_start",
    "SolutionRecord", "barycenter", "find_peaks", "maxval_certificate", "profile_residual",
]
