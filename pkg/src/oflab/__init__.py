"""Simulation and verification lab for order-based diffusions."""
from .drift import DriftSpec, check_sc, check_ssc, classify_two_particle, general, rank_based, two_particle
from .ordering import project_centered, sigma_of, sigma_set
from .sde import SimConfig, Trajectory, simulate_X
from .sticky import StickyPath, StickyState, initial_clusters, sticky_dynamics, sticky_path

__version__ = "0.1.0"

__all__ = [
    "DriftSpec",
    "SimConfig",
    "StickyPath",
    "StickyState",
    "Trajectory",
    "check_sc",
    "check_ssc",
    "classify_two_particle",
    "general",
    "initial_clusters",
    "project_centered",
    "rank_based",
    "sigma_of",
    "sigma_set",
    "simulate_X",
    "sticky_dynamics",
    "sticky_path",
    "two_particle",
]
