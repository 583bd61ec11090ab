"""Hartree-Fock and local exchange potentials for spherical atoms on radial grids."""

from .grid import RadialGrid, build_grid
from .orbitals import LocalPotential, OrbitalSet
from .scf import ScfConfig, ScfReport, run_scf

__version__ = "0.1.0"

__all__ = ["LocalPotential", "OrbitalSet", "RadialGrid", "ScfConfig", "ScfReport", "build_grid", "run_scf"]
