"""Reproducible random inputs for property tests and sanity checks."""

from __future__ import annotations

import numpy as np

from .eigen import RadialHamiltonian, lowest_eigenpairs
from .grid import RadialGrid
from .orbitals import OrbitalSet


def random_orbitals(grid: RadialGrid, n_orbitals: int, rng, n_basis: int | None = None) -> OrbitalSet:
    """Orthonormal radial orbitals built from random Slater-type functions.

    Each orbital is a random combination of ``r^p exp(-zeta r)`` with
    ``p in {1, 2, 3}`` and ``zeta in [0.6, 2.5]``, orthonormalised in the
    grid weights, so that the density is smooth and strictly positive.
    """
    rng = np.random.default_rng(rng)
    n_basis = n_basis or n_orbitals + 3
    r = grid.r
    powers = rng.integers(1, 4, size=n_basis)
    zetas = rng.uniform(0.6, 2.5, size=n_basis)
    basis = r[None, :] ** powers[:, None] * np.exp(-zetas[:, None] * r[None, :])
    coef = rng.standard_normal((n_orbitals, n_basis))
    raw = coef @ basis
    # Gram-Schmidt via Cholesky of the overlap, done twice so that the
    # result is orthonormal to rounding even for a poorly conditioned basis
    u = raw
    for _ in range(2):
        chol = np.linalg.cholesky((u * grid.w) @ u.T)
        u = np.linalg.solve(chol, u)
    return OrbitalSet(grid, u)


def hydrogenic_orbitals(grid: RadialGrid, z: float, n_orbitals: int) -> OrbitalSet:
    """Lowest s-states of ``-z/r`` on ``grid``."""
    _, orb = lowest_eigenpairs(RadialHamiltonian(grid, -z / grid.r), n_orbitals)
    return orb
