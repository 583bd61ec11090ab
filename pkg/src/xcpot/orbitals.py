"""Containers for occupied orbitals and local potentials."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import OrbitalError
from .grid import RadialGrid

ORTHO_TOL = 1e-8
# Relative floor below which the density is treated as zero.  Chosen far
# below any physically meaningful value so that potentials stay defined
# wherever the orbitals have not underflowed.
RHO_FLOOR_REL = 1e-200


@dataclass(frozen=True, eq=False)
class OrbitalSet:
    """Orthonormal occupied radial orbitals ``u_i = r * phi_i``.

    Parameters
    ----------
    grid : RadialGrid
    u : ndarray, shape (N, n)
        One orbital per row, orthonormal in the grid weights.
    eigenvalues : ndarray, optional
        Orbital energies when the set comes from a Hamiltonian.
    validate : bool
        Check orthonormality on construction.
    """

    grid: RadialGrid
    u: np.ndarray
    eigenvalues: np.ndarray | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.u, dtype=float))
        self.grid.check(u, "u")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        if self.eigenvalues is not None:
            e = np.asarray(self.eigenvalues, dtype=float)
            if e.shape != (u.shape[0],):
                raise OrbitalError("need one eigenvalue per orbital")
            object.__setattr__(self, "eigenvalues", e)
        if self.validate and self.n_orbitals:
            err = np.max(np.abs(self.overlap - np.eye(self.n_orbitals)))
            if not err <= ORTHO_TOL:
                raise OrbitalError(f"orbitals are not orthonormal (max error {err:.3e})")

    @property
    def n_orbitals(self) -> int:
        return self.u.shape[0]

    @cached_property
    def overlap(self) -> np.ndarray:
        wu = self.u * self.grid.w
        return wu @ self.u.T

    @cached_property
    def density(self) -> np.ndarray:
        """Line density ``sum_i u_i**2`` (integrates to N)."""
        return np.einsum("ik,ik->k", self.u, self.u)

    @cached_property
    def density_floor(self) -> float:
        return RHO_FLOOR_REL * float(np.max(self.density))

    @cached_property
    def support(self) -> np.ndarray:
        """Mask of nodes where the density exceeds the floor."""
        return self.density > self.density_floor

    def density_matrix(self) -> np.ndarray:
        """Dense ``gamma_kl = sum_i u_i(r_k) u_i(r_l)``."""
        return self.u.T @ self.u

    def inner(self, f) -> np.ndarray:
        """Matrix ``<u_i | f | u_j>`` for a multiplicative potential ``f``."""
        wu = self.u * (self.grid.w * self.grid.check(f))
        return wu @ self.u.T

    def take(self, count) -> "OrbitalSet":
        """The first ``count`` orbitals."""
        e = None if self.eigenvalues is None else self.eigenvalues[:count]
        return OrbitalSet(self.grid, self.u[:count], e, validate=False)

    def rotated(self, q) -> "OrbitalSet":
        """Orbitals mixed by an orthogonal matrix ``q`` (energies dropped)."""
        return OrbitalSet(self.grid, np.asarray(q).T @ self.u)


@dataclass(frozen=True, eq=False)
class LocalPotential:
    """A multiplicative potential sampled on a grid.

    ``gauge`` records how the additive constant was fixed: ``"none"`` for
    potentials with no freedom, otherwise ``"homo"``, ``"trace"`` or
    ``"raw"``.
    """

    grid: RadialGrid
    values: np.ndarray
    gauge: str = "none"

    def __post_init__(self):
        v = np.array(self.grid.check(self.values, "values"), dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def tail_coefficient(self, lo=0.5, hi=0.9) -> float:
        """Least-squares ``c`` in ``v ~ c/r`` over ``[lo, hi] * r_max``."""
        r = self.grid.r
        sel = (r >= lo * self.grid.r_max) & (r <= hi * self.grid.r_max)
        w = self.grid.w[sel]
        return float(np.sum(w * self.values[sel] / r[sel]) / np.sum(w / r[sel] ** 2))

    @property
    def c_tail(self) -> float:
        return self.tail_coefficient()

    def shifted(self, c) -> "LocalPotential":
        return LocalPotential(self.grid, self.values + c, self.gauge)
