"""The Fock exchange operator restricted to radial (s-type) orbitals.

For occupied orbitals ``u_i`` the operator acts as

    (K f)(r) = -sum_i u_i(r) * int u_i(r') f(r') / max(r, r') dr'.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .grid import coulomb_potential
from .orbitals import OrbitalSet


@dataclass(frozen=True, eq=False)
class ExchangeBlock:
    """Exchange matrix elements and cached pair potentials.

    Attributes
    ----------
    orbitals : OrbitalSet
    pair_potentials : ndarray, shape (N, N, n)
        ``V_ij(r) = int u_i u_j / max(r, r') dr'``, symmetric in ``ij``.
    matrix : ndarray, shape (N, N)
        ``K_ij = <u_i | K | u_j>``.
    """

    orbitals: OrbitalSet
    pair_potentials: np.ndarray
    matrix: np.ndarray

    @cached_property
    def on_orbitals(self) -> np.ndarray:
        """``K u_j`` for every occupied orbital, shape (N, n)."""
        return -np.einsum("ik,ijk->jk", self.orbitals.u, self.pair_potentials)

    @cached_property
    def slater_numerator(self) -> np.ndarray:
        """``sum_ij u_i u_j V_ij`` (the exchange hole potential times rho)."""
        u = self.orbitals.u
        return np.einsum("ik,jk,ijk->k", u, u, self.pair_potentials)

    def apply(self, f) -> np.ndarray:
        return exchange_apply(self.orbitals, f)


def pair_potentials(orbitals: OrbitalSet) -> np.ndarray:
    u = orbitals.u
    nb = u.shape[0]
    iu, ju = np.triu_indices(nb)
    pots = coulomb_potential(orbitals.grid, u[iu] * u[ju])
    out = np.empty((nb, nb, orbitals.grid.n))
    out[iu, ju] = pots
    out[ju, iu] = pots
    return out


def exchange_apply(orbitals: OrbitalSet, f) -> np.ndarray:
    """``K f`` for one function or a stack of rows."""
    f = orbitals.grid.check(f)
    rows = np.atleast_2d(f)
    u = orbitals.u
    prods = (u[None, :, :] * rows[:, None, :]).reshape(-1, orbitals.grid.n)
    pots = coulomb_potential(orbitals.grid, prods).reshape(rows.shape[0], u.shape[0], -1)
    out = -np.einsum("ik,mik->mk", u, pots)
    return out[0] if f.ndim == 1 else out


def exchange_matrix(orbitals: OrbitalSet) -> ExchangeBlock:
    """Build the :class:`ExchangeBlock` of an orbital set."""
    v = pair_potentials(orbitals)
    u = orbitals.u
    wu = u * orbitals.grid.w
    # K_ij = -sum_m <u_i u_m | V_mj>
    k = -np.einsum("ik,mk,mjk->ij", wu, u, v)
    k = 0.5 * (k + k.T)
    return ExchangeBlock(orbitals=orbitals, pair_potentials=v, matrix=k)


def exchange_kernel_matrix(orbitals: OrbitalSet) -> np.ndarray:
    """Dense kernel ``-gamma(r, r') G(r, r')`` (small grids and testing)."""
    g = orbitals.grid
    return _kernels.exchange_kernel(orbitals.density_matrix(), g.r, g.kernel_diag)
