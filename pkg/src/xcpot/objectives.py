"""Quadratic objectives whose minimisers are the local exchange potentials.

Every objective is a squared Hilbert-Schmidt norm of an operator built
from ``A = v - K`` and the occupied projector.  Norms are taken in the
s-wave sector, where the kernels are functions of ``(r, r')`` and the
measure is ``dr dr'``.

* ``I_S(v) = 1/2 sum_j ||A u_j||^2``
* ``J_S(v) = 1/2 ||v gamma + gamma / |r - r'| ||^2``
* ``J_KLI(v) = 1/2 sum_j ||(A - <u_j|A|u_j>) u_j||^2``
* ``J_ELP(v) = 1/2 ||[A, P]||^2 = sum_j ||(1 - P) A u_j||^2``

The KLI and ELP forms are written as norms of residual vectors, which is
algebraically equal to the textbook difference of squares but avoids
cancellation, so gauge invariance holds to rounding.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .exchange import ExchangeBlock, exchange_matrix
from .orbitals import LocalPotential, OrbitalSet


def _values(v):
    return v.values if isinstance(v, LocalPotential) else np.asarray(v, dtype=float)


def _perturbation(orbitals, v, block):
    """Rows ``A u_j = v u_j - K u_j``."""
    if block is None:
        block = exchange_matrix(orbitals)
    vals = orbitals.grid.check(_values(v), "v")
    return vals * orbitals.u - block.on_orbitals


def _norm2(grid, rows):
    return float(np.sum((rows * rows) @ grid.w))


def exchange_hole_self_energy(orbitals: OrbitalSet) -> float:
    """``int int gamma^2 / |r - r'|^2``, the ``v``-independent part of ``J_S``."""
    g = orbitals.grid
    return _kernels.log_kernel_double_sum(orbitals.u, g.w, g.r, g.log_kernel_diag)


def objective_slater(
    orbitals: OrbitalSet, v, block: ExchangeBlock | None = None, constant: float | None = None
) -> tuple[float, float]:
    """Return ``(I_S, J_S)``.

    Parameters
    ----------
    constant : float, optional
        Precomputed :func:`exchange_hole_self_energy`, which is the only
        O(n^2) part of ``J_S``.
    """
    if block is None:
        block = exchange_matrix(orbitals)
    grid = orbitals.grid
    vals = grid.check(_values(v), "v")
    i_s = 0.5 * _norm2(grid, _perturbation(orbitals, vals, block))
    if constant is None:
        constant = exchange_hole_self_energy(orbitals)
    # sum_l w_l gamma_kl^2 = sum_ij u_i u_j <u_i|u_j>
    diag = np.einsum("ik,jk,ij->k", orbitals.u, orbitals.u, orbitals.overlap)
    quad = np.sum(grid.w * diag * vals**2)
    cross = 2.0 * np.sum(grid.w * vals * block.slater_numerator)
    j_s = 0.5 * (quad + cross + constant)
    return float(i_s), float(j_s)


def objective_kli(orbitals: OrbitalSet, v, block: ExchangeBlock | None = None) -> float:
    """``J_KLI``; invariant under ``v -> v + c``."""
    au = _perturbation(orbitals, v, block)
    w = orbitals.grid.w
    diag = np.einsum("jk,jk->j", au * w, orbitals.u)
    res = au - diag[:, None] * orbitals.u
    return 0.5 * _norm2(orbitals.grid, res)


def objective_elp(orbitals: OrbitalSet, v, block: ExchangeBlock | None = None) -> float:
    """``J_ELP``; invariant under ``v -> v + c``."""
    au = _perturbation(orbitals, v, block)
    w = orbitals.grid.w
    proj = (au * w) @ orbitals.u.T  # proj[j, i] = <u_i | A u_j>
    res = au - proj @ orbitals.u
    return _norm2(orbitals.grid, res)
