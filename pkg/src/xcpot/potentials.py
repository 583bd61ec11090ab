"""Local exchange potentials: Slater, KLI and ELP.

All three are built from the occupied orbitals and the exchange block.
Where the density is below the floor the potentials are set to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDensityError
from .exchange import ExchangeBlock, exchange_matrix
from .orbitals import ORTHO_TOL, LocalPotential, OrbitalSet

KERNEL_RTOL = 1e-12


def _safe_ratio(num, den, mask):
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=mask)
    return out


def _block(orbitals, block):
    return exchange_matrix(orbitals) if block is None else block


def slater_potential(
    orbitals: OrbitalSet, eta: float = 0.0, block: ExchangeBlock | None = None
) -> LocalPotential:
    """Slater exchange potential ``-sum_ij u_i u_j V_ij / rho``.

    With ``eta > 0`` the regularised form replaces the 3-D density
    ``rho / (4 pi r^2)`` by ``rho / (4 pi r^2) + eta`` in the denominator.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    block = _block(orbitals, block)
    grid = orbitals.grid
    rho = orbitals.density
    num = -block.slater_numerator
    if eta > 0:
        den = rho + 4.0 * np.pi * grid.r**2 * eta
        values = num / den
    else:
        values = _safe_ratio(num, rho, orbitals.support)
    return LocalPotential(grid, values)


def _nullspace_solve(mat, rhs, what):
    """Minimum-norm solution of a symmetric system with a 1-D kernel.

    The eigenvalue of smallest magnitude spans the kernel; it must be
    below ``ORTHO_TOL`` (the kernel is exact only for orthonormal
    orbitals) and the next one must stay above ``KERNEL_RTOL * max``.
    """
    lam, q = np.linalg.eigh(mat)
    scale = max(1.0, float(np.max(np.abs(lam))))
    order = np.argsort(np.abs(lam))
    small = np.abs(lam[order])
    if small[0] > ORTHO_TOL * scale:
        raise DegenerateDensityError(f"{what} has no kernel (smallest eigenvalue {small[0]:.3e})")
    if len(small) > 1 and small[1] <= KERNEL_RTOL * scale:
        dim = int(np.count_nonzero(small <= KERNEL_RTOL * scale))
        raise DegenerateDensityError(
            f"{what} has a kernel of dimension {dim} (expected 1); "
            "the density is probably split into disconnected pieces"
        )
    null = np.zeros(len(lam), dtype=bool)
    null[order[0]] = True
    coef = np.where(null, 0.0, (q.T @ rhs) / np.where(null, 1.0, lam))
    return q @ coef


@dataclass(frozen=True, eq=False)
class KliSolution:
    """Solution of the KLI linear system ``(I - S) alpha = beta``.

    ``shift`` is the constant added to the minimum-norm solution to
    realise the requested gauge.
    """

    alpha: np.ndarray
    beta: np.ndarray
    S: np.ndarray
    shift: float
    gauge: str

    @property
    def residual(self) -> float:
        n = len(self.alpha)
        return float(np.linalg.norm((np.eye(n) - self.S) @ self.alpha - self.beta))


def kli_matrix(orbitals: OrbitalSet) -> np.ndarray:
    """``S_ij = int u_i^2 u_j^2 / rho``."""
    u2 = orbitals.u**2
    wr = _safe_ratio(orbitals.grid.w, orbitals.density, orbitals.support)
    s = (u2 * wr) @ u2.T
    return 0.5 * (s + s.T)


def kli_potential(
    orbitals: OrbitalSet, block: ExchangeBlock | None = None, gauge: str = "homo"
) -> tuple[LocalPotential, KliSolution]:
    """KLI exchange potential.

    Parameters
    ----------
    orbitals : OrbitalSet
        The HOMO is the orbital with the highest eigenvalue, or the last
        one when no eigenvalues are attached.
    block : ExchangeBlock, optional
    gauge : {"homo", "raw"}
        ``"homo"`` fixes ``alpha_N = K_NN`` so that the potential keeps the
        Slater ``-1/r`` tail; ``"raw"`` keeps the minimum-norm ``alpha``.
    """
    if gauge not in ("homo", "raw"):
        raise ValueError(f"KLI gauge must be 'homo' or 'raw', got {gauge!r}")
    block = _block(orbitals, block)
    vs = slater_potential(orbitals, 0.0, block)
    s = kli_matrix(orbitals)
    kdiag = np.diag(block.matrix)
    beta = np.diag(orbitals.inner(vs.values)) - s @ kdiag
    nb = orbitals.n_orbitals
    alpha = _nullspace_solve(np.eye(nb) - s, beta, "I - S")
    homo = nb - 1 if orbitals.eigenvalues is None else int(np.argmax(orbitals.eigenvalues))
    shift = float(kdiag[homo] - alpha[homo]) if gauge == "homo" else 0.0
    alpha = alpha + shift
    weights = _safe_ratio(orbitals.u**2, orbitals.density, orbitals.support)
    values = vs.values + (alpha - kdiag) @ weights
    values[~orbitals.support] = 0.0
    sol = KliSolution(alpha=alpha, beta=beta, S=s, shift=shift, gauge=gauge)
    return LocalPotential(orbitals.grid, values, gauge), sol


@dataclass(frozen=True, eq=False)
class ElpSolution:
    """Solution of the ELP matrix system ``(I - A) M = G``."""

    M: np.ndarray
    A: np.ndarray
    G: np.ndarray
    shift: float
    gauge: str

    @property
    def residual(self) -> float:
        nb = self.M.shape[0]
        a = self.A.reshape(nb * nb, nb * nb)
        return float(np.linalg.norm(self.M.ravel() - a @ self.M.ravel() - self.G.ravel()))


def elp_tensor(orbitals: OrbitalSet) -> np.ndarray:
    """``A[k, l, i, j] = int u_k u_l u_i u_j / rho``."""
    u = orbitals.u
    wr = _safe_ratio(orbitals.grid.w, orbitals.density, orbitals.support)
    pairs = np.einsum("ik,jk->ijk", u, u)
    nb = u.shape[0]
    flat = pairs.reshape(nb * nb, -1)
    a = (flat * wr) @ flat.T
    a = 0.5 * (a + a.T)
    return a.reshape(nb, nb, nb, nb)


def elp_potential(
    orbitals: OrbitalSet, block: ExchangeBlock | None = None, gauge: str = "trace"
) -> tuple[LocalPotential, ElpSolution]:
    """ELP exchange potential (the self-consistent CEDA potential).

    The minimum-norm solution of ``(I - A) M = G`` is Frobenius-orthogonal
    to the identity, so ``"trace"`` (``Tr M = 0``) and ``"raw"`` give the
    same potential; only the gauge tag differs.
    """
    if gauge not in ("trace", "raw"):
        raise ValueError(f"ELP gauge must be 'trace' or 'raw', got {gauge!r}")
    block = _block(orbitals, block)
    vs = slater_potential(orbitals, 0.0, block)
    nb = orbitals.n_orbitals
    a = elp_tensor(orbitals)
    amat = a.reshape(nb * nb, nb * nb)
    kmat = block.matrix
    g = orbitals.inner(vs.values) - (amat @ kmat.ravel()).reshape(nb, nb)
    g = 0.5 * (g + g.T)
    m = _nullspace_solve(np.eye(nb * nb) - amat, g.ravel(), "I - A").reshape(nb, nb)
    m = 0.5 * (m + m.T)
    pairs = _safe_ratio(
        np.einsum("ik,jk->ijk", orbitals.u, orbitals.u), orbitals.density, orbitals.support
    )
    values = vs.values + np.einsum("ij,ijk->k", m - kmat, pairs)
    values[~orbitals.support] = 0.0
    sol = ElpSolution(M=m, A=a, G=g, shift=0.0, gauge=gauge)
    return LocalPotential(orbitals.grid, values, gauge), sol


def kli_equation_residual(
    orbitals: OrbitalSet, v: LocalPotential, block: ExchangeBlock | None = None
) -> np.ndarray:
    """Pointwise residual of ``rho v = -sum u_i u_j V_ij + sum (a_i - K_ii) u_i^2``.

    ``a_i = <u_i | v | u_i>``.  Zero for the KLI potential of ``orbitals``.
    """
    block = _block(orbitals, block)
    a = np.diag(orbitals.inner(v.values))
    rhs = -block.slater_numerator + (a - np.diag(block.matrix)) @ orbitals.u**2
    res = orbitals.density * v.values - rhs
    res[~orbitals.support] = 0.0
    return res


def ceda_residual(
    orbitals: OrbitalSet, v: LocalPotential, block: ExchangeBlock | None = None
) -> np.ndarray:
    """Pointwise residual of the CEDA equation.

    ``rho v = -sum_ij u_i u_j V_ij + sum_ij <u_i | v - K | u_j> u_i u_j``.
    """
    block = _block(orbitals, block)
    c = orbitals.inner(v.values) - block.matrix
    rhs = -block.slater_numerator + np.einsum("ij,ik,jk->k", c, orbitals.u, orbitals.u)
    res = orbitals.density * v.values - rhs
    res[~orbitals.support] = 0.0
    return res
