"""Diagnostics around the optimized-effective-potential condition.

``oep_residual`` evaluates the first-order density response

    rho_W(r) = 2 sum_i u_i(r) x_i(r),
    (H_W - eps_i) x_i = -Q (K - v_x) u_i,   x_i orthogonal to all u_j,

where ``Q`` projects out the occupied orbitals.  It vanishes exactly when
``v_x`` is an optimized effective potential for the orbitals of ``H_W``.
Each ``x_i`` is obtained from a bordered sparse system in the Numerov
variables (the constraints replace the singular direction of
``H_W - eps_i``), which is direct and needs no iteration.

``reconstruct_potential`` and ``wronskian_residual`` test whether a set
of orbitals are eigenfunctions of one common local potential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .eigen import RadialHamiltonian, kinetic_apply, lowest_eigenpairs, numerov_pencil
from .errors import EigensolverError, GapAssumptionError
from .grid import integrate
from .orbitals import LocalPotential, OrbitalSet

GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class OepResidual:
    """The OEP residual ``rho_W`` (a line density) and its summaries."""

    grid: object
    values: np.ndarray
    integral: float
    norm: float
    n_solves: int
    rhs_norms: np.ndarray
    gap: float

    def as_dict(self) -> dict:
        return {
            "norm": self.norm,
            "integral": self.integral,
            "n_solves": self.n_solves,
            "rhs_norms": [float(x) for x in self.rhs_norms],
            "gap": self.gap,
        }


def _apply_exchange(exchange, u):
    if hasattr(exchange, "apply"):
        return exchange.apply(u)
    return np.asarray(exchange(u), dtype=float)


def oep_residual(
    orbitals: OrbitalSet,
    W: LocalPotential,
    v_x: LocalPotential,
    exchange,
    check_gap: bool = True,
) -> OepResidual:
    """Evaluate ``rho_W`` for the eigenfunctions ``orbitals`` of ``H_W``.

    Parameters
    ----------
    orbitals : OrbitalSet
        Lowest ``N`` eigenfunctions of ``-1/2 d^2 + W`` (eigenvalues
        attached).
    W : LocalPotential
        Total potential of the Hamiltonian.
    v_x : LocalPotential
        Local exchange potential tested against the exchange operator.
    exchange : ExchangeBlock or callable
        Anything with ``.apply(u)`` or a function ``u -> K u``.
    check_gap : bool
        Recompute level ``N + 1`` of ``H_W`` and require a gap above 1e-8.

    Raises
    ------
    GapAssumptionError
        If ``eps_{N+1} - eps_N <= 1e-8``.
    EigensolverError
        If a bordered system is numerically singular.
    """
    grid = orbitals.grid
    w_vals = grid.check(W.values if isinstance(W, LocalPotential) else W, "W")
    vx = grid.check(v_x.values if isinstance(v_x, LocalPotential) else v_x, "v_x")
    u = orbitals.u
    nb = orbitals.n_orbitals
    ham = RadialHamiltonian(grid, w_vals)
    eps = orbitals.eigenvalues
    gap = float("nan")
    if check_gap or eps is None:
        levels, _ = lowest_eigenpairs(ham, nb + 1, polish=False)
        gap = float(levels[nb] - levels[nb - 1])
        if gap <= GAP_TOL:
            raise GapAssumptionError(f"HOMO-LUMO gap {gap:.3e} is below {GAP_TOL}")
        if eps is None:
            eps = levels[:nb]

    a, b, m = numerov_pencil(grid, w_vals)
    s = grid.sqrt_jacobian
    constraints = (m @ (grid.w * s * u).T)  # column j: <u_j, x> = c_j . z
    border = sp.csc_matrix(constraints)

    pert = _apply_exchange(exchange, u) - vx * u
    proj = (pert * grid.w) @ u.T  # proj[i, j] = <u_j | (K - v) u_i>
    rhs_u = -(pert - proj @ u)
    x = np.empty_like(u)
    for i in range(nb):
        system = sp.bmat([[a - eps[i] * b, border], [border.T, None]], format="csc")
        rhs = np.concatenate([m @ (grid.mass / s * rhs_u[i]), np.zeros(nb)])
        try:
            sol = splu(system).solve(rhs)
        except RuntimeError as exc:
            dist = np.min(np.abs(np.delete(eps, i) - eps[i])) if nb > 1 else gap
            raise EigensolverError(
                f"projected system for orbital {i + 1} is singular "
                f"(distance to nearest occupied level {dist:.3e}, gap {gap:.3e})"
            ) from exc
        x[i] = s * (m @ sol[: grid.n])

    values = 2.0 * np.einsum("ik,ik->k", u, x)
    return OepResidual(
        grid=grid,
        values=values,
        integral=float(integrate(grid, values)),
        norm=float(np.sqrt(integrate(grid, values**2))),
        n_solves=nb,
        rhs_norms=np.sqrt((rhs_u * rhs_u) @ grid.w),
        gap=gap,
    )


def _check_shifts(orbitals, c):
    c = np.asarray(c, dtype=float)
    if c.shape != (orbitals.n_orbitals,):
        raise ValueError("need one shift per orbital")
    if c[0] != 0.0:
        raise ValueError("the first shift must be 0")
    return c


def default_shifts(orbitals: OrbitalSet) -> np.ndarray:
    """``c_i = 2 (eps_i - eps_1)`` from the attached eigenvalues."""
    if orbitals.eigenvalues is None:
        raise ValueError("orbitals carry no eigenvalues")
    return 2.0 * (orbitals.eigenvalues - orbitals.eigenvalues[0])


def reconstruct_potential(orbitals: OrbitalSet, c=None) -> LocalPotential:
    """Local potential (up to ``eps_1``) having ``orbitals`` as eigenfunctions.

    ``W - eps_1 = (sum_i u_i u_i'' + sum_i c_i u_i^2) / (2 rho)`` with
    ``c_i = 2 (eps_i - eps_1)``; zero where the density is below the floor.
    """
    c = default_shifts(orbitals) if c is None else _check_shifts(orbitals, c)
    if np.any(c < 0):
        raise ValueError("shifts must be non-negative")
    u = orbitals.u
    second = -2.0 * kinetic_apply(orbitals.grid, u)
    num = np.einsum("ik,ik->k", u, second) + c @ u**2
    values = np.zeros(orbitals.grid.n)
    mask = orbitals.support
    values[mask] = num[mask] / (2.0 * orbitals.density[mask])
    return LocalPotential(orbitals.grid, values)


def wronskian_residual(orbitals: OrbitalSet, c=None) -> np.ndarray:
    """L2 norms of ``(u_i u_1' - u_1 u_i')' - c_i u_1 u_i`` for ``i >= 2``.

    The derivative of the Wronskian is evaluated as ``u_i u_1'' - u_1 u_i''``
    with the solver's second derivative, so the residual vanishes to
    rounding for eigenfunctions of one discrete Hamiltonian.
    """
    c = default_shifts(orbitals) if c is None else _check_shifts(orbitals, c)
    u = orbitals.u
    if len(u) < 2:
        return np.zeros(0)
    second = -2.0 * kinetic_apply(orbitals.grid, u)
    res = u[1:] * second[0] - u[0] * second[1:] - c[1:, None] * u[0] * u[1:]
    return np.sqrt((res * res) @ orbitals.grid.w)
