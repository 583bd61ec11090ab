"""Radial Schrodinger eigenproblem on a :class:`~xcpot.grid.RadialGrid`.

The equation ``-u''/2 + W u = eps u`` is mapped to the grid coordinate
``x`` with ``u = s y`` (``s = sqrt(dr/dx)``), giving
``-y''/2 + (P W + q0) y = eps P y``.  The second derivative is
discretised with the fourth-order Numerov relation
``y'' = (12/h**2) M^-1 D y`` where ``D`` is the three-point stencil and
``M = 12 I + D``.  Multiplying through by ``M`` yields the symmetric
pentadiagonal pencil

    A = -(6/h**2) D M + M diag(P W + q0) M,     B = M diag(P) M,

which is solved by shift-invert Lanczos with a sparse LU.  Non-local
operators (the Fock exchange) enter as a dense term ``M X M``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh, splu

from . import _kernels
from .errors import EigensolverError
from .grid import RadialGrid
from .orbitals import OrbitalSet

DEGENERACY_TOL = 1e-8


class DegeneracyWarning(RuntimeWarning):
    """The highest requested level is (nearly) degenerate with the next."""


@dataclass(frozen=True, eq=False)
class RadialHamiltonian:
    """``H = T + W`` plus an optional non-local integral kernel.

    Parameters
    ----------
    grid : RadialGrid
    potential : ndarray
        Local potential ``W`` at the nodes.
    kernel : ndarray, optional
        Dense symmetric kernel ``K`` acting as
        ``(K u)_k = sum_l K_kl w_l u_l``.
    """

    grid: RadialGrid
    potential: np.ndarray
    kernel: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "potential", self.grid.check(self.potential, "potential"))
        if self.kernel is not None and self.kernel.shape != (self.grid.n, self.grid.n):
            raise EigensolverError("kernel must be an n x n matrix")

    def apply(self, u) -> np.ndarray:
        """Action of ``H`` on one function or a stack of rows."""
        u = self.grid.check(u)
        out = kinetic_apply(self.grid, u) + self.potential * u
        if self.kernel is not None:
            out = out + (u * self.grid.w) @ self.kernel
        return out


# --------------------------------------------------------------------------
# Numerov building blocks
# --------------------------------------------------------------------------


def _stencil(grid: RadialGrid):
    n = grid.n
    d0 = np.full(n, -2.0)
    d0[0] += grid.origin_ratio
    return d0


def _tridiag(grid: RadialGrid, diag_shift=0.0):
    n = grid.n
    d0 = _stencil(grid) + diag_shift
    off = np.ones(n - 1)
    return sp.diags([off, d0, off], [-1, 0, 1], format="csc")


def _apply_tridiag_rows(grid: RadialGrid, x, diag_shift):
    """``(D + diag_shift I) @ x`` for a matrix ``x``."""
    out = (_stencil(grid) + diag_shift)[:, None] * x
    out[1:] += x[:-1]
    out[:-1] += x[1:]
    return out


def numerov_pencil(grid: RadialGrid, potential):
    """Sparse pentadiagonal ``(A, B, M)`` for the local Hamiltonian."""
    h = grid.step
    d = _tridiag(grid)
    m = _tridiag(grid, 12.0)
    q = grid.mass * potential + grid.centrifugal_shift
    a = (-6.0 / h**2) * (d @ m) + m @ sp.diags(q) @ m
    b = m @ sp.diags(grid.mass) @ m
    a = (0.5 * (a + a.T)).tocsc()
    b = (0.5 * (b + b.T)).tocsc()
    return a, b, m


def _dense_kernel_term(grid: RadialGrid, kernel):
    """``M (S W K W S / h) M`` for a dense kernel."""
    sw = grid.sqrt_jacobian * grid.w
    x = (sw[:, None] * kernel * sw[None, :]) / grid.step
    x = _apply_tridiag_rows(grid, x, 12.0)
    x = _apply_tridiag_rows(grid, np.ascontiguousarray(x.T), 12.0)
    return 0.5 * (x + x.T)


def _spectrum_lower_bound(grid: RadialGrid, potential, kernel):
    """A guaranteed lower bound for the pencil spectrum.

    ``-L/2`` is positive definite, so ``min(Q/P)`` bounds the local part;
    the Frobenius norm bounds the kernel's spectral radius.
    """
    lb = float(np.min(potential + grid.centrifugal_shift / grid.mass))
    if kernel is not None:
        sw = np.sqrt(grid.w)
        lb -= float(np.linalg.norm(sw[:, None] * kernel * sw[None, :]))
    return lb


def _pencil_inertia(a, b, mu) -> int:
    c = (a - mu * b).todia()
    diags = {int(o): row for o, row in zip(c.offsets, c.data)}
    n = a.shape[0]
    d0 = c.diagonal(0)
    d1 = c.diagonal(1) if 1 in diags else np.zeros(n - 1)
    d2 = c.diagonal(2) if 2 in diags else np.zeros(n - 2)
    return _kernels.banded_inertia(d0, d1, d2)


def _dense_inertia(a, b, mu) -> int:
    _, d, _ = sla.ldl(a - mu * b, lower=True, hermitian=True)
    # d is block diagonal with 1x1 and 2x2 blocks
    diag = np.diag(d)
    off = np.diag(d, -1)
    count = 0
    i = 0
    n = len(diag)
    while i < n:
        if i + 1 < n and off[i] != 0.0:
            det = diag[i] * diag[i + 1] - off[i] ** 2
            if det < 0:
                count += 1
            elif diag[i] + diag[i + 1] < 0:
                count += 2
            i += 2
        else:
            count += int(diag[i] < 0)
            i += 1
    return count


def _to_orbitals(grid, z, m):
    y = m @ z
    u = (grid.sqrt_jacobian[:, None] * y).T
    u /= np.sqrt((u * u) @ grid.w)[:, None]
    # sign convention: first clearly nonzero sample is positive
    for row in u:
        big = np.abs(row) > 1e-12 * np.max(np.abs(row))
        if row[np.argmax(big)] < 0:
            row *= -1.0
    return u


def lowest_eigenpairs(
    hamiltonian: RadialHamiltonian,
    k: int,
    shift: float | None = None,
    polish: bool = True,
    verify: bool | None = None,
):
    """Lowest ``k`` eigenpairs of ``H``.

    Parameters
    ----------
    hamiltonian : RadialHamiltonian
    k : int
        Number of levels.
    shift : float, optional
        Spectral shift for shift-invert.  Must lie below the lowest
        eigenvalue; defaults to a guaranteed lower bound.
    polish : bool
        Refine every eigenvector by a few steps of inverse iteration, which
        restores relative accuracy in the exponentially small tails.
    verify : bool, optional
        Certify via Sylvester inertia that exactly the lowest ``k`` levels
        were found.  Defaults to True for local Hamiltonians and False
        when a dense kernel is present (where it costs a dense LDL^T).

    Returns
    -------
    eigenvalues : ndarray, shape (k,)
    orbitals : OrbitalSet

    Warns
    -----
    DegeneracyWarning
        If the ``k``-th and ``k+1``-th eigenvalues differ by less than
        1e-8.
    """
    grid = hamiltonian.grid
    n = grid.n
    if not 1 <= k < n - 1:
        raise EigensolverError(f"cannot compute {k} eigenpairs on {n} nodes")
    dense = hamiltonian.kernel is not None
    if verify is None:
        verify = not dense
    a, b, m = numerov_pencil(grid, hamiltonian.potential)
    if dense:
        a = a.toarray() + _dense_kernel_term(grid, hamiltonian.kernel)
        b_op = b
        b = b.toarray()

    lb = _spectrum_lower_bound(grid, hamiltonian.potential, hamiltonian.kernel)
    sigma = lb - 1e-3 * (1.0 + abs(lb)) if shift is None else float(shift)

    want = k + 1
    if dense:
        lu = sla.lu_factor(a - sigma * b, check_finite=False)
        solve = lambda x: sla.lu_solve(lu, x, check_finite=False)  # noqa: E731
    else:
        solve = splu((a - sigma * b).tocsc()).solve
    op = LinearOperator((n, n), matvec=solve, dtype=float)
    try:
        vals, z = eigsh(
            a,
            k=want,
            M=b_op if dense else b,
            sigma=sigma,
            OPinv=op,
            which="LM",
            v0=np.ones(n),
            ncv=min(n - 1, max(4 * want + 1, 80)),
        )
    except Exception as exc:  # ARPACK reports failures through several types
        raise EigensolverError(f"Lanczos iteration failed: {exc}") from exc
    order = np.argsort(vals)
    vals, z = vals[order], z[:, order]
    if not np.all(np.isfinite(vals)):
        raise EigensolverError("non-finite eigenvalues")
    if shift is not None and vals[0] < sigma:
        raise EigensolverError(f"shift {sigma} is not below the spectrum (found {vals[0]})")

    if polish:
        z = _polish(a, b, vals[:k], z[:, :k], dense)

    if verify:
        _certify(a, b, vals, dense)

    gap = vals[k] - vals[k - 1]
    if gap < DEGENERACY_TOL:
        warnings.warn(
            f"level {k} is degenerate with level {k + 1} (gap {gap:.3e})",
            DegeneracyWarning,
            stacklevel=2,
        )
    u = _to_orbitals(grid, z[:, :k], m)
    return vals[:k].copy(), OrbitalSet(grid, u, vals[:k].copy())


def _polish(a, b, vals, z, dense, steps=3):
    out = np.empty_like(z)
    for i, e in enumerate(vals):
        mu = e - 1e-12 * (1.0 + abs(e))
        c = a - mu * b
        if dense:
            lu = sla.lu_factor(c, check_finite=False)
            solve = lambda rhs: sla.lu_solve(lu, rhs, check_finite=False)  # noqa: E731
        else:
            solve = splu(c.tocsc()).solve
        x = z[:, i]
        for _ in range(steps):
            x = solve(b @ x)
            x /= np.sqrt(x @ (b @ x))
        out[:, i] = x if x @ (b @ z[:, i]) >= 0 else -x
    return out


def _certify(a, b, vals, dense):
    inertia = _dense_inertia if dense else _pencil_inertia
    tau = 1e-9 * (1.0 + np.abs(vals))
    if inertia(a, b, vals[0] - tau[0]) != 0:
        raise EigensolverError("a lower eigenvalue was missed")
    # dense LDL^T is expensive: only certify the gap above the requested levels
    gaps = [len(vals) - 2] if dense else range(len(vals) - 1)
    for i in gaps:
        if vals[i + 1] - vals[i] <= 2 * tau[i]:
            continue
        mu = 0.5 * (vals[i] + vals[i + 1])
        count = inertia(a, b, mu)
        if count != i + 1:
            raise EigensolverError(
                f"inertia {count} between levels {i + 1} and {i + 2}; an eigenvalue was missed"
            )


# --------------------------------------------------------------------------
# Kinetic energy
# --------------------------------------------------------------------------


def _second_derivative_mapped(grid: RadialGrid, y):
    """``(12/h**2) M^-1 D y`` along the last axis."""
    n = grid.n
    d0 = _stencil(grid)
    ab = np.zeros((3, n))
    ab[0, 1:] = 1.0
    ab[1] = d0 + 12.0
    ab[2, :-1] = 1.0
    yt = np.atleast_2d(y).T
    dy = d0[:, None] * yt
    dy[1:] += yt[:-1]
    dy[:-1] += yt[1:]
    x = sla.solve_banded((1, 1), ab, dy)
    out = (12.0 / grid.step**2) * x.T
    return out.reshape(np.shape(y))


def kinetic_apply(grid: RadialGrid, u) -> np.ndarray:
    """Discrete ``-u''/2`` consistent with the eigen-solver."""
    u = grid.check(u)
    s = grid.sqrt_jacobian
    y = u / s
    ty = -0.5 * _second_derivative_mapped(grid, y) + grid.centrifugal_shift * y
    return s * ty / grid.mass


def kinetic_energy(orbitals: OrbitalSet) -> float:
    """``sum_i <u_i | T | u_i>``."""
    tu = kinetic_apply(orbitals.grid, orbitals.u)
    return float(np.sum((orbitals.u * tu) @ orbitals.grid.w))
