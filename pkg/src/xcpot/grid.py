"""Radial grids, quadrature and the spherical Coulomb kernel.

Functions are sampled on a strictly increasing set of nodes ``r_k > 0``
and integrated with the nodal weights ``w_k``.  Both supported grids are
uniform in a mapped coordinate ``x`` with step ``step``:

``log``
    ``r = exp(x)``.  The first weight absorbs the geometric tail down to
    the origin, so integrands decaying like ``r**p`` near zero are
    handled to high order.
``uniform``
    ``r = x``, starting one step from the origin.

Both grids close the domain with a Dirichlet node one step past
``r_max``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import GridParameterError, ShapeError

DEFAULT_N = 2000
DEFAULT_RMAX = 50.0
DEFAULT_RMIN = 1e-5
GRID_ENV = "XCPOT_GRID_N"


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Immutable radial grid.

    Attributes
    ----------
    r : ndarray
        Nodes, strictly increasing and positive.
    w : ndarray
        Positive quadrature weights.
    kind : str
        ``"log"`` or ``"uniform"``.
    step : float
        Spacing in the mapped coordinate.
    """

    r: np.ndarray
    w: np.ndarray
    kind: str
    step: float

    def __post_init__(self):
        for a in (self.r, self.w):
            a.setflags(write=False)

    @property
    def n(self) -> int:
        return self.r.shape[0]

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    # Mapped-coordinate data shared by the eigen-solver and the kernels.
    @cached_property
    def jacobian(self) -> np.ndarray:
        """``dr/dx`` at the nodes."""
        return self.r.copy() if self.kind == "log" else np.ones(self.n)

    @cached_property
    def sqrt_jacobian(self) -> np.ndarray:
        return np.sqrt(self.jacobian)

    @cached_property
    def mass(self) -> np.ndarray:
        """Diagonal metric of the mapped eigenproblem, ``w * jac / step``."""
        return self.w * self.jacobian / self.step

    @property
    def centrifugal_shift(self) -> float:
        """Constant produced by the Liouville transform to the ``x`` variable."""
        return 0.125 if self.kind == "log" else 0.0

    @property
    def origin_ratio(self) -> float:
        """Ghost-node ratio ``y_0 / y_1`` enforcing ``u ~ r`` at the origin."""
        return float(np.exp(-0.5 * self.step)) if self.kind == "log" else 0.0

    @cached_property
    def kernel_diag_corr(self) -> np.ndarray:
        """Kink correction of the ``1/max`` kernel divided by the weight.

        The Coulomb integrand has a slope jump at ``r' = r``; the
        Euler-Maclaurin correction of the trapezoid rule for that jump is
        ``step**2 / 12 * (jac/r)**2`` times the integrand value.
        """
        c = self.step**2 / 12.0 * (self.jacobian / self.r) ** 2
        return c / self.w

    @cached_property
    def kernel_diag(self) -> np.ndarray:
        """Diagonal of the corrected Coulomb kernel ``G``."""
        return 1.0 / self.r - self.kernel_diag_corr

    @cached_property
    def log_kernel_diag(self) -> np.ndarray:
        """Cell-averaged diagonal of ``ln((r+r')/|r-r'|) / (2 r r')``."""
        h = self.step * self.jacobian
        return (1.0 + np.log(4.0 * self.r / h)) / (2.0 * self.r**2)

    def check(self, f, name="f") -> np.ndarray:
        """Return ``f`` as an array whose last axis matches the grid."""
        f = np.asarray(f, dtype=float)
        if f.ndim == 0 or f.shape[-1] != self.n:
            raise ShapeError(f"{name} has shape {f.shape}, grid has {self.n} nodes")
        return f


def build_grid(n=None, r_max=DEFAULT_RMAX, kind="log", r_min=DEFAULT_RMIN) -> RadialGrid:
    """Construct a radial grid.

    Parameters
    ----------
    n : int, optional
        Number of nodes. Defaults to ``$XCPOT_GRID_N`` or 2000.
    r_max : float
        Outermost node.
    kind : {"log", "uniform"}
    r_min : float
        First node of a log grid (ignored for uniform grids).

    Examples
    --------
    >>> g = build_grid(4, 4.0, "uniform")
    >>> g.r.tolist(), g.w.tolist()
    ([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0, 1.0])
    """
    if n is None:
        n = default_grid_size()
    if isinstance(n, bool) or int(n) != n or n < 4:
        raise GridParameterError(f"grid size must be an integer >= 4, got {n!r}")
    n = int(n)
    if not np.isfinite(r_max) or r_max <= 0:
        raise GridParameterError(f"r_max must be positive, got {r_max!r}")
    if kind == "log":
        if not (0 < r_min < r_max):
            raise GridParameterError(f"need 0 < r_min < r_max, got {r_min!r}")
        x = np.linspace(np.log(r_min), np.log(r_max), n)
        step = float(x[1] - x[0])
        r = np.exp(x)
        r[-1] = r_max
        w = step * r
        # geometric continuation of the nodes down to r = 0
        w[0] = step * r[0] / (-np.expm1(-step))
    elif kind == "uniform":
        step = r_max / n
        r = step * np.arange(1, n + 1)
        w = np.full(n, step)
    else:
        raise GridParameterError(f"unknown grid kind {kind!r}")
    return RadialGrid(r=r, w=w, kind=kind, step=step)


def default_grid_size() -> int:
    raw = os.environ.get(GRID_ENV)
    if raw is None or not raw.strip():
        return DEFAULT_N
    try:
        return int(raw)
    except ValueError as exc:
        raise GridParameterError(f"{GRID_ENV}={raw!r} is not an integer") from exc


def integrate(grid: RadialGrid, f) -> float | np.ndarray:
    """Quadrature ``sum_k w_k f_k`` along the last axis."""
    f = grid.check(f)
    return f @ grid.w


def coulomb_potential(grid: RadialGrid, f) -> np.ndarray:
    """Spherical Coulomb potential of one or more line densities.

    ``V(r) = int f(r') / max(r, r') dr'``, evaluated in O(n) with prefix
    sums.  ``f`` may be 1-D or a stack of rows.
    """
    f = grid.check(f)
    out = _kernels.coulomb_potentials(f * grid.w, grid.r, grid.kernel_diag_corr)
    return out[0] if f.ndim == 1 else out.reshape(f.shape)


def radial_coulomb(grid: RadialGrid, f, g) -> float:
    """Coulomb pair integral ``int int f(r) g(r') / max(r, r') dr dr'``."""
    g = grid.check(g, "g")
    return float(integrate(grid, g * coulomb_potential(grid, f)))


def coulomb_matrix(grid: RadialGrid) -> np.ndarray:
    """Dense corrected kernel ``G`` (for small grids and testing)."""
    g = 1.0 / np.maximum.outer(grid.r, grid.r)
    np.fill_diagonal(g, grid.kernel_diag)
    return g
