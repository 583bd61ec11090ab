"""Self-consistent field drivers.

``scf_hartree_fock`` iterates the Fock equations with the dense exchange
kernel.  ``scf_local`` iterates a local exchange model (Slater, KLI or
ELP); the Slater model walks the regularisation schedule ``eta`` down to
zero with warm starts, the regularised problem being

    (-1/2 d^2 - (Z+eta)/r + V_H + v_S^eta) u_i = eps_i u_i,
    v_S^eta = -sum_ij u_i u_j V_ij / (rho + 4 pi r^2 eta).

Both drivers use damped fixed-point iteration (on the local potential,
or on the density matrix for Hartree-Fock) and stop on the L1 change of
the density between successive iterations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .eigen import RadialHamiltonian, lowest_eigenpairs
from .energetics import EnergyBreakdown, hf_energy
from .errors import EigensolverError, ShapeError
from .exchange import ExchangeBlock, exchange_matrix
from .grid import DEFAULT_RMAX, DEFAULT_RMIN, RadialGrid, build_grid, coulomb_potential, integrate
from .orbitals import LocalPotential, OrbitalSet
from .potentials import elp_potential, kli_potential, slater_potential

log = logging.getLogger(__name__)

METHODS = ("hf", "slater", "kli", "elp")
DEFAULT_ETA_SCHEDULE = (1e-1, 1e-2, 1e-3, 0.0)
DEFAULT_GAUGE = {"kli": "homo", "elp": "trace"}
VALID_GAUGES = {"hf": ("homo", "trace", "raw"), "slater": ("homo", "trace", "raw"),
                "kli": ("homo", "raw"), "elp": ("trace", "raw")}


@dataclass(frozen=True)
class ScfConfig:
    """Parameters of one self-consistent calculation.

    Attributes
    ----------
    Z : float
        Nuclear charge.
    N : int
        Number of (same-spin, s-type) electrons, ``1 <= N <= Z``.
    method : {"hf", "slater", "kli", "elp"}
    theta : float
        Mixing parameter in ``(0, 1]``.
    max_iter : int
        Iteration cap per stage of the ``eta`` schedule.
    tol_density : float
        Convergence threshold on ``int |rho_new - rho_old|``.
    eta_schedule : tuple of float
        Strictly decreasing, ending at 0.  Only the Slater model uses the
        intermediate values; the other methods run the final stage only.
    gauge : str, optional
        Constant-fixing convention for KLI (``homo``/``raw``) or ELP
        (``trace``/``raw``).
    """

    Z: float
    N: int
    method: str = "slater"
    theta: float = 0.3
    max_iter: int = 300
    tol_density: float = 1e-8
    eta_schedule: tuple = DEFAULT_ETA_SCHEDULE
    grid_n: int | None = None
    r_max: float = DEFAULT_RMAX
    r_min: float = DEFAULT_RMIN
    grid_kind: str = "log"
    gauge: str | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.Z >= self.N:
            raise ValueError(f"need Z >= N (got Z={self.Z}, N={self.N})")
        if not 0 < self.theta <= 1:
            raise ValueError(f"mixing theta must lie in (0, 1], got {self.theta}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not self.tol_density > 0:
            raise ValueError("tol_density must be positive")
        eta = tuple(float(e) for e in self.eta_schedule)
        if not eta or eta[-1] != 0.0 or any(a <= b for a, b in zip(eta, eta[1:])) or eta[0] < 0:
            raise ValueError(f"eta schedule must be strictly decreasing and end at 0, got {eta}")
        object.__setattr__(self, "eta_schedule", eta)
        gauge = self.gauge if self.gauge is not None else DEFAULT_GAUGE.get(self.method)
        if gauge is not None and gauge not in VALID_GAUGES[self.method]:
            raise ValueError(
                f"gauge {gauge!r} is not available for {self.method}; "
                f"choose from {', '.join(VALID_GAUGES[self.method])}"
            )
        object.__setattr__(self, "gauge", gauge)

    def make_grid(self) -> RadialGrid:
        return build_grid(self.grid_n, self.r_max, self.grid_kind, self.r_min)


@dataclass(frozen=True, eq=False)
class StageRecord:
    eta: float
    iterations: int
    converged: bool


@dataclass(eq=False)
class ScfReport:
    """Outcome of an SCF run.

    ``potential`` is the total local potential ``W`` whose eigenfunctions
    are ``orbitals`` (``V_nuc + V_H`` for Hartree-Fock, whose exchange is
    in ``exchange``).  ``exchange_potential`` is the local exchange model
    evaluated at the final orbitals (``None`` for Hartree-Fock).
    """

    config: ScfConfig
    converged: bool
    iterations: int
    orbitals: OrbitalSet
    eigenvalues: np.ndarray
    energy: EnergyBreakdown
    history: list
    gap: float
    potential: LocalPotential
    nuclear: np.ndarray
    hartree: np.ndarray
    exchange: ExchangeBlock
    exchange_potential: LocalPotential | None = None
    stages: list = field(default_factory=list)
    message: str = ""

    @property
    def grid(self) -> RadialGrid:
        return self.orbitals.grid

    @property
    def exchange_part(self) -> np.ndarray:
        """``W - V_nuc - V_H[rho]``, the exchange part of the Hamiltonian."""
        return self.potential.values - self.nuclear - self.hartree


def mix(previous, new, theta):
    """Damped update ``(1 - theta) * previous + theta * new``."""
    if isinstance(new, LocalPotential):
        prev = previous.values if isinstance(previous, LocalPotential) else np.asarray(previous)
        if prev.shape != new.values.shape:
            raise ShapeError(f"cannot mix shapes {prev.shape} and {new.values.shape}")
        return LocalPotential(new.grid, (1.0 - theta) * prev + theta * new.values, new.gauge)
    previous = np.asarray(previous, dtype=float)
    new = np.asarray(new, dtype=float)
    if previous.shape != new.shape:
        raise ShapeError(f"cannot mix shapes {previous.shape} and {new.shape}")
    if theta == 1:
        return new.copy()
    return (1.0 - theta) * previous + theta * new


def _l1(grid, a, b):
    return float(integrate(grid, np.abs(a - b)))


def _oscillating(history, window=8):
    """True if the residual went up in at least half of the recent steps."""
    tail = history[-window:]
    if len(tail) < window:
        return False
    ups = sum(b > a for a, b in zip(tail, tail[1:]))
    return ups >= window // 2 and tail[-1] > 0.5 * tail[0]


def _status_message(converged, history, max_iter):
    if converged:
        return "converged"
    msg = f"not converged after {max_iter} iterations"
    if history and not np.isfinite(history[-1]):
        return msg + "; the iteration diverged, try a smaller mixing parameter"
    if _oscillating(history):
        msg += "; oscillation detected, try a smaller mixing parameter"
    return msg


# --------------------------------------------------------------------------
# Local exchange models
# --------------------------------------------------------------------------


def local_exchange(method, orbitals, eta=0.0, gauge=None, block=None) -> LocalPotential:
    """Evaluate the local exchange model ``method`` at ``orbitals``."""
    block = exchange_matrix(orbitals) if block is None else block
    if method == "slater":
        return slater_potential(orbitals, eta, block)
    if eta != 0.0:
        raise ValueError("only the Slater model is regularised")
    if method == "kli":
        return kli_potential(orbitals, block, gauge or "homo")[0]
    if method == "elp":
        return elp_potential(orbitals, block, gauge or "trace")[0]
    raise ValueError(f"no local exchange model for method {method!r}")


def _solve(grid, potential, count, kernel=None, polish=True, verify=None, guess=None):
    """Diagonalise, shifting just below a previous lowest level when known."""
    ham = RadialHamiltonian(grid, potential, kernel)
    if verify is None:
        verify = kernel is None
    if guess is not None:
        shift = guess - 0.1 * (1.0 + abs(guess))
        try:
            return lowest_eigenpairs(ham, count, shift=shift, polish=polish, verify=verify)
        except EigensolverError:
            log.debug("shift %g rejected, falling back to the spectral bound", shift)
    return lowest_eigenpairs(ham, count, polish=polish, verify=verify)


def scf_local(cfg: ScfConfig, callback=None) -> ScfReport:
    """Self-consistent Slater, KLI or ELP calculation.

    Parameters
    ----------
    cfg : ScfConfig
    callback : callable, optional
        Called as ``callback(stage_eta, iteration, residual)``.
    """
    if cfg.method == "hf":
        raise ValueError("use scf_hartree_fock for method 'hf'")
    grid = cfg.make_grid()
    r = grid.r
    n_el = cfg.N
    stages_eta = cfg.eta_schedule if cfg.method == "slater" else (0.0,)

    history, stages = [], []
    w_in = -(cfg.Z + stages_eta[0]) / r
    eps = occ = None
    all_converged = True
    total_iter = 0
    for eta in stages_eta:
        v_nuc = -(cfg.Z + eta) / r
        if occ is not None:
            # warm start: rebuild the potential from the previous orbitals
            vx = local_exchange(cfg.method, occ, eta, cfg.gauge)
            w_in = v_nuc + coulomb_potential(grid, occ.density) + vx.values
        rho_prev = None
        converged = False
        it = 0
        for it in range(1, cfg.max_iter + 1):
            eps, orb = _solve(grid, w_in, n_el + 2, guess=None if eps is None else eps[0])
            occ = orb.take(n_el)
            rho = occ.density
            res = np.inf if rho_prev is None else _l1(grid, rho, rho_prev)
            if rho_prev is not None:
                history.append(res)
            if callback is not None:
                callback(eta, it, res)
            if res <= cfg.tol_density:
                converged = True
                break
            if not np.isfinite(res) and rho_prev is not None:
                break
            vx = local_exchange(cfg.method, occ, eta, cfg.gauge)
            w_out = v_nuc + coulomb_potential(grid, rho) + vx.values
            w_in = mix(w_in, w_out, cfg.theta)
            rho_prev = rho
        total_iter += it
        stages.append(StageRecord(eta=eta, iterations=it, converged=converged))
        log.info("eta=%g: %d iterations, converged=%s", eta, it, converged)
        all_converged = converged
        if not converged:
            break

    # One unmixed update so that the reported orbitals are eigenfunctions
    # of the potential generated by (almost) themselves.
    eta = stages[-1].eta
    v_nuc = -(cfg.Z + eta) / r
    block = exchange_matrix(occ)
    vx = local_exchange(cfg.method, occ, eta, cfg.gauge, block)
    w_fin = v_nuc + coulomb_potential(grid, occ.density) + vx.values
    eps, orb = _solve(grid, w_fin, n_el + 2, guess=eps[0])
    occ = orb.take(n_el)
    block = exchange_matrix(occ)
    vx = local_exchange(cfg.method, occ, eta, cfg.gauge, block)
    energy = hf_energy(occ, cfg.Z, block)
    return ScfReport(
        config=cfg,
        converged=all_converged,
        iterations=total_iter,
        orbitals=occ,
        eigenvalues=eps,
        energy=energy,
        history=history,
        gap=float(eps[n_el] - eps[n_el - 1]),
        potential=LocalPotential(grid, w_fin),
        nuclear=v_nuc,
        hartree=coulomb_potential(grid, occ.density),
        exchange=block,
        exchange_potential=vx,
        stages=stages,
        message=_status_message(all_converged, history, cfg.max_iter),
    )


# --------------------------------------------------------------------------
# Hartree-Fock
# --------------------------------------------------------------------------


def _fock_solve(grid, z, gamma, count, polish=False, guess=None):
    rho = np.diag(gamma).copy()
    v_h = coulomb_potential(grid, rho)
    kernel = _kernels.exchange_kernel(gamma, grid.r, grid.kernel_diag)
    return _solve(grid, -z / grid.r + v_h, count, kernel, polish=polish, verify=polish, guess=guess)


def scf_hartree_fock(cfg: ScfConfig, callback=None) -> ScfReport:
    """Restricted radial Hartree-Fock for ``N`` same-spin s electrons.

    The density matrix is mixed; each iteration diagonalises the dense
    Fock matrix for ``N + 2`` levels and occupies the lowest ``N``.
    """
    if cfg.method != "hf":
        cfg = replace(cfg, method="hf", gauge=None)
    grid = cfg.make_grid()
    r = grid.r
    n_el = cfg.N
    _, start = _solve(grid, -cfg.Z / r, n_el)
    gamma = start.density_matrix()
    rho_prev = start.density
    guess = float(start.eigenvalues[0])
    history = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        eps, orb = _fock_solve(grid, cfg.Z, gamma, n_el + 2, guess=guess)
        guess = eps[0]
        occ = orb.take(n_el)
        rho = occ.density
        res = _l1(grid, rho, rho_prev)
        history.append(res)
        if callback is not None:
            callback(0.0, it, res)
        if res <= cfg.tol_density:
            converged = True
            break
        if not np.isfinite(res):
            break
        gamma = mix(gamma, occ.density_matrix(), cfg.theta)
        rho_prev = rho

    # final unmixed, polished and certified diagonalisation
    eps, orb = _fock_solve(grid, cfg.Z, occ.density_matrix(), n_el + 2, polish=True, guess=guess)
    occ = orb.take(n_el)
    block = exchange_matrix(occ)
    v_h = coulomb_potential(grid, occ.density)
    return ScfReport(
        config=cfg,
        converged=converged,
        iterations=it,
        orbitals=occ,
        eigenvalues=eps,
        energy=hf_energy(occ, cfg.Z, block),
        history=history,
        gap=float(eps[n_el] - eps[n_el - 1]),
        potential=LocalPotential(grid, -cfg.Z / r + v_h),
        nuclear=-cfg.Z / r,
        hartree=v_h,
        exchange=block,
        exchange_potential=None,
        stages=[StageRecord(eta=0.0, iterations=it, converged=converged)],
        message=_status_message(converged, history, cfg.max_iter),
    )


def run_scf(cfg: ScfConfig, callback=None) -> ScfReport:
    """Dispatch on ``cfg.method``."""
    if cfg.method == "hf":
        return scf_hartree_fock(cfg, callback)
    return scf_local(cfg, callback)
