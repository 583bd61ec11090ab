"""Hartree-Fock energy of a radial orbital set and a-priori bounds."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .eigen import kinetic_energy
from .errors import InvariantBreach
from .exchange import ExchangeBlock, exchange_matrix
from .grid import coulomb_potential, integrate
from .orbitals import OrbitalSet


@dataclass(frozen=True)
class EnergyBreakdown:
    """Components of the Hartree-Fock energy (hartree)."""

    kinetic: float
    nuclear: float
    hartree: float
    exchange: float

    @property
    def total(self) -> float:
        return self.kinetic + self.nuclear + self.hartree + self.exchange

    def as_dict(self) -> dict:
        out = asdict(self)
        out["total"] = self.total
        return out

    def check(self, tol=1e-10):
        """Raise :class:`InvariantBreach` if a sign condition fails."""
        scale = max(1.0, abs(self.hartree))
        if self.kinetic < 0:
            raise InvariantBreach(f"negative kinetic energy {self.kinetic}")
        if self.hartree < 0:
            raise InvariantBreach(f"negative Hartree energy {self.hartree}")
        if self.exchange > tol * scale:
            raise InvariantBreach(f"positive exchange energy {self.exchange}")
        if self.hartree + self.exchange < -tol * scale:
            raise InvariantBreach("exchange exceeds Hartree energy in magnitude")
        return self


def hf_energy(orbitals: OrbitalSet, z: float, block: ExchangeBlock | None = None) -> EnergyBreakdown:
    """``E = T + E_ne + J + X`` for the orbitals in a nucleus of charge ``z``."""
    grid = orbitals.grid
    rho = orbitals.density
    if block is None:
        block = exchange_matrix(orbitals)
    t = kinetic_energy(orbitals)
    e_ne = -z * float(integrate(grid, rho / grid.r))
    j = 0.5 * float(integrate(grid, rho * coulomb_potential(grid, rho)))
    x = 0.5 * float(np.trace(block.matrix))
    return EnergyBreakdown(kinetic=t, nuclear=e_ne, hartree=j, exchange=x)


@dataclass(frozen=True)
class BoundReport:
    """Margins (right side minus left side) of the a-priori inequalities.

    ``nuclear``: ``N^(1/2) (2T)^(1/2) - int rho / r``.
    ``exchange_hartree``: ``D_H - D_x`` with ``D`` the Coulomb double
    integrals of ``rho`` and ``|gamma|^2``.
    ``hartree_kinetic``: ``N^(3/2) (2T)^(1/2) - D_H``.
    """

    nuclear: float
    exchange_hartree: float
    hartree_kinetic: float
    ok: bool

    def as_dict(self) -> dict:
        return asdict(self)


def bound_checks(orbitals: OrbitalSet, z: float = 1.0, rtol: float = 1e-8, strict=False) -> BoundReport:
    """Evaluate the kinetic-energy bounds on the Coulomb terms.

    Slack of ``rtol`` (relative) is allowed because the first bound is
    saturated by the hydrogen ground state.  With ``strict`` a violation
    raises :class:`InvariantBreach`.  ``z`` only enters through the
    energies and is accepted for symmetry with :func:`hf_energy`.
    """
    grid = orbitals.grid
    rho = orbitals.density
    n_el = float(integrate(grid, rho))
    t2 = 2.0 * kinetic_energy(orbitals)
    lhs_ne = float(integrate(grid, rho / grid.r))
    d_h = float(integrate(grid, rho * coulomb_potential(grid, rho)))
    d_x = -float(np.trace(exchange_matrix(orbitals).matrix))
    root = np.sqrt(max(t2, 0.0))
    margins = (
        np.sqrt(n_el) * root - lhs_ne,
        d_h - d_x,
        n_el**1.5 * root - d_h,
    )
    scales = (lhs_ne, d_h, d_h)
    ok = all(m >= -rtol * max(1.0, abs(s)) for m, s in zip(margins, scales))
    rep = BoundReport(*(float(m) for m in margins), ok=bool(ok))
    if strict and not ok:
        raise InvariantBreach(f"a-priori bound violated: {rep}")
    return rep
