"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a ``criterion N PASS/FAIL`` line; the lines are also
collected in the terminal summary.
"""

import time

import numpy as np
import pytest

from xcpot.cli import parse_args, run
from xcpot.eigen import RadialHamiltonian, lowest_eigenpairs
from xcpot.exchange import exchange_matrix
from xcpot.grid import build_grid, coulomb_potential
from xcpot.harness import random_orbitals
from xcpot.objectives import (
    exchange_hole_self_energy,
    objective_elp,
    objective_kli,
    objective_slater,
)
from xcpot.oep import oep_residual, reconstruct_potential, wronskian_residual
from xcpot.orbitals import LocalPotential, OrbitalSet
from xcpot.potentials import ceda_residual, elp_potential, kli_potential, slater_potential
from xcpot.scf import ScfConfig, run_scf

from helpers import bounded_perturbation, record
from test_oep import eigen_setup, sum_over_states


def _harness_sets(grid, count=50, seed=1234):
    rng = np.random.default_rng(seed)
    return [random_orbitals(grid, int(rng.integers(2, 5)), rng) for _ in range(count)]


def test_criterion_01_hydrogenic_spectra(grid):
    worst, slowest = 0.0, 0.0
    for z in (1.0, 2.0, 3.0):
        start = time.perf_counter()
        vals, _ = lowest_eigenpairs(RadialHamiltonian(grid, -z / grid.r), 3)
        slowest = max(slowest, time.perf_counter() - start)
        exact = -(z**2) / (2.0 * np.arange(1, 4) ** 2)
        worst = max(worst, float(np.max(np.abs(vals / exact - 1.0))))
    record(1, "hydrogenic spectra", worst <= 1e-5 and slowest < 5.0,
           f"max rel err {worst:.2e}, slowest {slowest:.2f} s")


def test_criterion_02_self_interaction(scf):
    rep = scf(1, 1, "slater")
    eps_err = abs(rep.eigenvalues[0] + 0.5)
    cancel = float(np.max(np.abs(rep.hartree + rep.exchange_potential.values)))
    record(2, "exact self-interaction correction", rep.converged and eps_err <= 1e-5 and cancel <= 1e-8,
           f"|eps1+0.5| {eps_err:.2e}, |v_H+v_S| {cancel:.2e}")


def test_criterion_03_slater_bounds_and_decay():
    start = time.perf_counter()
    rep = run_scf(ScfConfig(2, 2, "slater"))
    elapsed = time.perf_counter() - start
    vs = rep.exchange_potential.values
    vh = coulomb_potential(rep.grid, rep.orbitals.density)
    slack = 1e-12 * np.max(vh)
    bounds = bool(np.all(vs <= slack) and np.all(vs >= -vh - slack))
    tail = rep.exchange_potential.tail_coefficient(0.5, 0.9)
    record(3, "Slater bounds and -1/r decay",
           rep.converged and bounds and abs(tail + 1.0) <= 0.02 and elapsed < 60.0,
           f"bounds {bounds}, c_tail {tail:.6f}, {elapsed:.1f} s")


def test_criterion_04_kli_kernel(grid):
    worst_kernel = worst_ls = 0.0
    for orb in _harness_sets(grid):
        _, sol = kli_potential(orb, gauge="raw")
        nb = orb.n_orbitals
        worst_kernel = max(worst_kernel, float(np.linalg.norm((np.eye(nb) - sol.S) @ np.ones(nb))))
        worst_ls = max(worst_ls, sol.residual / (1.0 + np.linalg.norm(sol.beta)))
    record(4, "KLI kernel structure", worst_kernel <= 1e-10 and worst_ls <= 1e-10,
           f"|(I-S)1| {worst_kernel:.2e}, scaled residual {worst_ls:.2e}")


def test_criterion_05_elp_kernel(grid):
    worst_kernel = worst_trace = worst_m = 0.0
    for orb in _harness_sets(grid):
        block = exchange_matrix(orb)
        v, sol = elp_potential(orb, block)
        nb = orb.n_orbitals
        a = sol.A.reshape(nb * nb, nb * nb)
        eye = np.eye(nb).ravel()
        worst_kernel = max(worst_kernel, float(np.linalg.norm(eye - a @ eye)))
        worst_trace = max(worst_trace, abs(float(np.trace(sol.G))))
        worst_m = max(worst_m, float(np.max(np.abs(orb.inner(v.values) - sol.M))))
    record(5, "ELP kernel structure and consistency",
           worst_kernel <= 1e-10 and worst_trace <= 1e-10 and worst_m <= 1e-8,
           f"|(I-A)I| {worst_kernel:.2e}, |Tr G| {worst_trace:.2e}, |M - <v>| {worst_m:.2e}")


def test_criterion_06_variational_minimality(grid):
    rng = np.random.default_rng(6)
    orb = random_orbitals(grid, 3, rng)
    block = exchange_matrix(orb)
    const = exchange_hole_self_energy(orb)
    v_s = slater_potential(orb, 0.0, block).values
    v_k = kli_potential(orb, block)[0].values
    v_e = elp_potential(orb, block)[0].values
    js = lambda v: objective_slater(orb, v, block, const)[1]  # noqa: E731
    jk = lambda v: objective_kli(orb, v, block)  # noqa: E731
    je = lambda v: objective_elp(orb, v, block)  # noqa: E731
    base = (js(v_s), jk(v_k), je(v_e))
    minimal = True
    for _ in range(20):
        for f, v, b in ((js, v_s, base[0]), (jk, v_k, base[1]), (je, v_e, base[2])):
            minimal &= f(v + bounded_perturbation(grid, rng)) > b
    gauge = 0.0
    for c in (-10.0, -1.0, 1.0, 10.0):
        gauge = max(gauge, abs(jk(v_k + c) / base[1] - 1.0), abs(je(v_e + c) / base[2] - 1.0))
    record(6, "variational minimality and gauge invariance", bool(minimal) and gauge <= 1e-10,
           f"60 perturbations strict {bool(minimal)}, max gauge change {gauge:.2e}")


def test_criterion_07_ceda_is_elp(scf):
    rep = scf(2, 2, "elp")
    vxw = LocalPotential(rep.grid, rep.exchange_part)
    res = float(np.max(np.abs(ceda_residual(rep.orbitals, vxw, rep.exchange))))
    tol = 10 * rep.config.tol_density
    record(7, "CEDA equation at the ELP fixed point", rep.converged and res <= tol,
           f"max residual {res:.2e} <= {tol:.0e}")


@pytest.mark.slow
def test_criterion_08_energy_ordering(scf):
    margins, converged = [], True
    for z in (2, 3):
        hf = scf(z, 2, "hf")
        converged &= hf.converged
        for method in ("slater", "kli", "elp"):
            rep = scf(z, 2, method)
            converged &= rep.converged
            margins.append(rep.energy.total - hf.energy.total)
    worst = min(margins)
    record(8, "Hartree-Fock energy is lowest", converged and worst >= -1e-6,
           f"min E_local - E_hf {worst:.3e}")


def test_criterion_09_oep_residual(scf, grid):
    w, orb = eigen_setup(grid, 2)
    v0 = 0.3 * np.exp(-grid.r)
    local = oep_residual(orb, LocalPotential(grid, w), LocalPotential(grid, v0), lambda u: v0 * u).norm

    worst_int = 0.0
    for z in (2, 3):
        for method in ("slater", "kli", "elp"):
            rep = scf(z, 2, method)
            res = oep_residual(rep.orbitals, rep.potential, LocalPotential(rep.grid, rep.exchange_part),
                               rep.exchange)
            worst_int = max(worst_int, abs(res.integral) / res.norm)

    worst_sos = 0.0
    for kind in ("log", "uniform"):
        small = build_grid(64, r_max=20.0, kind=kind, r_min=1e-3)
        ws, orbs = eigen_setup(small, 2)
        block = exchange_matrix(orbs)
        vs = slater_potential(orbs, 0.0, block)
        res = oep_residual(orbs, LocalPotential(small, ws), vs, block)
        oracle = sum_over_states(small, ws, 2, block.apply, vs.values)
        worst_sos = max(worst_sos, float(np.max(np.abs(res.values - oracle))))
    record(9, "OEP residual sanity", local <= 1e-10 and worst_int <= 1e-8 and worst_sos <= 1e-8,
           f"local {local:.2e}, int/norm {worst_int:.2e}, sum-over-states {worst_sos:.2e}")


def test_criterion_10_reconstruction(grid):
    w, orb = eigen_setup(grid, 3)
    rec = reconstruct_potential(orb)
    interior = (grid.r >= 0.01) & (grid.r <= 0.9 * grid.r_max)
    rec_err = float(np.max(np.abs(rec.values - (w - orb.eigenvalues[0]))[interior]))
    common = float(np.max(wronskian_residual(orb)))
    e1, one = lowest_eigenpairs(RadialHamiltonian(grid, -1.0 / grid.r), 1)
    e2, two = lowest_eigenpairs(RadialHamiltonian(grid, -2.0 / grid.r), 2)
    second = two.u[1] - np.sum(grid.w * two.u[1] * one.u[0]) * one.u[0]
    second /= np.sqrt(np.sum(grid.w * second**2))
    mixed = OrbitalSet(grid, np.array([one.u[0], second]), np.array([e1[0], e2[1]]))
    mixed_res = float(wronskian_residual(mixed)[0])
    record(10, "potential reconstruction and Wronskian test",
           rec_err <= 1e-4 and common < 1e-6 and mixed_res > 1e-2,
           f"reconstruction {rec_err:.2e}, common {common:.2e}, mixed {mixed_res:.2e}")


def test_criterion_11_determinism(tmp_path, monkeypatch):
    monkeypatch.delenv("XCPOT_GRID_N", raising=False)
    argv = ["--Z", "2", "--N", "2", "--method", "kli", "--diagnostics"]
    outs = [tmp_path / "first", tmp_path / "second"]
    codes = [run(parse_args(argv + ["--out", str(d)])) for d in outs]
    names = ("summary.json", "potential.csv", "orbitals.csv", "diagnostics.json")
    same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    record(11, "byte-identical outputs", codes == [0, 0] and same, f"exit codes {codes}, identical {same}")
