import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xcpot.exchange import exchange_matrix
from xcpot.grid import build_grid
from xcpot.harness import hydrogenic_orbitals, random_orbitals
from xcpot.objectives import (
    exchange_hole_self_energy,
    objective_elp,
    objective_kli,
    objective_slater,
)
from xcpot.potentials import elp_potential, kli_potential, slater_potential

from helpers import bounded_perturbation, quadratic_model


@pytest.fixture(scope="module")
def setup(grid):
    orb = random_orbitals(grid, 3, np.random.default_rng(7))
    block = exchange_matrix(orb)
    return orb, block, exchange_hole_self_energy(orb)


def test_slater_minimality(setup, rng):
    orb, block, const = setup
    vs = slater_potential(orb, 0.0, block).values
    base = objective_slater(orb, vs, block, const)[1]
    for _ in range(20):
        delta = bounded_perturbation(orb.grid, rng)
        assert objective_slater(orb, vs + delta, block, const)[1] > base
    for c in (-1.0, 0.1, 10.0):
        assert objective_slater(orb, vs + c, block, const)[1] > base


@pytest.mark.parametrize("name", ["kli", "elp"])
def test_kli_elp_minimality(setup, rng, name):
    orb, block, _ = setup
    objective, builder = {"kli": (objective_kli, kli_potential), "elp": (objective_elp, elp_potential)}[name]
    v = builder(orb, block)[0].values
    base = objective(orb, v, block)
    for _ in range(20):
        delta = bounded_perturbation(orb.grid, rng)
        assert objective(orb, v + delta, block) > base
    for c in (-10.0, -1.0, 1.0, 10.0):
        assert objective(orb, v + c, block) == pytest.approx(base, rel=1e-10)


def test_objectives_nonnegative(setup, rng):
    orb, block, const = setup
    for _ in range(5):
        v = bounded_perturbation(orb.grid, rng, amplitude=1.0)
        i_s, j_s = objective_slater(orb, v, block, const)
        assert i_s >= 0 and j_s >= 0
        assert objective_kli(orb, v, block) >= 0
        assert objective_elp(orb, v, block) >= 0


def test_elp_objective_ordering(setup):
    orb, block, _ = setup
    v_s = slater_potential(orb, 0.0, block)
    v_k = kli_potential(orb, block)[0]
    v_e = elp_potential(orb, block)[0]
    values = [objective_elp(orb, v, block) for v in (v_e, v_k, v_s)]
    assert values[0] <= values[1] <= values[2]


def test_single_orbital_exact_cancellation(grid):
    orb = hydrogenic_orbitals(grid, 1.0, 1)
    block = exchange_matrix(orb)
    v = -block.pair_potentials[0, 0]
    i_s, j_s = objective_slater(orb, v, block)
    assert i_s == pytest.approx(0.0, abs=1e-20)
    assert j_s > 0  # the 1/|r-r'|^2 self energy of the hole survives
    assert objective_slater(orb, v + 0.2, block)[1] > j_s


def test_slater_objective_is_quadratic(setup, rng):
    orb, block, const = setup
    vs = slater_potential(orb, 0.0, block).values
    delta = bounded_perturbation(orb.grid, rng)
    vals = [objective_slater(orb, vs + t * delta, block, const)[1] for t in (0.0, 1.0, 2.0)]
    base = vals[0]
    # at the minimum J(t) = J0 + a t^2
    assert vals[2] - base == pytest.approx(4.0 * (vals[1] - base), rel=1e-6)


@pytest.mark.parametrize("name", ["slater", "kli", "elp"])
def test_structured_minimiser_matches_brute_force(small_grid, name):
    orb = random_orbitals(small_grid, 2, np.random.default_rng(3))
    block = exchange_matrix(orb)
    g = small_grid
    if name == "slater":
        const = exchange_hole_self_energy(orb)
        objective = lambda v: objective_slater(orb, v, block, const)[1]  # noqa: E731
        target = slater_potential(orb, 0.0, block).values
    elif name == "kli":
        objective = lambda v: objective_kli(orb, v, block)  # noqa: E731
        target = kli_potential(orb, block)[0].values
    else:
        objective = lambda v: objective_elp(orb, v, block)  # noqa: E731
        target = elp_potential(orb, block)[0].values
    scales = 1.0 / np.sqrt(g.w * orb.density)
    hess, grad, _ = quadratic_model(objective, g.n, scales)
    y = np.linalg.lstsq(hess, -grad, rcond=1e-10)[0]
    brute = scales * y
    mask = g.w * orb.density > 1e-12 * np.max(g.w * orb.density)
    diff = (brute - target)[mask]
    if name != "slater":
        # minimisers are unique up to a constant
        weights = (g.w * orb.density)[mask]
        diff = diff - np.sum(weights * diff) / np.sum(weights)
    assert np.max(np.abs(diff)) < 1e-8


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.sampled_from([-10.0, -1.0, 1.0, 10.0]))
def test_gauge_invariance_property(seed, count, c):
    g = build_grid(300, r_max=30.0)
    rng = np.random.default_rng(seed)
    orb = random_orbitals(g, count, rng)
    block = exchange_matrix(orb)
    v = bounded_perturbation(g, rng, amplitude=0.5)
    for objective in (objective_kli, objective_elp):
        assert objective(orb, v + c, block) == pytest.approx(objective(orb, v, block), rel=1e-10)
