import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xcpot.errors import DegenerateDensityError
from xcpot.exchange import exchange_apply, exchange_kernel_matrix, exchange_matrix
from xcpot.grid import build_grid, coulomb_potential, integrate
from xcpot.harness import hydrogenic_orbitals, random_orbitals

from helpers import disjoint_orbitals


@pytest.mark.parametrize("z", [1.0, 2.0, 3.0])
def test_hydrogenic_self_exchange(grid, z):
    orb = hydrogenic_orbitals(grid, z, 1)
    k11 = exchange_matrix(orb).matrix[0, 0]
    assert abs(k11 + 5.0 * z / 8.0) < 1e-5
    direct = integrate(grid, orb.u[0] * exchange_apply(orb, orb.u[0]))
    assert direct == pytest.approx(k11, abs=1e-12)


def test_zero_input(grid, rng):
    orb = random_orbitals(grid, 2, rng)
    assert np.all(exchange_apply(orb, np.zeros(grid.n)) == 0.0)


def test_matches_dense_kernel(small_grid, rng):
    g = small_grid
    orb = random_orbitals(g, 3, rng)
    dense = exchange_kernel_matrix(orb)
    f = rng.standard_normal((4, g.n))
    np.testing.assert_allclose(exchange_apply(orb, f), (f * g.w) @ dense, rtol=1e-11, atol=1e-13)
    weighted = np.sqrt(g.w)[:, None] * dense * np.sqrt(g.w)[None, :]
    assert np.max(np.linalg.eigvalsh(weighted)) < 1e-12


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_symmetric_and_nonpositive(seed, count):
    g = build_grid(300, r_max=30.0)
    rng = np.random.default_rng(seed)
    orb = random_orbitals(g, count, rng)
    a, b = rng.standard_normal((2, g.n)) * np.exp(-0.2 * g.r)
    ka, kb = exchange_apply(orb, np.array([a, b]))
    lhs, rhs = integrate(g, b * ka), integrate(g, a * kb)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
    assert integrate(g, a * ka) <= 1e-14
    k = exchange_matrix(orb).matrix
    np.testing.assert_allclose(k, k.T, atol=1e-12)
    assert np.all(np.diag(k) <= 0)


def test_disjoint_orbitals_do_not_exchange():
    g = build_grid(600, r_max=20.0, kind="uniform")
    orb = disjoint_orbitals(g, [(0.5, 3.0), (6.0, 10.0)])
    k = exchange_matrix(orb).matrix
    assert k[0, 1] == 0.0 and k[1, 0] == 0.0
    assert k[0, 0] < 0 and k[1, 1] < 0
