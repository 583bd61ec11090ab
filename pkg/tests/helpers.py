"""Test-only utilities shared by several modules."""

import numpy as np

from xcpot.orbitals import OrbitalSet


def bounded_perturbation(grid, rng, amplitude=0.1, terms=4):
    """Smooth random function bounded by ``amplitude * terms``."""
    out = np.zeros(grid.n)
    for _ in range(terms):
        centre = rng.uniform(0.1, 6.0)
        width = rng.uniform(0.2, 2.0)
        out += amplitude * rng.uniform(-1, 1) * np.exp(-(((grid.r - centre) / width) ** 2))
    return out


def disjoint_orbitals(grid, intervals):
    """Normalised ``sin^2`` bumps supported on non-overlapping intervals."""
    rows = []
    for lo, hi in intervals:
        inside = (grid.r > lo) & (grid.r < hi)
        bump = np.where(inside, np.sin(np.pi * (grid.r - lo) / (hi - lo)) ** 2, 0.0)
        rows.append(bump / np.sqrt(np.sum(grid.w * bump**2)))
    return OrbitalSet(grid, np.array(rows))


def quadratic_model(objective, size, scales):
    """Hessian and gradient at 0 of a quadratic ``objective`` by polarisation.

    Works in the scaled variable ``y = v / scales`` so that the Hessian is
    well conditioned; returns ``(H, g, c)`` with ``J(scales * y) = y.H.y/2 + g.y + c``.
    """
    c = objective(np.zeros(size))
    basis = np.diag(scales)
    single = np.array([objective(basis[k]) for k in range(size)])
    single_neg = np.array([objective(-basis[k]) for k in range(size)])
    diag = single + single_neg - 2.0 * c
    grad = 0.5 * (single - single_neg)
    hess = np.diag(diag)
    for k in range(size):
        for m in range(k + 1, size):
            pair = objective(basis[k] + basis[m])
            # J(e_k + e_m) - J(e_k) - J(e_m) + J(0) = H_km
            hess[k, m] = hess[m, k] = pair - single[k] - single[m] + c
    return hess, grad, c


# criterion number -> (title, passed, detail); filled by the acceptance tests
ACCEPTANCE = {}


def record(number, title, passed, detail=""):
    """Store and print one acceptance outcome, then assert it."""
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
    assert passed, f"criterion {number} failed: {title} ({detail})"
