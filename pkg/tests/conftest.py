"""Shared fixtures: grids and cached SCF runs."""

from functools import lru_cache

import numpy as np
import pytest
from hypothesis import settings

from xcpot.grid import build_grid
from xcpot.scf import ScfConfig, run_scf

# reproducible property tests
settings.register_profile("xcpot", derandomize=True, deadline=None)
settings.load_profile("xcpot")


@pytest.fixture(scope="session")
def grid():
    """Default log grid."""
    return build_grid()


@pytest.fixture(scope="session")
def small_grid():
    """Coarse log grid for dense oracles."""
    return build_grid(64, r_max=20.0, kind="log", r_min=1e-3)


@pytest.fixture(scope="session")
def medium_grid():
    return build_grid(400, r_max=30.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@lru_cache(maxsize=None)
def scf_run(z, n, method, **overrides):
    """Converged run on the default grid, computed once per session."""
    return run_scf(ScfConfig(Z=z, N=n, method=method, **overrides))


@pytest.fixture(scope="session")
def scf():
    return scf_run


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
