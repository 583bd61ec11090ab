"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py --n 2000 --repeat 5

Both implementations are called on identical inputs; the first numba call
(compilation or cache load) is excluded from the timings.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

import numpy as np

from xcpot import _kernels
from xcpot.eigen import numerov_pencil
from xcpot.grid import build_grid


@dataclass
class Timing:
    kernel: str
    numpy_ms: float
    numba_ms: float
    max_diff: float

    @property
    def speedup(self) -> float:
        return self.numpy_ms / self.numba_ms if self.numba_ms > 0 else float("inf")


def best_of(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - start)
    return 1e3 * min(times), out


def cases(n, n_orbitals, seed):
    grid = build_grid(n)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n_orbitals, n)) * np.exp(-0.5 * grid.r)
    a, _, _ = numerov_pencil(grid, -2.0 / grid.r)
    a = a.tocsr()
    bands = (a.diagonal(0) + 1.0, a.diagonal(1), a.diagonal(2))
    yield "coulomb_potentials", (grid.w * np.vstack([u, u * u]), grid.r, grid.kernel_diag_corr)
    yield "exchange_kernel", (u.T @ u, grid.r, grid.kernel_diag)
    yield "log_kernel_double_sum", (u, grid.w, grid.r, grid.log_kernel_diag)
    yield "banded_inertia", bands


def run(n, n_orbitals, repeat, seed) -> list[Timing]:
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    results = []
    for name, args in cases(n, n_orbitals, seed):
        t_np, out_np = best_of(getattr(_kernels, f"{name}_numpy"), args, repeat)
        t_nb, out_nb = best_of(getattr(_kernels, f"{name}_numba"), args, repeat)
        diff = float(np.max(np.abs(np.asarray(out_np, dtype=float) - np.asarray(out_nb, dtype=float))))
        results.append(Timing(name, t_np, t_nb, diff))
    return results


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2000, help="grid points")
    p.add_argument("--orbitals", type=int, default=3)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    print(f"n={args.n} orbitals={args.orbitals} (best of {args.repeat})")
    print(f"{'kernel':24s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s} {'max diff':>10s}")
    for t in run(args.n, args.orbitals, args.repeat, args.seed):
        print(f"{t.kernel:24s} {t.numpy_ms:10.3f} {t.numba_ms:10.3f} {t.speedup:8.1f} {t.max_diff:10.2e}")


if __name__ == "__main__":
    main()
