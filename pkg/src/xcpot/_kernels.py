"""Hot loops with a numba implementation and a pure-numpy fallback.

The backend is picked once at import time.  Set ``XCPOT_DISABLE_NUMBA=1``
to force the numpy path (useful for debugging and for platforms without
numba).  Both implementations are always importable under their explicit
names so that tests and benchmarks can compare them.

Kernels
-------
coulomb_potentials
    Batched O(n) evaluation of the spherical Coulomb potential of several
    line densities using prefix sums of the ``1/max(r, r')`` kernel.
exchange_kernel
    Dense ``-gamma * G`` for a one-body density matrix ``gamma``.
log_kernel_double_sum
    ``sum_kl w_k w_l gamma_kl**2 H_kl`` with the angular average of
    ``1/|r - r'|**2``.
banded_inertia
    Number of negative pivots of a symmetric pentadiagonal matrix.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("XCPOT_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")
BACKEND = "numba" if USE_NUMBA else "numpy"


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# Coulomb potentials of line densities
# --------------------------------------------------------------------------


def coulomb_potentials_numpy(wf, r, diag_corr):
    """Potentials ``V[m, k] = sum_l G_kl wf[m, l]`` for a batch of rows.

    Parameters
    ----------
    wf : ndarray, shape (m, n)
        Weighted line densities ``w * f``.
    r : ndarray, shape (n,)
    diag_corr : ndarray, shape (n,)
        Amount subtracted from ``1/r_k`` on the kernel diagonal, divided by
        the weight (so the correction applied to row ``m`` is
        ``diag_corr * wf[m]``).
    """
    wf = np.atleast_2d(wf)
    inner = np.cumsum(wf, axis=1) / r
    outer_terms = wf / r
    outer = np.cumsum(outer_terms[:, ::-1], axis=1)[:, ::-1] - outer_terms
    return inner + outer - diag_corr * wf


@_njit
def _coulomb_potentials_loop(wf, r, diag_corr):
    m, n = wf.shape
    out = np.empty((m, n))
    for a in range(m):
        acc = 0.0
        for k in range(n):
            acc += wf[a, k]
            out[a, k] = acc / r[k] - diag_corr[k] * wf[a, k]
        acc = 0.0
        for k in range(n - 1, -1, -1):
            out[a, k] += acc
            acc += wf[a, k] / r[k]
    return out


def coulomb_potentials_numba(wf, r, diag_corr):
    wf = np.ascontiguousarray(np.atleast_2d(wf), dtype=np.float64)
    return _coulomb_potentials_loop(wf, r, diag_corr)


# --------------------------------------------------------------------------
# Dense exchange kernel
# --------------------------------------------------------------------------


def exchange_kernel_numpy(gamma, r, kernel_diag):
    """Return ``-gamma_kl * G_kl`` with ``G_kl = 1/max(r_k, r_l)``."""
    g = 1.0 / np.maximum.outer(r, r)
    np.fill_diagonal(g, kernel_diag)
    g *= gamma
    np.negative(g, out=g)
    return g


@_njit
def _exchange_kernel_loop(gamma, r, kernel_diag):
    n = r.shape[0]
    out = np.empty((n, n))
    for k in range(n):
        for l in range(k):
            v = -gamma[k, l] / r[k]
            out[k, l] = v
            out[l, k] = v
        out[k, k] = -gamma[k, k] * kernel_diag[k]
    return out


def exchange_kernel_numba(gamma, r, kernel_diag):
    # r is sorted ascending, so max(r_k, r_l) = r_k for l < k
    return _exchange_kernel_loop(np.ascontiguousarray(gamma), r, kernel_diag)


# --------------------------------------------------------------------------
# Angular average of 1/|r - r'|**2 contracted with gamma**2
# --------------------------------------------------------------------------


def log_kernel_double_sum_numpy(u, w, r, log_diag):
    """``sum_kl w_k w_l gamma_kl**2 H_kl`` with ``gamma = u.T @ u``.

    ``H_kl = ln((r_k + r_l)/|r_k - r_l|) / (2 r_k r_l)`` off the diagonal
    and ``log_diag`` on it.
    """
    gamma = u.T @ u
    rs = np.add.outer(r, r)
    rd = np.abs(np.subtract.outer(r, r))
    np.fill_diagonal(rd, 1.0)
    h = np.log(rs / rd) / (2.0 * np.outer(r, r))
    np.fill_diagonal(h, log_diag)
    wg = w[:, None] * gamma * w[None, :]
    return float(np.sum(wg * gamma * h))


@_njit
def _log_kernel_loop(u, w, r, log_diag):
    nb, n = u.shape
    total = 0.0
    for k in range(n):
        row = 0.0
        for l in range(k):
            g = 0.0
            for i in range(nb):
                g += u[i, k] * u[i, l]
            h = np.log((r[k] + r[l]) / (r[k] - r[l])) / (2.0 * r[k] * r[l])
            row += w[l] * g * g * h
        g = 0.0
        for i in range(nb):
            g += u[i, k] * u[i, k]
        total += w[k] * (2.0 * row + w[k] * g * g * log_diag[k])
    return total


def log_kernel_double_sum_numba(u, w, r, log_diag):
    return float(_log_kernel_loop(np.ascontiguousarray(u), w, r, log_diag))


# --------------------------------------------------------------------------
# Inertia of a symmetric pentadiagonal matrix
# --------------------------------------------------------------------------


def _banded_inertia_py(d0, d1, d2):
    n = d0.shape[0]
    scale = 0.0
    for k in range(n):
        scale = max(scale, abs(d0[k]))
    tiny = 1e-300 + 2.2e-16 * scale
    piv = np.empty(n)
    l1 = np.zeros(n)
    l2 = np.zeros(n)
    count = 0
    for k in range(n):
        d = d0[k]
        if k >= 1:
            d -= l1[k - 1] * l1[k - 1] * piv[k - 1]
        if k >= 2:
            d -= l2[k - 2] * l2[k - 2] * piv[k - 2]
        if abs(d) < tiny:
            d = -tiny if d < 0 else tiny
        piv[k] = d
        if d < 0.0:
            count += 1
        if k + 1 < n:
            a = d1[k]
            if k >= 1:
                a -= l2[k - 1] * l1[k - 1] * piv[k - 1]
            l1[k] = a / d
        if k + 2 < n:
            l2[k] = d2[k] / d
    return count


_banded_inertia_jit = _njit(_banded_inertia_py)


def banded_inertia_numpy(d0, d1, d2):
    """Count negative eigenvalues of a symmetric pentadiagonal matrix.

    Uses the LDL^T recurrence without pivoting (Sylvester's law of
    inertia).  The recurrence is inherently sequential, so the fallback
    runs the interpreted loop.

    Parameters
    ----------
    d0, d1, d2 : ndarray
        Main diagonal and first and second super-diagonals.
    """
    return int(_banded_inertia_py(np.asarray(d0), np.asarray(d1), np.asarray(d2)))


def banded_inertia_numba(d0, d1, d2):
    return int(
        _banded_inertia_jit(
            np.ascontiguousarray(d0, dtype=np.float64),
            np.ascontiguousarray(d1, dtype=np.float64),
            np.ascontiguousarray(d2, dtype=np.float64),
        )
    )


if USE_NUMBA:
    coulomb_potentials = coulomb_potentials_numba
    exchange_kernel = exchange_kernel_numba
    log_kernel_double_sum = log_kernel_double_sum_numba
    banded_inertia = banded_inertia_numba
else:
    coulomb_potentials = coulomb_potentials_numpy
    exchange_kernel = exchange_kernel_numpy
    log_kernel_double_sum = log_kernel_double_sum_numpy
    banded_inertia = banded_inertia_numpy
