"""Backend-selected numeric kernels for the hot inner loops.

Three loops dominate runtime once shuffle/surrogate ensembles are in play:
windowed polynomial detrending, compensated cumulative summation, and the
permutation sweep.  Each has a numba ``@njit`` kernel and a vectorized
numpy fallback.  Selection:

* ``MFSPEC_BACKEND=numpy`` forces the numpy path,
* ``MFSPEC_BACKEND=numba`` requires numba (raises if not importable),
* unset or ``auto`` picks numba when available.

``benchmarks/kernel_bench.py`` times both paths side by side.
"""

from __future__ import annotations

import os

import numpy as np


def _load_numba():
    try:
        import numba
    except ImportError:
        return None
    return numba


def _select_backend(env_value: str | None, numba_available: bool) -> str:
    v = (env_value or "auto").strip().lower()
    if v not in ("auto", "numba", "numpy"):
        raise ValueError(f"MFSPEC_BACKEND must be auto|numba|numpy, got {env_value!r}")
    if v == "numpy":
        return "numpy"
    if v == "numba" and not numba_available:
        raise ImportError("MFSPEC_BACKEND=numba but numba is not importable")
    if v == "numba":
        return "numba"
    return "numba" if numba_available else "numpy"


_numba = _load_numba()
BACKEND = _select_backend(os.environ.get("MFSPEC_BACKEND"), _numba is not None)


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def window_variances_numpy(y: np.ndarray, starts: np.ndarray, s: int,
                           solve_op: np.ndarray, design: np.ndarray) -> np.ndarray:
    """Mean squared residual of a least-squares polynomial fit per window.

    ``solve_op`` is the (k, s) solution operator of the fit and ``design``
    the (s, k) design matrix, both precomputed once per window length.
    Windows are centered on their means first; the basis spans constants,
    so the residual is unchanged but loses a cancellation amplifier.
    """
    idx = starts[:, None] + np.arange(s)[None, :]
    seg = y[idx]
    seg = seg - seg.mean(axis=1, keepdims=True)
    coef = seg @ solve_op.T
    resid = seg - coef @ design.T
    return np.mean(resid * resid, axis=1)


def compensated_cumsum_numpy(x: np.ndarray) -> np.ndarray:
    # extended-precision accumulation; on x86-64 longdouble carries 64
    # mantissa bits, well past the 1e-9 relative budget at N ~ 1e5
    return np.cumsum(x, dtype=np.longdouble).astype(np.float64)


def apply_permutation_numpy(values: np.ndarray, draws: np.ndarray) -> np.ndarray:
    """Descending-index exchange sweep with pre-drawn targets.

    ``draws[t]`` must be uniform on ``[0, n-1-t]``; the sweep then swaps
    position ``n-1-t`` with position ``draws[t]``.
    """
    out = values.copy()
    n = out.shape[0]
    for t in range(n - 1):
        i = n - 1 - t
        j = draws[t]
        out[i], out[j] = out[j], out[i]
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if _numba is not None:
    from numba import njit

    @njit(cache=True, nogil=True)
    def window_variances_numba(y, starts, s, solve_op, design):  # pragma: no cover - exercised via dispatch
        nw = starts.shape[0]
        k = solve_op.shape[0]
        out = np.empty(nw)
        coef = np.empty(k)
        seg = np.empty(s)
        for w in range(nw):
            a = starts[w]
            mean = 0.0
            for i in range(s):
                mean += y[a + i]
            mean /= s
            for i in range(s):
                seg[i] = y[a + i] - mean
            for c in range(k):
                t = 0.0
                for i in range(s):
                    t += solve_op[c, i] * seg[i]
                coef[c] = t
            ssq = 0.0
            for i in range(s):
                fit = 0.0
                for c in range(k):
                    fit += design[i, c] * coef[c]
                r = seg[i] - fit
                ssq += r * r
            out[w] = ssq / s
        return out

    @njit(cache=True, nogil=True)
    def compensated_cumsum_numba(x):  # pragma: no cover - exercised via dispatch
        # Neumaier running sum
        n = x.shape[0]
        out = np.empty(n)
        s = 0.0
        c = 0.0
        for i in range(n):
            v = x[i]
            t = s + v
            if abs(s) >= abs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
            out[i] = s + c
        return out

    @njit(cache=True, nogil=True)
    def apply_permutation_numba(values, draws):  # pragma: no cover - exercised via dispatch
        out = values.copy()
        n = out.shape[0]
        for t in range(n - 1):
            i = n - 1 - t
            j = draws[t]
            tmp = out[i]
            out[i] = out[j]
            out[j] = tmp
        return out
else:  # pragma: no cover
    window_variances_numba = None
    compensated_cumsum_numba = None
    apply_permutation_numba = None


if BACKEND == "numba":
    window_variances = window_variances_numba
    compensated_cumsum = compensated_cumsum_numba
    apply_permutation = apply_permutation_numba
else:
    window_variances = window_variances_numpy
    compensated_cumsum = compensated_cumsum_numpy
    apply_permutation = apply_permutation_numpy


def warmup() -> None:
    """Trigger JIT compilation of the numba kernels (no-op on numpy path)."""
    if BACKEND != "numba":
        return
    y = np.arange(16.0)
    starts = np.array([0, 4], dtype=np.int64)
    design = np.vander(np.linspace(-1, 1, 8), 2, increasing=True)
    solve_op = np.linalg.pinv(design)
    window_variances(y, starts, 8, solve_op, design)
    compensated_cumsum(y)
    apply_permutation(y, np.zeros(15, dtype=np.int64))
