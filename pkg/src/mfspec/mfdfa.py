"""MFDFA engine: segmentation, windowed detrending, q-order fluctuation
functions, scaling-exponent fits, and shuffled/surrogate ensembles.

The analysis consumes the integrated profile of a fluctuation signal.
With ``integration_order = 2`` (the default) the engine integrates once
more internally, so fluctuation functions scale as s^(h(q)+1) and the
reported exponent is the fitted slope minus one; a plain shuffled
Gaussian signal then lands at h = 1/2.  ``integration_order = 1``
reproduces the classical single-integration variant (slope reported
as-is).
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .series import RngSpec, Series, build_profile, shuffle_series
from .spectral import forward_dft, inverse_dft, phase_randomized

DEFAULT_Q_GRID: tuple[float, ...] = tuple(float(q) / 2.0 for q in range(-20, 21))

FLAVORS = ("plain", "shuffled", "surrogate", "correlation", "distribution")


@dataclass(frozen=True)
class MfdfaConfig:
    """Knobs of one MFDFA run.

    ``scale_grid=None`` derives 24 log-spaced window sizes per series,
    from 4*(poly_order+2) up to N/4.  ``fit_range`` optionally restricts
    the log-log regression to scales within [lo, hi].
    """

    poly_order: int = 4
    q_grid: tuple[float, ...] = DEFAULT_Q_GRID
    scale_grid: tuple[int, ...] | None = None
    fit_range: tuple[float, float] | None = None
    integration_order: int = 2
    n_shuffles: int = 50
    n_surrogates: int = 50
    window_scheme: str = "even_overlap"

    def __post_init__(self):
        if self.poly_order < 1:
            raise ValueError("poly_order must be >= 1")
        q = tuple(float(v) for v in self.q_grid)
        if len(q) < 1 or any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("q_grid must be strictly increasing")
        if 0.0 not in q or 2.0 not in q:
            raise ValueError("q_grid must contain 0 and 2")
        object.__setattr__(self, "q_grid", q)
        if self.scale_grid is not None:
            sg = tuple(int(v) for v in self.scale_grid)
            if any(b <= a for a, b in zip(sg, sg[1:])):
                raise ValueError("scale_grid must be strictly increasing")
            if sg[0] <= 2 * (self.poly_order + 1):
                raise ValueError("smallest scale must exceed 2*(poly_order+1)")
            object.__setattr__(self, "scale_grid", sg)
        if self.integration_order not in (1, 2):
            raise ValueError("integration_order must be 1 or 2")
        if self.n_shuffles < 1 or self.n_surrogates < 1:
            raise ValueError("ensemble sizes must be >= 1")
        if self.window_scheme not in ("even_overlap", "forward_backward"):
            raise ValueError("window_scheme must be even_overlap or forward_backward")
        if self.fit_range is not None:
            lo, hi = self.fit_range
            if not lo < hi:
                raise ValueError("fit_range must satisfy lo < hi")
            object.__setattr__(self, "fit_range", (float(lo), float(hi)))

    def scales_for(self, n: int) -> tuple[int, ...]:
        if self.scale_grid is not None:
            if self.scale_grid[-1] > n:
                raise ValueError(f"largest scale {self.scale_grid[-1]} exceeds series length {n}")
            return self.scale_grid
        s_min = 4 * (self.poly_order + 2)
        s_max = n // 4
        if s_max < s_min:
            raise ValueError(f"series too short for scale grid (need >= {4 * s_min} points)")
        grid = np.unique(np.rint(np.geomspace(s_min, s_max, 24)).astype(np.int64))
        return tuple(int(v) for v in grid)


@dataclass(frozen=True)
class FluctuationSurface:
    """F_q(s) over the (q, s) grid for one ensemble flavor."""

    values: np.ndarray  # shape (len(q_grid), len(scales))
    scales: tuple[int, ...]
    flavor: str
    config: MfdfaConfig
    ensemble_size: int = 1

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        nq = len(self.config.q_grid)
        if v.shape != (nq, len(self.scales)):
            raise ValueError("values must be shaped (len(q_grid), len(scales))")
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise ValueError("fluctuation values must be strictly positive and finite")
        # generalized means grow with q; allow ulp-level ties
        if np.any(np.diff(v, axis=0) < -1e-9 * v[:-1]):
            raise ValueError("F_q(s) must be nondecreasing in q")
        if self.flavor not in ("plain", "shuffled", "surrogate"):
            raise ValueError(f"unknown surface flavor {self.flavor!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class HurstCurve:
    """h(q) on the config's q grid with per-q regression standard errors."""

    h: np.ndarray
    stderr: np.ndarray
    flavor: str
    config: MfdfaConfig

    def __post_init__(self):
        h = np.array(self.h, dtype=np.float64, copy=True)
        se = np.array(self.stderr, dtype=np.float64, copy=True)
        nq = len(self.config.q_grid)
        if h.shape != (nq,) or se.shape != (nq,):
            raise ValueError("h and stderr must align with the q grid")
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown curve flavor {self.flavor!r}")
        h.setflags(write=False)
        se.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "stderr", se)

    @property
    def q_grid(self) -> tuple[float, ...]:
        return self.config.q_grid

    def as_dict(self) -> dict[float, float]:
        return {q: float(v) for q, v in zip(self.config.q_grid, self.h)}


def segment_starts(n: int, s: int) -> np.ndarray:
    """Evenly spaced start indices of ceil(n/s) windows covering all samples.

    Exact tiling when s divides n; otherwise consecutive windows overlap
    minimally and the last window ends at n-1.
    """
    if s < 2:
        raise ValueError("window size must be >= 2")
    if s > n:
        raise ValueError(f"window size {s} exceeds series length {n}")
    k = -(-n // s)
    if k == 1:
        return np.zeros(1, dtype=np.int64)
    step = (n - s) / (k - 1)
    return np.floor(np.arange(k) * step + 0.5).astype(np.int64)


def _window_starts(n: int, s: int, scheme: str) -> np.ndarray:
    if scheme == "even_overlap":
        return segment_starts(n, s)
    k = n // s
    fwd = np.arange(k, dtype=np.int64) * s
    bwd = (n - s) - np.arange(k, dtype=np.int64) * s
    return np.concatenate([fwd, bwd])


@functools.lru_cache(maxsize=256)
def _design(s: int, order: int):
    """Design matrix and solution operator of the window fit.

    The basis is Legendre on [-1, 1]; it spans the same polynomial space
    as raw powers of 0..s-1 but stays well conditioned at large windows.
    """
    t = np.linspace(-1.0, 1.0, s)
    design = np.polynomial.legendre.legvander(t, order)
    cond = float(np.linalg.cond(design))
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError("detrend singular")
    solve_op = np.linalg.pinv(design)
    design.setflags(write=False)
    solve_op.setflags(write=False)
    return design, solve_op


def window_variance(window, poly_order: int) -> float:
    """Mean squared residual of the degree-``poly_order`` fit to one window."""
    w = np.ascontiguousarray(window, dtype=np.float64)
    s = w.size
    if s <= 2 * (poly_order + 1):
        raise ValueError(f"window of {s} points cannot support poly_order {poly_order}")
    design, solve_op = _design(s, poly_order)
    out = _kernels.window_variances(w, np.zeros(1, dtype=np.int64), s, solve_op, design)
    return float(out[0])


def _surface_values(x: np.ndarray, config: MfdfaConfig,
                    scales: tuple[int, ...]) -> np.ndarray:
    """F_q(s) matrix for an already fully integrated signal ``x``."""
    qs = np.array(config.q_grid)
    nz = qs != 0.0
    out = np.empty((qs.size, len(scales)))
    for j, s in enumerate(scales):
        starts = _window_starts(x.size, s, config.window_scheme)
        design, solve_op = _design(s, config.poly_order)
        f2 = _kernels.window_variances(x, starts, s, solve_op, design)
        if np.any(f2 <= 0.0):
            raise ValueError("zero local variance under negative moment; "
                             "raise poly_order tolerance or exclude the scale")
        log_f = 0.5 * np.log(f2)
        # q-order generalized means in log space to dodge overflow at |q| ~ 10
        a = qs[nz, None] * log_f[None, :]
        m = a.max(axis=1)
        out[nz, j] = np.exp((m + np.log(np.mean(np.exp(a - m[:, None]), axis=1))) / qs[nz])
        out[~nz, j] = np.exp(np.mean(log_f))
    return out


def fluctuation_function(profile: Series, config: MfdfaConfig) -> FluctuationSurface:
    """q-order fluctuation function of a profile (cumulative-sum) series.

    F_q(s) = [mean_w F^2(s,w)^(q/2)]^(1/q) with the geometric-mean limit
    at q = 0.  The profile counts as one integration; any further
    integrations implied by ``config.integration_order`` happen here.
    """
    x = np.ascontiguousarray(profile.values)
    for _ in range(config.integration_order - 1):
        x = _kernels.compensated_cumsum(x)
    scales = config.scales_for(x.size)
    values = _surface_values(x, config, scales)
    return FluctuationSurface(values, scales, "plain", config, ensemble_size=1)


def _fit_scales_mask(scales: np.ndarray, fit_range) -> np.ndarray:
    if fit_range is None:
        return np.ones(scales.size, dtype=bool)
    lo, hi = fit_range
    return (scales >= lo) & (scales <= hi)


def fit_hurst(surface: FluctuationSurface) -> HurstCurve:
    """Log-log OLS slope of F_q(s) per q, corrected for extra integrations.

    The reported exponent is slope - (integration_order - 1); stderr is
    the OLS standard error of the slope.
    """
    scales = np.array(surface.scales, dtype=np.float64)
    mask = _fit_scales_mask(scales, surface.config.fit_range)
    if int(mask.sum()) < 4:
        raise ValueError("need at least 4 scales in fit_range")
    lx = np.log(scales[mask])
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    correction = surface.config.integration_order - 1
    ly = np.log(surface.values[:, mask])
    xc = lx - lx.mean()
    slope = (ly @ xc) / sxx
    intercept = ly.mean(axis=1) - slope * lx.mean()
    resid = ly - (slope[:, None] * lx[None, :] + intercept[:, None])
    dof = lx.size - 2
    se = np.sqrt(np.sum(resid * resid, axis=1) / dof / sxx)
    return HurstCurve(slope - correction, se, surface.flavor, surface.config)


def ensemble_surface(s: Series, config: MfdfaConfig, flavor: str,
                     rng: RngSpec) -> FluctuationSurface:
    """Average F_q(s) over shuffle or phase-surrogate realizations.

    Realization r uses the stream (rng.master_seed,
    rng.realization_index + r); the results are reduced in realization
    order, so the average is bit-reproducible however the work is
    scheduled.
    """
    if flavor == "shuffled":
        n_real = config.n_shuffles

        def make(r: int) -> Series:
            return shuffle_series(s, rng.realization(rng.realization_index + r))
    elif flavor == "surrogate":
        n_real = config.n_surrogates
        spectrum = forward_dft(s)

        def make(r: int) -> Series:
            return inverse_dft(phase_randomized(spectrum, rng.realization(rng.realization_index + r)))
    else:
        raise ValueError("flavor must be shuffled or surrogate")

    scales = config.scales_for(len(s))
    acc = np.empty((n_real, len(config.q_grid), len(scales)))
    for r in range(n_real):
        profile = build_profile(make(r))
        acc[r] = fluctuation_function(profile, config).values
    return FluctuationSurface(acc.mean(axis=0), scales, flavor, config, ensemble_size=n_real)


def _difference_curve(a: HurstCurve, b: HurstCurve, flavor: str) -> HurstCurve:
    if a.config.q_grid != b.config.q_grid or a.config != b.config:
        raise ValueError("curves must share the q grid and configuration")
    return HurstCurve(a.h - b.h, np.hypot(a.stderr, b.stderr), flavor, a.config)


def correlation_hurst(plain: HurstCurve, shuffled: HurstCurve) -> HurstCurve:
    """h(q) - h_shuffled(q): the autocorrelation-driven part of the scaling."""
    return _difference_curve(plain, shuffled, "correlation")


def distribution_hurst(plain: HurstCurve, surrogate: HurstCurve) -> HurstCurve:
    """h(q) - h_surrogate(q): the distribution-driven part of the scaling."""
    return _difference_curve(plain, surrogate, "distribution")


def surface_to_csv(surface: FluctuationSurface, path) -> None:
    """One row per q, columns are the window scales."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["q"] + [str(s) for s in surface.scales])
        for q, row in zip(surface.config.q_grid, surface.values):
            w.writerow([f"{q:g}"] + [repr(float(v)) for v in row])
