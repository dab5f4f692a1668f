"""Scaling function, numerical Legendre transform, and width/peak metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .mfdfa import HurstCurve


@dataclass(frozen=True)
class SpectrumSummary:
    """Legendre points (pi, f) of one scaling curve plus width and peak.

    ``truncated`` records whether negative-f wings were dropped; widths
    must not be inflated by those numerical artifacts.
    """

    points: np.ndarray  # (k, 2) columns (pi, f), ordered by generating q
    width: float
    pi_peak: float
    flavor: str
    truncated: bool = False

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64, copy=True)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] == 0:
            raise ValueError("points must be a non-empty (k, 2) array")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)


@dataclass(frozen=True)
class SpectrumMetrics:
    width: float
    pi_peak: float
    pi_min: float
    pi_max: float


def scaling_function(h: HurstCurve) -> dict[float, float]:
    """tau(q) = q h(q) - 1, pointwise on the q grid."""
    return {q: float(q * hv - 1.0) for q, hv in zip(h.q_grid, h.h)}


def _derivative_on_grid(q: np.ndarray, h: np.ndarray) -> np.ndarray:
    dh = np.empty_like(h)
    dh[1:-1] = (h[2:] - h[:-2]) / (q[2:] - q[:-2])
    dh[0] = (h[1] - h[0]) / (q[1] - q[0])
    dh[-1] = (h[-1] - h[-2]) / (q[-1] - q[-2])
    return dh


def _parabolic_peak(pi: np.ndarray, f: np.ndarray) -> float:
    """Location of the f maximum, refined by a parabola through its neighbors."""
    i = int(np.argmax(f))
    if i == 0 or i == pi.size - 1:
        return float(pi[i])
    d1 = pi[i] - pi[i - 1]
    d2 = pi[i] - pi[i + 1]
    num = d1 * d1 * (f[i] - f[i + 1]) - d2 * d2 * (f[i] - f[i - 1])
    den = d1 * (f[i] - f[i + 1]) - d2 * (f[i] - f[i - 1])
    if abs(den) < 1e-300 or not np.isfinite(num / den):
        return float(pi[i])
    vertex = pi[i] - 0.5 * num / den
    lo = min(pi[i - 1], pi[i + 1])
    hi = max(pi[i - 1], pi[i + 1])
    return float(min(max(vertex, lo), hi))


def legendre_points(h: HurstCurve, truncate: bool = True) -> SpectrumSummary:
    """Multifractal spectrum f(pi) of a scaling curve.

    pi(q) = q h'(q) + h(q) with h' from central differences (one-sided
    at the grid ends) and f = q pi - tau(q).  Points with f < 0 are
    dropped by default and flagged via ``truncated``.
    """
    q = np.array(h.q_grid)
    if q.size < 5:
        raise ValueError("q grid must have at least 5 points")
    hv = h.h
    dh = _derivative_on_grid(q, hv)
    pi = q * dh + hv
    f = q * (pi - hv) + 1.0  # q*pi - tau(q) with tau = q*h - 1
    keep = f >= 0.0 if truncate else np.ones(q.size, dtype=bool)
    was_truncated = bool(truncate and not keep.all())
    pi_k = pi[keep]
    f_k = f[keep]
    width = float(pi_k.max() - pi_k.min())
    peak = _parabolic_peak(pi_k, f_k)
    return SpectrumSummary(np.column_stack([pi_k, f_k]), width, peak,
                           flavor=h.flavor, truncated=was_truncated)


def spectrum_metrics(summary: SpectrumSummary) -> SpectrumMetrics:
    """Width, peak location and support endpoints of a spectrum."""
    pts = summary.points
    if pts.shape[0] == 0:
        raise ValueError("empty spectrum")
    pi = pts[:, 0]
    f = pts[:, 1]
    return SpectrumMetrics(
        width=float(pi.max() - pi.min()),
        pi_peak=_parabolic_peak(pi, f),
        pi_min=float(pi.min()),
        pi_max=float(pi.max()),
    )


def summary_to_csv(summary: SpectrumSummary, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["pi", "f"])
        for pi, fv in summary.points:
            w.writerow([repr(float(pi)), repr(float(fv))])
