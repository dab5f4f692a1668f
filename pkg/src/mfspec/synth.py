"""Synthetic signal generators with known analytic scaling properties.

These back the test and acceptance suites: white noise (monofractal,
H = 1/2), exact fractional Gaussian noise via circulant embedding, and
the binomial multiplicative cascade whose generalized Hurst exponent has
a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .series import RngSpec, Series


@dataclass(frozen=True)
class CascadeSpec:
    levels: int
    weight_a: float

    def __post_init__(self):
        if not 1 <= int(self.levels) <= 30:
            raise ValueError("levels must be in [1, 30]")
        if not 0.5 < self.weight_a < 1.0:
            raise ValueError("weight_a must lie in (0.5, 1)")


def gaussian_white_noise(n: int, rng: RngSpec) -> Series:
    """IID standard normal draws."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Series(rng.generator().standard_normal(n), label=f"white_{rng.master_seed}_{rng.realization_index}")


def fgn_autocovariance(hurst: float, lags: np.ndarray) -> np.ndarray:
    """gamma(k) = 0.5 (|k+1|^2H - 2|k|^2H + |k-1|^2H), unit variance at lag 0."""
    k = np.abs(np.asarray(lags, dtype=np.float64))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1.0) ** h2 - 2.0 * k ** h2 + np.abs(k - 1.0) ** h2)


def _check_embeddable(eigenvalues: np.ndarray) -> np.ndarray:
    if float(np.min(eigenvalues)) < -1e-9:
        raise ValueError("covariance not embeddable: negative circulant eigenvalue")
    return np.clip(eigenvalues, 0.0, None)


def fgn(n: int, hurst: float, rng: RngSpec) -> Series:
    """Exact fractional Gaussian noise by circulant embedding.

    The 2n-circulant built from the autocovariance is diagonalized by the
    FFT; weighting complex normal draws by the eigenvalue square roots
    yields a sample with exactly the target covariance and unit variance.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError("hurst must lie in (0, 1)")
    if n < 2 or n & (n - 1):
        raise ValueError("n must be a power of two >= 2")
    gamma = fgn_autocovariance(hurst, np.arange(n + 1))
    row = np.concatenate([gamma[:n], [gamma[n]], gamma[n - 1:0:-1]])
    lam = _check_embeddable(np.fft.fft(row).real)

    m = 2 * n
    g = rng.generator().standard_normal(m)
    w = np.zeros(m, dtype=np.complex128)
    w[0] = math.sqrt(lam[0] / m) * g[0]
    w[n] = math.sqrt(lam[n] / m) * g[n]
    k = np.arange(1, n)
    amp = np.sqrt(lam[k] / (2.0 * m))
    w[k] = amp * (g[k] + 1j * g[m - k])
    w[m - k] = np.conj(w[k])
    z = np.fft.fft(w)
    return Series(z[:n].real, label=f"fgn{hurst:g}_{rng.master_seed}_{rng.realization_index}")


def _cascade_values(levels: int, a: float, orientations: list[np.ndarray]) -> np.ndarray:
    """Expand the multiplicative cascade given explicit branch orientations.

    ``orientations[lev]`` holds one bit per block at that level; bit 0
    assigns weight ``a`` to the left half, bit 1 to the right half.
    """
    v = np.ones(1)
    for lev in range(levels):
        bits = np.asarray(orientations[lev])
        if bits.size != v.size:
            raise ValueError(f"level {lev} needs {v.size} orientation bits")
        left = np.where(bits == 0, a, 1.0 - a)
        right = np.where(bits == 0, 1.0 - a, a)
        v = (v[:, None] * np.column_stack([left, right])).reshape(-1)
    return v


def binomial_cascade(spec: CascadeSpec, rng: RngSpec) -> Series:
    """Binomial measure of length 2^levels with randomized branch orientation.

    Orientation randomization keeps the hierarchical (multifractal)
    structure while ensuring shuffled/surrogate ensembles see a
    non-trivial arrangement; values are normalized to unit mean.
    """
    gen = rng.generator()
    orientations = [gen.integers(0, 2, size=2 ** lev) for lev in range(spec.levels)]
    v = _cascade_values(spec.levels, spec.weight_a, orientations)
    v = v / v.mean()
    return Series(v, label=f"cascade{spec.weight_a:g}_L{spec.levels}")


def analytic_cascade_hurst(q: float, weight_a: float) -> float:
    """Closed-form generalized Hurst exponent of the binomial cascade.

    h(q) = 1/q - ln(a^q + (1-a)^q) / (q ln 2), with the q -> 0 limit
    h(0) = -(ln a + ln(1-a)) / (2 ln 2).
    """
    a = weight_a
    if not 0.0 < a < 1.0:
        raise ValueError("weight_a must lie in (0, 1)")
    if q == 0.0:
        return -(math.log(a) + math.log(1.0 - a)) / (2.0 * math.log(2.0))
    return 1.0 / q - math.log(a ** q + (1.0 - a) ** q) / (q * math.log(2.0))
