"""Discrete Fourier analysis, carrier/fluctuation split and phase surrogates.

The carrier split removes the deterministic periodic load cycles (daily,
weekly, annual) in the frequency domain: bins whose magnitude sits far
above a fitted power-law background are assigned to the carrier, the
rest form the fluctuation (modulated) signal that the scaling analysis
consumes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .series import DEFAULT_START, DEFAULT_STEP, RngSpec, Series


@dataclass(frozen=True)
class Spectrum:
    """Unitary-normalized DFT coefficients of a real series.

    For a real input the coefficients satisfy c[w] == conj(c[(n-w) % n]).
    Series metadata travels along so synthesis can restore it.
    """

    coefficients: np.ndarray
    n: int
    normalization: str = "unitary"
    start_timestamp: datetime = DEFAULT_START
    step: timedelta = DEFAULT_STEP
    label: str = ""
    units: str = ""

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=np.complex128, copy=True)
        if c.ndim != 1 or c.size != self.n:
            raise ValueError("coefficient array must be 1-d of length n")
        if self.normalization != "unitary":
            raise ValueError("only the 1/sqrt(N) normalization is supported")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def _replace_coefficients(self, coefficients: np.ndarray) -> "Spectrum":
        return Spectrum(coefficients, self.n, self.normalization,
                        self.start_timestamp, self.step, self.label, self.units)


@dataclass(frozen=True)
class CarrierPolicy:
    """Carrier-bin selection rule.

    The magnitude background |c(w)| ~ w^beta is fitted by least squares
    on log10-log10 axes over bins [fit_lo, fit_hi]; any bin exceeding
    the fit by ``threshold_decades`` is a carrier peak.
    """

    threshold_decades: float = 1.0
    fit_lo: int = 1
    fit_hi: int | None = None  # defaults to n // 2

    def __post_init__(self):
        if self.threshold_decades <= 0:
            raise ValueError("threshold_decades must be positive")
        if self.fit_lo < 1:
            raise ValueError("fit_lo must be >= 1")


@dataclass(frozen=True)
class SpectrumDecomposition:
    carrier: Spectrum
    fluctuation: Spectrum
    carrier_bins: frozenset[int]


def forward_dft(s: Series) -> Spectrum:
    """Unitary DFT, c[w] = (1/sqrt(N)) sum_j x[j] exp(-2*pi*i*j*w/N)."""
    if len(s) < 2:
        raise ValueError("forward_dft needs at least 2 samples")
    c = np.fft.fft(s.values, norm="ortho")
    return Spectrum(c, len(s), "unitary", s.start_timestamp, s.step, s.label, s.units)


def inverse_dft(sp: Spectrum) -> Series:
    """Unitary inverse DFT; returns the real part.

    The imaginary residue of the synthesis, relative to the amplitude of
    the real part, must stay below 1e-6 (it is ~1e-16 for any Hermitian
    spectrum); otherwise the spectrum does not describe a real signal.
    """
    z = np.fft.ifft(sp.coefficients, norm="ortho")
    re = z.real
    scale = float(np.max(np.abs(re)))
    resid = float(np.max(np.abs(z.imag)))
    if scale > 0.0 and resid / scale > 1e-6:
        raise ValueError("non-real synthesis")
    if scale == 0.0 and resid > 1e-12:
        raise ValueError("non-real synthesis")
    return Series(re, sp.start_timestamp, sp.step, sp.label, sp.units)


def decompose(s: Series, policy: CarrierPolicy = CarrierPolicy()) -> SpectrumDecomposition:
    """Split a series into carrier and fluctuation spectra.

    The DC bin always belongs to the carrier (the fluctuation signal is
    zero-mean by construction) and peak bins are mirrored so both halves
    of the spectrum stay consistent; carrier + fluctuation equals the
    original spectrum bin by bin exactly.
    """
    n = len(s)
    if n < 64:
        raise ValueError("decompose needs at least 64 samples to fit the background")
    spec = forward_dft(s)
    mag = np.abs(spec.coefficients)
    if not np.any(mag > 0.0):
        raise ValueError("zero signal")

    half = n // 2
    hi = half if policy.fit_hi is None else min(policy.fit_hi, half)
    bins = np.arange(policy.fit_lo, hi + 1)
    usable = bins[mag[bins] > 0.0]
    peaks: set[int] = set()
    if usable.size >= 2:
        lx = np.log10(usable.astype(np.float64))
        ly = np.log10(mag[usable])
        slope, intercept = np.polyfit(lx, ly, 1)
        background = slope * np.log10(bins.astype(np.float64)) + intercept
        with np.errstate(divide="ignore"):
            excess = np.log10(np.where(mag[bins] > 0, mag[bins], np.nan)) - background
        peaks = set(int(b) for b, e in zip(bins, excess)
                    if np.isfinite(e) and e > policy.threshold_decades)

    carrier_bins = {0} | peaks | {(n - w) % n for w in peaks}
    mask = np.zeros(n, dtype=bool)
    mask[sorted(carrier_bins)] = True
    c = spec.coefficients
    carrier = spec._replace_coefficients(np.where(mask, c, 0.0 + 0.0j))
    fluct = spec._replace_coefficients(np.where(mask, 0.0 + 0.0j, c))
    return SpectrumDecomposition(carrier, fluct, frozenset(carrier_bins))


def _antisymmetric_phases(n: int, gen: np.random.Generator) -> np.ndarray:
    """Random phases Q with Q[0] = 0 and Q[n-w] = -Q[w] (real synthesis)."""
    q = np.zeros(n)
    half = (n - 1) // 2
    if half > 0:
        ph = gen.uniform(-np.pi, np.pi, size=half)
        q[1:half + 1] = ph
        q[n - half:] = -ph[::-1]
    if n % 2 == 0:
        q[n // 2] = np.pi * float(gen.integers(0, 2))  # self-mirror bin: sign flip only
    return q


def phase_randomized(sp: Spectrum, rng: RngSpec) -> Spectrum:
    """Multiply the spectrum by random unit phases, preserving |c| exactly."""
    gen = rng.generator()
    q = _antisymmetric_phases(sp.n, gen)
    return sp._replace_coefficients(sp.coefficients * np.exp(1j * q))


def make_surrogate(decomp: SpectrumDecomposition, rng: RngSpec) -> Series:
    """Phase-randomized surrogate of the fluctuation signal.

    Keeps the modulus spectrum (hence the circular autocorrelation) and
    scrambles phase coherence, Gaussianizing the marginal distribution.
    """
    return inverse_dft(phase_randomized(decomp.fluctuation, rng))


def export_spectrum_csv(sp: Spectrum, path) -> None:
    """Debug dump: one row per frequency bin with re/im parts."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["bin", "re", "im"])
        for i, c in enumerate(sp.coefficients):
            w.writerow([i, repr(float(c.real)), repr(float(c.imag))])


def export_decomposition_csv(decomp: SpectrumDecomposition, stem) -> None:
    export_spectrum_csv(decomp.carrier, f"{stem}_carrier.csv")
    export_spectrum_csv(decomp.fluctuation, f"{stem}_fluctuation.csv")
