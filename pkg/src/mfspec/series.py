"""Core sequence types, profile construction and seeded shuffling."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from . import _kernels

DEFAULT_START = datetime(2020, 1, 1)
DEFAULT_STEP = timedelta(hours=1)


@dataclass(frozen=True)
class Series:
    """Uniformly sampled real-valued sequence with sampling metadata.

    ``values`` is stored as a read-only float64 array; operations return
    new instances and never mutate inputs, so sharing across threads is
    safe.  ``units`` is an opaque label (e.g. ``"MW"``).
    """

    values: np.ndarray
    start_timestamp: datetime = DEFAULT_START
    step: timedelta = DEFAULT_STEP
    label: str = ""
    units: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("empty series")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"series {self.label!r} contains non-finite values")
        if self.step <= timedelta(0):
            raise ValueError("step must be strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)

    def with_values(self, values: np.ndarray) -> "Series":
        """New series with the same metadata and different values."""
        return Series(values, self.start_timestamp, self.step, self.label, self.units)


@dataclass(frozen=True)
class RngSpec:
    """Deterministic random-stream key.

    A (master_seed, realization_index) pair keys a counter-based Philox
    stream, so identical pairs give bit-identical draws regardless of
    thread schedule, and distinct realization indices give independent
    streams for ensemble members.
    """

    master_seed: int
    realization_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if int(self.realization_index) < 0:
            raise ValueError("realization_index must be non-negative")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.realization_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def realization(self, index: int) -> "RngSpec":
        return RngSpec(self.master_seed, index)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    min: float
    max: float


def build_profile(fluc: Series) -> Series:
    """Cumulative sum of the input: output[i] = sum(input[:i+1]).

    Accumulation is compensated; at ~43k hourly points a naive running
    sum can lose digits that downstream log-log fits are sensitive to.
    """
    if len(fluc) == 0:
        raise ValueError("empty series")
    return fluc.with_values(_kernels.compensated_cumsum(fluc.values))


def shuffle_series(s: Series, rng: RngSpec) -> Series:
    """Uniformly random permutation of the values (Fisher-Yates).

    The exchange sweep runs from the top index down; the target indices
    are pre-drawn in one call so the permutation depends only on ``rng``.
    """
    n = len(s)
    if n == 0:
        raise ValueError("empty series")
    if n == 1:
        return s.with_values(s.values)
    gen = rng.generator()
    highs = np.arange(n, 1, -1, dtype=np.int64)  # draws[t] uniform on [0, n-1-t]
    draws = gen.integers(0, highs).astype(np.int64)
    return s.with_values(_kernels.apply_permutation(s.values, draws))


def summary_stats(s: Series) -> SummaryStats:
    """Sample moments: mean, variance (1/(N-1)), skewness, excess kurtosis.

    Skewness and kurtosis use the plain moment ratios m3/m2^1.5 and
    m4/m2^2 - 3 and come out NaN for a constant series.
    """
    x = s.values
    n = x.size
    if n < 2:
        raise ValueError("summary_stats needs at least 2 points")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d * d))
    variance = float(np.sum(d * d) / (n - 1))
    if m2 > 0.0:
        skew = float(np.mean(d ** 3) / m2 ** 1.5)
        exkurt = float(np.mean(d ** 4) / m2 ** 2 - 3.0)
    else:
        skew = float("nan")
        exkurt = float("nan")
    return SummaryStats(mean, variance, skew, exkurt, float(np.min(x)), float(np.max(x)))
