"""Pre-analysis hypothesis tests: portmanteau autocorrelation, Gaussianity, QQ."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .series import Series


@dataclass(frozen=True)
class AutocorrTestResult:
    m: int
    q_statistic: float
    threshold: float
    alpha: float
    rejected: bool


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float


def sample_autocorrelation(s: Series, lag: int) -> float:
    """Non-centered sample autocorrelation C_lag.

    C_i = sum_{k>i} x(k) x(k-i) / sum_k x(k)^2; C_0 is exactly 1.
    """
    x = s.values
    n = x.size
    if not 0 <= lag < n:
        raise ValueError(f"lag must be in [0, {n - 1}]")
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise ValueError("zero variance")
    if lag == 0:
        return 1.0
    return float(np.dot(x[lag:], x[:n - lag])) / denom


def ljung_box_statistic(s: Series, m: int, classical: bool = False) -> float:
    """Portmanteau statistic over lags 1..m, asymptotically chi^2_m under IID.

    The default weight is N^2/(N-i); ``classical=True`` switches to the
    textbook Ljung-Box N(N+2)/(N-i), indistinguishable for large N.
    """
    x = s.values
    n = x.size
    if not 1 <= m < n:
        raise ValueError(f"m must be in [1, {n - 1}]")
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise ValueError("zero variance")
    factor = float(n) * (n + 2) if classical else float(n) * n
    total = 0.0
    for i in range(1, m + 1):
        c = float(np.dot(x[i:], x[:n - i])) / denom
        total += c * c / (n - i)
    return factor * total


def chi2_inverse_cdf(m: int, alpha: float) -> float:
    """x such that the regularized lower incomplete gamma(m/2, x/2) = alpha."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return float(2.0 * special.gammaincinv(m / 2.0, alpha))


def autocorr_test(s: Series, m: int, alpha: float = 0.99) -> AutocorrTestResult:
    """Reject the no-autocorrelation hypothesis when Q exceeds the chi^2_m quantile."""
    q = ljung_box_statistic(s, m)
    threshold = chi2_inverse_cdf(m, alpha)
    return AutocorrTestResult(m=m, q_statistic=q, threshold=threshold,
                              alpha=alpha, rejected=q > threshold)


def ks_gaussian_test(s: Series) -> KsResult:
    """One-sample KS test against a Gaussian with the sample's mean/std.

    The p-value uses the asymptotic Kolmogorov distribution; estimating
    the reference parameters from the sample makes the test conservative.
    """
    x = s.values
    n = x.size
    if n < 8:
        raise ValueError("ks_gaussian_test needs at least 8 points")
    mu = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        raise ValueError("zero variance")
    z = special.ndtr((np.sort(x) - mu) / sd)
    i = np.arange(1, n + 1, dtype=np.float64)
    d_plus = float(np.max(i / n - z))
    d_minus = float(np.max(z - (i - 1.0) / n))
    d = max(d_plus, d_minus)
    p = float(special.kolmogorov(np.sqrt(n) * d))
    return KsResult(statistic=d, p_value=p)


def qq_points(s: Series, reference: Series) -> np.ndarray:
    """Paired empirical quantiles of the two series after standardization.

    Returns an array of (series quantile, reference quantile) pairs at
    probabilities (k - 0.5)/K with K = min(len(s), len(reference), 512).
    """
    a = s.values
    b = reference.values
    k = int(min(a.size, b.size, 512))
    if k < 1:
        raise ValueError("empty series")

    def _standardize(x: np.ndarray) -> np.ndarray:
        sd = np.std(x, ddof=1) if x.size > 1 else 0.0
        if sd == 0.0:
            return x - np.mean(x)
        return (x - np.mean(x)) / sd

    probs = (np.arange(1, k + 1) - 0.5) / k
    qa = np.quantile(_standardize(a), probs)
    qb = np.quantile(_standardize(b), probs)
    return np.column_stack([qa, qb])
