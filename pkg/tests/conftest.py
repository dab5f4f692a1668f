import numpy as np
import pytest

from mfspec import MfdfaConfig, HurstCurve, Series, _kernels


def ar1(phi: float, n: int, seed: int) -> np.ndarray:
    """AR(1) oracle: x[t] = phi x[t-1] + eps, stationary start."""
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = eps[0] / np.sqrt(1.0 - phi * phi)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + eps[t]
    return x


def ar1_series(phi: float, n: int, seed: int) -> Series:
    return Series(ar1(phi, n, seed), label=f"ar1_{phi}_{seed}")


def curve_from_values(q_grid, h_values, flavor="plain", stderr=None, **cfg_kwargs) -> HurstCurve:
    """Hand-built scaling curve on an explicit q grid."""
    cfg = MfdfaConfig(q_grid=tuple(q_grid), **cfg_kwargs)
    h = np.asarray(h_values, dtype=float)
    se = np.zeros_like(h) if stderr is None else np.asarray(stderr, dtype=float)
    return HurstCurve(h, se, flavor, cfg)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    _kernels.warmup()
