"""Feature normalization and small-scale k-means for the width vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import RngSpec

DEFAULT_FEATURE_NAMES = ("d_pi", "d_pi_shuf", "d_pi_sur", "d_pi_cor", "d_pi_dist")


@dataclass(frozen=True)
class FeatureMatrix:
    labels: tuple[str, ...]
    values: np.ndarray  # (n_entities, n_features)
    feature_names: tuple[str, ...] = DEFAULT_FEATURE_NAMES

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 2:
            raise ValueError("values must be a 2-d matrix")
        if v.shape[0] < 2:
            raise ValueError("need at least 2 rows")
        if v.shape[0] != len(self.labels) or v.shape[1] != len(self.feature_names):
            raise ValueError("labels/feature_names must match the matrix shape")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature matrix contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))


@dataclass(frozen=True)
class KmeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float


def normalize_features(m: FeatureMatrix) -> FeatureMatrix:
    """Per-column z-score (mean 0, sample std 1)."""
    mu = m.values.mean(axis=0)
    sd = m.values.std(axis=0, ddof=1)
    for j, s in enumerate(sd):
        if s == 0.0:
            raise ValueError(f"zero spread in feature column {m.feature_names[j]!r}")
    return FeatureMatrix(m.labels, (m.values - mu) / sd, m.feature_names)


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = x[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def _kmeans_pp_init(x: np.ndarray, k: int, gen: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    idx = [int(gen.integers(0, n))]
    for _ in range(1, k):
        d2 = np.min(_sq_dists(x, x[idx]), axis=1)
        total = float(d2.sum())
        if total == 0.0:
            # all remaining points coincide with a chosen center
            idx.append(int(gen.integers(0, n)))
            continue
        idx.append(int(gen.choice(n, p=d2 / total)))
    return x[idx].copy()


def _lloyd(x: np.ndarray, centroids: np.ndarray, max_iter: int = 300):
    n, k = x.shape[0], centroids.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    prev_inertia = np.inf
    for _ in range(max_iter):
        d2 = _sq_dists(x, centroids)
        new_labels = np.argmin(d2, axis=1)
        # repair empty clusters from the points farthest off their centroid
        assigned_d2 = d2[np.arange(n), new_labels]
        for c in range(k):
            if not np.any(new_labels == c):
                far = int(np.argmax(assigned_d2))
                centroids[c] = x[far]
                new_labels[far] = c
                assigned_d2[far] = 0.0
        inertia = float(np.sum(np.square(x - centroids[new_labels])))
        if inertia > prev_inertia + 1e-9 * max(prev_inertia, 1.0):
            raise AssertionError("k-means inertia increased")
        if np.array_equal(new_labels, labels):
            return labels, centroids, inertia
        labels = new_labels
        prev_inertia = inertia
        for c in range(k):
            centroids[c] = x[labels == c].mean(axis=0)
    inertia = float(np.sum(np.square(x - centroids[labels])))
    return labels, centroids, inertia


def kmeans(m: FeatureMatrix, k: int, rng: RngSpec, restarts: int = 20) -> KmeansResult:
    """Lloyd's algorithm with k-means++ seeding, best of ``restarts`` runs.

    Each restart draws from its own realization stream and the winner is
    picked by (inertia, restart index), so the result is deterministic
    under a fixed ``rng``.
    """
    x = m.values
    n = x.shape[0]
    if not 2 <= k <= n:
        raise ValueError(f"k must be in [2, {n}]")
    best = None
    for r in range(restarts):
        gen = rng.realization(rng.realization_index + r).generator()
        centroids = _kmeans_pp_init(x, k, gen)
        labels, centroids, inertia = _lloyd(x, centroids)
        if best is None or inertia < best[0]:
            best = (inertia, labels, centroids)
    inertia, labels, centroids = best
    return KmeansResult(labels=labels, centroids=centroids, inertia=inertia)


def silhouette(m: FeatureMatrix, labels) -> float:
    """Mean silhouette coefficient in Euclidean metric.

    Singleton-cluster points contribute 0 by the usual convention; a
    clustering made only of singletons carries no cohesion information.
    """
    labels = np.asarray(labels, dtype=np.int64)
    x = m.values
    n = x.shape[0]
    if labels.shape != (n,):
        raise ValueError("labels must align with the feature rows")
    uniq, counts = np.unique(labels, return_counts=True)
    if uniq.size < 2:
        raise ValueError("need at least 2 clusters")
    if np.all(counts == 1):
        raise ValueError("silhouette undefined for singleton-only clustering")
    d = np.sqrt(np.maximum(_sq_dists(x, x), 0.0))
    scores = np.zeros(n)
    for i in range(n):
        own = labels[i]
        same = labels == own
        if int(same.sum()) == 1:
            continue  # singleton: score 0
        a = d[i, same].sum() / (same.sum() - 1)
        b = np.inf
        for c in uniq:
            if c == own:
                continue
            b = min(b, float(d[i, labels == c].mean()))
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())
