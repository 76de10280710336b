"""Lloyd's K-means with k-means++ seeding, plus silhouette-based K selection.

Runs ``n_init`` independent restarts, each from its own derived random
substream, and keeps the result with the lowest inertia (ties go to the
earlier restart), so the outcome does not depend on scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import KTooLarge, SingleCluster
from .rng import substream

__all__ = ["KmeansResult", "kmeans", "silhouette_mean", "select_k_silhouette"]


@dataclass
class KmeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    iterations: int
    restarts_used: int
    inertia_path: list = field(default_factory=list, repr=False)


def _sq_distances(points, centers):
    # difference form: slower than the Gram trick but free of the
    # cancellation that would make d(x, x) > 0; chunked to bound memory
    n, k = points.shape[0], centers.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    step = max(1, int(4_000_000 // max(1, k * points.shape[1])))
    for start in range(0, n, step):
        diff = points[start:start + step, None, :] - centers[None, :, :]
        out[start:start + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def _kmeanspp_init(points, k, gen):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[int(gen.integers(n))]
    closest = _sq_distances(points, centers[:1]).ravel()
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # all points coincide with chosen centers; any pick is equivalent
            idx = int(gen.integers(n))
        else:
            target = gen.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), target))
            idx = min(idx, n - 1)
        centers[c] = points[idx]
        closest = np.minimum(closest, _sq_distances(points, centers[c:c + 1]).ravel())
    return centers


def _lloyd(points, k, gen, max_iter):
    n = points.shape[0]
    centers = _kmeanspp_init(points, k, gen)
    labels = np.full(n, -1, dtype=np.int64)
    path = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        d2 = _sq_distances(points, centers)
        new_labels = np.argmin(d2, axis=1)
        # repair empty clusters: the point farthest from its center becomes
        # the missing cluster's singleton center
        for c in range(k):
            if not np.any(new_labels == c):
                assigned = d2[np.arange(n), new_labels]
                far = int(np.argmax(assigned))
                centers[c] = points[far]
                new_labels[far] = c
                d2[:, c] = _sq_distances(points, centers[c:c + 1]).ravel()
        inertia = float(d2[np.arange(n), new_labels].sum())
        path.append(inertia)
        if len(path) > 1 and inertia > path[-2] + 1e-9 * max(1.0, path[-2]):
            raise AssertionError("Lloyd iteration increased inertia")
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if members.size:
                centers[c] = members.mean(axis=0)
    inertia = float(_sq_distances(points, centers)[np.arange(n), labels].sum())
    return labels, centers, inertia, iterations, path


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300,
           n_init: int = 10) -> KmeansResult:
    """Cluster the rows of ``points`` into ``k`` groups.

    Each restart seeds centers with k-means++ and iterates Lloyd updates
    until assignments stop changing. The best restart by (inertia, restart
    index) wins, making the result deterministic for a given seed.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if k > n:
        raise KTooLarge(f"k={k} exceeds the number of points ({n})")
    if k < 1:
        raise ValueError("k must be at least 1")
    best = None
    for restart in range(max(1, n_init)):
        gen = substream(seed, "kmeans-restart", restart)
        labels, centers, inertia, iterations, path = _lloyd(points, k, gen, max_iter)
        key = (inertia, restart)
        if best is None or key < best[0]:
            best = (key, KmeansResult(labels, centers, inertia, iterations,
                                      restarts_used=max(1, n_init), inertia_path=path))
    return best[1]


def silhouette_mean(data, labels, metric: str = "euclidean") -> float:
    """Mean silhouette coefficient over all points.

    ``data`` is either an n x d point matrix (``metric="euclidean"``) or a
    precomputed n x n distance matrix (``metric="precomputed"``). A point
    in a singleton cluster contributes 0, as does a point whose intra- and
    inter-cluster distances are both 0.
    """
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise SingleCluster("silhouette needs at least two occupied clusters")
    if metric == "precomputed":
        dist = np.asarray(data, dtype=np.float64)
    elif metric == "euclidean":
        pts = np.asarray(data, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        dist = np.sqrt(_sq_distances(pts, pts))
    else:
        raise ValueError(f"unknown metric {metric!r}")

    n = len(labels)
    members = {c: np.flatnonzero(labels == c) for c in uniq}
    scores = np.zeros(n)
    for i in range(n):
        own = members[labels[i]]
        if own.size == 1:
            continue
        a = dist[i, own].sum() / (own.size - 1)
        b = min(dist[i, members[c]].mean() for c in uniq if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def select_k_silhouette(cluster_fn, k_range, distances, seed: int = 0):
    """Pick the cluster count maximizing the mean silhouette.

    ``cluster_fn(k, seed)`` must run the full clustering pipeline and
    return an object with a ``labels`` array; ``distances`` is the square
    matrix the silhouette is evaluated on (entity-space Wasserstein
    distances by default in the pipelines). Ties go to the smaller K.
    Returns ``(best_k, scores)`` with one score per candidate.
    """
    k_range = sorted(set(int(k) for k in k_range))
    if not k_range:
        raise ValueError("empty k_range")
    dist = distances.entries if hasattr(distances, "entries") else np.asarray(distances)
    n = dist.shape[0]
    if k_range[0] < 2 or k_range[-1] > n - 1:
        raise ValueError(f"k_range must lie within [2, {n - 1}]")
    scores = {}
    for k in k_range:
        part = cluster_fn(k, seed)
        scores[k] = silhouette_mean(dist, part.labels, metric="precomputed")
    best = min(k_range, key=lambda k: (-scores[k], k))
    return best, scores
