"""Shared fixtures and independent oracles used across the test suite.

The oracles here deliberately avoid the code paths they check: the distance
oracle integrates |F_a - F_b| on a dense grid instead of using the merged
support, and the eigensolver oracle runs cyclic Jacobi sweeps instead of
LAPACK.
"""

import numpy as np
import pytest

from wscluster import Dataset, TransactionBatch, build_ecdf


def random_ecdf(gen, max_points=30):
    m = int(gen.integers(1, max_points + 1))
    return build_ecdf(TransactionBatch("tmp", gen.random(m)))


def random_amounts(gen, max_points=30):
    m = int(gen.integers(1, max_points + 1))
    return gen.random(m)


def grid_wasserstein(a, b, points=1_000_000):
    """Riemann-sum integration of |F_a - F_b| on a uniform grid.

    The grid covers the merged support range; each step function is
    evaluated at the left endpoint of every cell.
    """
    lo = min(a.support[0], b.support[0])
    hi = max(a.support[-1], b.support[-1])
    if hi <= lo:
        return 0.0
    step = (hi - lo) / points
    xs = lo + step * np.arange(points)
    return float(np.sum(np.abs(a.evaluate(xs) - b.evaluate(xs))) * step)


def jacobi_eigh(m, sweeps=100, tol=1e-13):
    """Full symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns). Slow but
    independent of LAPACK; intended for small matrices.
    """
    a = np.array(m, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1.0)) \
                    if theta != 0.0 else 1.0
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    order = np.argsort(np.diag(a))
    return np.diag(a)[order], v[:, order]


def duplicate_group_batches(group_amounts, copies=10):
    """Batches forming exact-duplicate groups (one amount list per group)."""
    batches = []
    labels = []
    for g, amounts in enumerate(group_amounts):
        for c in range(copies):
            batches.append(TransactionBatch(f"g{g}c{c:02d}", np.asarray(amounts, float)))
            labels.append(g)
    return batches, np.asarray(labels)


@pytest.fixture
def three_group_dataset():
    """3 groups of 10 identical ECDFs; standardized group gaps >= 0.3.

    Group centers sit at distinct spacings so the Laplacian spectrum has no
    accidental symmetry.
    """
    gen = np.random.default_rng(42)
    base = [1.0 + gen.random(100), 4.6 + gen.random(100), 7.9 + 0.1 * gen.random(100)]
    batches, labels = duplicate_group_batches(base, copies=10)
    from wscluster import standardize
    return standardize(batches), labels


def brute_force_knn(dmatrix, query_index, k):
    """Neighbor oracle: full scan sorted by (distance, index)."""
    order = sorted(
        (dmatrix.entries[query_index, j], j)
        for j in range(dmatrix.n) if j != query_index
    )
    return [dmatrix.entity_ids[j] for _, j in order[:k]]
