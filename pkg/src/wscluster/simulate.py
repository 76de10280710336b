"""Synthetic transaction generation, baseline methods, and benchmark runner.

Two data-generating examples are built in. The continuous one (example 1)
draws cluster amounts from N(2, 2^2), Exp(rate 1/2) and Gamma(shape 2,
scale 1); the discrete one (example 2) uses N(4, 2^2), an 0.8/0.2 mixture
of Exp(1/2) with U[10, 12], and a 0.3/0.7 mixture of Exp(1/2) with
U[4, 6], rounding every amount to an integer. All draws pass through
absolute value, and each entity's transaction count is a Poisson(beta)
draw floored at ceil(ln n).

Sampling is pinned to explicit transforms over a counter-based generator
(Box-Muller normals, inverse-CDF exponentials, gamma with integer shape as
a sum of exponentials) so datasets are bit-identical across platforms and
can be generated per entity in parallel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .ecdf import Dataset, TransactionBatch, standardize
from .errors import KTooLarge
from .kmeans import kmeans
from .metrics import Partition, cluster_accuracy, nmi, rand_index
from .rng import substream
from .similarity import DistanceMatrix, pairwise_distances
from .spectral import subsample_plan, subwsc_run, wsc_run

__all__ = [
    "SimSpec",
    "GroundTruth",
    "SETTING_SIZES",
    "generate",
    "generate_dataset",
    "feature_kmeans_baseline",
    "hc_complete_baseline",
    "complete_linkage_merges",
    "BenchmarkResult",
    "run_benchmark",
    "subsample_sweep",
]

SETTING_SIZES = {"a": (30, 50, 75), "b": (60, 100, 150), "c": (120, 200, 300)}

METRIC_FNS = {"ri": rand_index, "ca": cluster_accuracy, "nmi": nmi}


@dataclass(frozen=True)
class SimSpec:
    """Configuration of one synthetic dataset."""

    cluster_sizes: tuple
    beta: float
    example: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.example not in (1, 2):
            raise ValueError("example must be 1 (continuous) or 2 (discrete)")
        if any(s < 1 for s in self.cluster_sizes):
            raise ValueError("cluster sizes must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def n(self) -> int:
        return int(sum(self.cluster_sizes))

    @property
    def k(self) -> int:
        return len(self.cluster_sizes)


@dataclass
class GroundTruth:
    labels: np.ndarray


def _normals(gen, size, mean, sd):
    # Box-Muller on uniforms from the substream
    half = (size + 1) // 2
    u1 = 1.0 - gen.random(half)
    u2 = gen.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate((radius * np.cos(2 * np.pi * u2),
                        radius * np.sin(2 * np.pi * u2)))[:size]
    return mean + sd * z


def _exponentials(gen, size, rate):
    return -np.log(1.0 - gen.random(size)) / rate


def _gamma_shape2(gen, size, scale):
    return (_exponentials(gen, size, 1.0) + _exponentials(gen, size, 1.0)) * scale


def _uniforms(gen, size, low, high):
    return low + (high - low) * gen.random(size)


def _mixture(gen, size, weight_first, first, second):
    pick_first = gen.random(size) < weight_first
    out = np.empty(size)
    out[pick_first] = first(gen, int(pick_first.sum()))
    out[~pick_first] = second(gen, int(size - pick_first.sum()))
    return out


def _draw_amounts(gen, size, example, cluster):
    if example == 1:
        if cluster == 0:
            return _normals(gen, size, 2.0, 2.0)
        if cluster == 1:
            return _exponentials(gen, size, 0.5)
        return _gamma_shape2(gen, size, 1.0)
    if cluster == 0:
        return _normals(gen, size, 4.0, 2.0)
    if cluster == 1:
        return _mixture(gen, size, 0.8,
                        lambda g, s: _exponentials(g, s, 0.5),
                        lambda g, s: _uniforms(g, s, 10.0, 12.0))
    return _mixture(gen, size, 0.3,
                    lambda g, s: _exponentials(g, s, 0.5),
                    lambda g, s: _uniforms(g, s, 4.0, 6.0))


def generate(spec: SimSpec):
    """Draw one synthetic dataset.

    Returns ``(batches, truth)``. Entity i's amounts come entirely from the
    substream (seed, "entity", i), so any subset of entities can be
    regenerated independently with identical results.
    """
    n = spec.n
    floor = max(1, math.ceil(math.log(n)))
    labels = np.repeat(np.arange(spec.k), spec.cluster_sizes)
    batches = []
    for i in range(n):
        gen = substream(spec.seed, "entity", i)
        v = max(int(gen.poisson(spec.beta)), floor)
        amounts = np.abs(_draw_amounts(gen, v, spec.example, int(labels[i])))
        if spec.example == 2:
            # round half away from zero; amounts are non-negative here
            amounts = np.floor(amounts + 0.5)
        batches.append(TransactionBatch(f"e{i:05d}", amounts))
    return batches, GroundTruth(labels=labels)


def generate_dataset(spec: SimSpec):
    """Generate, standardize, and also return the raw batches and truth."""
    batches, truth = generate(spec)
    return standardize(batches), batches, truth


def feature_kmeans_baseline(batches, k: int, seed: int = 0) -> Partition:
    """K-means on the raw per-entity (mean amount, amount sd) features.

    Features are deliberately left unscaled; the sd of a single-amount
    entity is 0.
    """
    features = np.array([[b.amounts.mean(), b.amounts.std()] for b in batches])
    result = kmeans(features, k, seed=seed)
    return Partition.from_labels(result.labels, entity_ids=[b.entity_id for b in batches])


def complete_linkage_merges(d: DistanceMatrix):
    """Full agglomerative merge sequence under complete linkage.

    Returns ``(merges, heights)`` where each merge is (kept cluster id,
    absorbed cluster id) over current cluster ids, lowest linkage first.
    Ties pick the lexicographically smallest id pair. Heights are
    non-decreasing because complete linkage is monotone.
    """
    n = d.n
    work = d.entries.astype(np.float64).copy()
    inf = np.inf
    work[np.tril_indices(n)] = inf
    active = np.ones(n, dtype=bool)
    merges, heights = [], []
    for _ in range(n - 1):
        flat = int(np.argmin(work))
        i, j = divmod(flat, n)
        heights.append(float(work[i, j]))
        merges.append((i, j))
        # complete linkage: distance to the merged cluster is the max leg;
        # each pair value is stored once in the upper triangle, so min picks it
        d_i = np.minimum(work[i], work[:, i])
        d_j = np.minimum(work[j], work[:, j])
        merged_rows = np.maximum(d_i, d_j)
        active[j] = False
        work[j, :] = inf
        work[:, j] = inf
        work[i, :] = inf
        work[:, i] = inf
        cols = np.flatnonzero(active)
        cols = cols[cols != i]
        if cols.size:
            lo = np.minimum(i, cols)
            hi = np.maximum(i, cols)
            work[lo, hi] = merged_rows[cols]
    return merges, heights


def hc_complete_baseline(d: DistanceMatrix, k: int) -> Partition:
    """Complete-linkage agglomerative clustering cut at k clusters."""
    n = d.n
    if k > n:
        raise KTooLarge(f"k={k} exceeds n={n}")
    merges, _ = complete_linkage_merges(d)
    members = {i: [i] for i in range(n)}
    for i, j in merges[: n - k]:
        members[i].extend(members.pop(j))
    labels = np.empty(n, dtype=np.int64)
    for new_label, root in enumerate(sorted(members)):
        labels[members[root]] = new_label
    return Partition.from_labels(labels, entity_ids=list(d.entity_ids))


@dataclass
class BenchmarkResult:
    """Aggregated benchmark output.

    ``rows`` hold (example, setting, beta, method, metric, mean, sd, M)
    records; ``raw`` holds per-replication values as (method, metric,
    replication, value); failures are recorded, not raised.
    """

    rows: list = field(default_factory=list)
    raw: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    setting: str = ""
    spec: SimSpec | None = None

    def mean(self, method: str, metric: str) -> float:
        for row in self.rows:
            if row["method"] == method and row["metric"] == metric:
                return row["mean"]
        raise KeyError(f"no row for {method}/{metric}")

    def table(self) -> str:
        lines = [f"{'method':<16} " + " ".join(f"{m:>14}" for m in ("ri", "ca", "nmi", "time_s"))]
        methods = sorted({r["method"] for r in self.rows})
        for method in methods:
            cells = []
            for metric in ("ri", "ca", "nmi", "time_s"):
                try:
                    row = next(r for r in self.rows
                               if r["method"] == method and r["metric"] == metric)
                    cells.append(f"{row['mean']:.3f} ({row['sd']:.3f})")
                except StopIteration:
                    cells.append("-")
            lines.append(f"{method:<16} " + " ".join(f"{c:>14}" for c in cells))
        return "\n".join(lines)


def _timed_partition(method, dataset, batches, distances, k, seed, knn_k0,
                     subsample_fraction, n_init):
    """Run one method on precomputed distances; returns (partition, seconds).

    Timing starts after the distance matrix on purpose: the distance stage
    is shared by every distance-based method, and the point of the
    subsampled pipeline is what happens downstream of it.
    """
    start = time.perf_counter()
    if method == "wsc_dense":
        part = wsc_run(dataset, k, seed=seed, distances=distances, n_init=n_init).partition
    elif method == "wsc_knn":
        k0 = min(knn_k0, dataset.n - 1)
        part = wsc_run(dataset, k, seed=seed, distances=distances, knn_k0=k0,
                       n_init=n_init).partition
    elif method == "subwsc":
        n_s = max(k, int(round(subsample_fraction * dataset.n)))
        plan = subsample_plan(dataset.n, n_s, seed=seed)
        part = subwsc_run(dataset, k, plan, seed=seed, distances=distances,
                          n_init=n_init).partition
    elif method == "feature_kmeans":
        part = feature_kmeans_baseline(batches, k, seed=seed)
    elif method == "hc":
        part = hc_complete_baseline(distances, k)
    else:
        raise ValueError(f"unknown method {method!r}")
    return part, time.perf_counter() - start


def run_benchmark(spec: SimSpec, methods=("wsc", "feature_kmeans", "hc"),
                  replications: int = 20, seed: int = 0, *, knn_k0: int = 10,
                  subsample_fraction: float = 0.3, n_init: int = 10,
                  setting: str = "custom") -> BenchmarkResult:
    """Replicate the simulation protocol and aggregate metric summaries.

    Each replication draws fresh data from a derived seed, runs every
    method on the shared distance matrix, and scores it against the ground
    truth. ``"wsc"`` expands to a dense and a k0-sparsified variant; both
    are recorded, and the variant with the better mean Rand index is also
    reported under the plain ``wsc`` name. Per-replication method failures
    are recorded and skipped rather than aborting the run.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    expanded = []
    for m in methods:
        expanded.extend(("wsc_dense", "wsc_knn") if m == "wsc" else (m,))

    values = {m: {metric: [] for metric in (*METRIC_FNS, "time_s")} for m in expanded}
    result = BenchmarkResult(setting=setting, spec=spec)
    for rep in range(replications):
        rep_seed = int(substream(seed, "replication", rep).integers(2**63))
        rep_spec = SimSpec(spec.cluster_sizes, spec.beta, spec.example, seed=rep_seed)
        dataset, batches, truth = generate_dataset(rep_spec)
        distances = pairwise_distances(dataset)
        truth_part = Partition.from_labels(truth.labels)
        for method in expanded:
            try:
                part, seconds = _timed_partition(
                    method, dataset, batches, distances, spec.k, rep_seed,
                    knn_k0, subsample_fraction, n_init)
            except Exception as exc:  # recorded, run continues
                result.failures.append({"method": method, "replication": rep,
                                        "error": f"{type(exc).__name__}: {exc}"})
                continue
            for metric, fn in METRIC_FNS.items():
                value = fn(truth_part, part)
                values[method][metric].append(value)
                result.raw.append({"method": method, "metric": metric,
                                   "replication": rep, "value": value})
            values[method]["time_s"].append(seconds)
            result.raw.append({"method": method, "metric": "time_s",
                               "replication": rep, "value": seconds})

    if "wsc_dense" in expanded and "wsc_knn" in expanded:
        dense_ri = np.mean(values["wsc_dense"]["ri"]) if values["wsc_dense"]["ri"] else -1
        knn_ri = np.mean(values["wsc_knn"]["ri"]) if values["wsc_knn"]["ri"] else -1
        winner = "wsc_dense" if dense_ri >= knn_ri else "wsc_knn"
        values["wsc"] = values[winner]

    for method, by_metric in values.items():
        for metric, series in by_metric.items():
            if not series:
                continue
            arr = np.asarray(series)
            result.rows.append({
                "example": spec.example, "setting": setting, "beta": spec.beta,
                "method": method, "metric": metric,
                "mean": float(arr.mean()),
                "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                "M": int(arr.size),
            })
    return result


def subsample_sweep(spec: SimSpec, fractions, replications: int = 5, seed: int = 0,
                    *, n_init: int = 10, setting: str = "custom") -> BenchmarkResult:
    """Quality and wall-time of the subsampled pipeline across sample sizes.

    Shares one distance matrix per replication between the full pipeline
    and every sweep point, mirroring how the subsampled method is meant to
    be deployed.
    """
    fractions = [float(f) for f in fractions]
    result = BenchmarkResult(setting=setting, spec=spec)
    methods = ["wsc_dense"] + [f"subwsc@{f:g}" for f in fractions]
    values = {m: {metric: [] for metric in (*METRIC_FNS, "time_s")} for m in methods}
    for rep in range(replications):
        rep_seed = int(substream(seed, "replication", rep).integers(2**63))
        rep_spec = SimSpec(spec.cluster_sizes, spec.beta, spec.example, seed=rep_seed)
        dataset, batches, truth = generate_dataset(rep_spec)
        distances = pairwise_distances(dataset)
        truth_part = Partition.from_labels(truth.labels)
        runs = [("wsc_dense", "wsc_dense", None)]
        runs += [(f"subwsc@{f:g}", "subwsc", f) for f in fractions]
        for name, method, fraction in runs:
            try:
                part, seconds = _timed_partition(
                    method, dataset, batches, distances, spec.k, rep_seed,
                    10, fraction, n_init)
            except Exception as exc:
                result.failures.append({"method": name, "replication": rep,
                                        "error": f"{type(exc).__name__}: {exc}"})
                continue
            for metric, fn in METRIC_FNS.items():
                value = fn(truth_part, part)
                values[name][metric].append(value)
                result.raw.append({"method": name, "metric": metric,
                                   "replication": rep, "value": value})
            values[name]["time_s"].append(seconds)
            result.raw.append({"method": name, "metric": "time_s",
                               "replication": rep, "value": seconds})
    for method, by_metric in values.items():
        for metric, series in by_metric.items():
            if not series:
                continue
            arr = np.asarray(series)
            result.rows.append({
                "example": spec.example, "setting": setting, "beta": spec.beta,
                "method": method, "metric": metric,
                "mean": float(arr.mean()),
                "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                "M": int(arr.size),
            })
    return result
