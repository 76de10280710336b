"""Metric-tree neighbor search and similarity-graph sparsification.

A cover tree indexes entities by their pairwise ECDF distances on dyadic
scales, answering exact nearest-neighbor queries without scanning
everything. Its neighbor lists drive the k-nearest-neighbor similarity
reconstruction, which sharpens the spectral structure of the graph.
"""

import numpy as np

from wscluster import (
    TransactionBatch,
    build_similarity,
    cover_tree_build,
    cover_tree_knn,
    knn_sparsify,
    normalized_laplacian,
    pairwise_distances,
    standardize,
    sym_eig_topk,
)

gen = np.random.default_rng(3)
batches = []
for g, center in enumerate((2.0, 10.0, 25.0)):
    for c in range(15):
        batches.append(TransactionBatch(f"g{g}c{c:02d}",
                                        center + gen.random(30) * center * 0.2))
dataset = standardize(batches)

tree = cover_tree_build(dataset)
summary = tree.audit()
print("cover tree:", summary)

query = "g1c03"
neighbors = cover_tree_knn(tree, query, 5)
print(f"5 nearest to {query}: {neighbors}")

# cross-check one query against a full scan
distances = pairwise_distances(dataset)
q = dataset.index_of(query)
order = sorted((distances.entries[q, j], j) for j in range(dataset.n) if j != q)
brute = [dataset.entity_ids[j] for _, j in order[:5]]
print("brute force agrees:", neighbors == brute)

# The dense exponential kernel never reaches zero, so its Laplacian
# spectrum decays smoothly; dropping non-neighbor edges restores the
# near-block structure that makes the cluster count visible.
sim = build_similarity(distances)
dense_eigs, _ = sym_eig_topk(normalized_laplacian(sim).entries, 6)
sparse = knn_sparsify(sim, distances, k0=10)
sparse_eigs, _ = sym_eig_topk(normalized_laplacian(sparse).entries, 6)
kept = np.count_nonzero(sparse.entries) - dataset.n
print(f"\nkept {kept} of {dataset.n * (dataset.n - 1)} off-diagonal edges")
print("dense-kernel eigenvalues:  ", np.round(dense_eigs, 3))
print("sparsified eigenvalues:    ", np.round(sparse_eigs, 3))
print("(three leading eigenvalues near 1 = three well-separated clusters)")
