"""Cover-tree index for exact nearest-neighbor queries under the ECDF metric.

A cover tree arranges entities on integer levels with scale base 2 and
maintains three invariants:

* nesting: an entity present at level l stays present at every lower level
  (represented implicitly through self-descent);
* covering: an explicit node at level l - 1 is within 2**l of its parent;
* separation: any two entities present at level l are more than 2**l apart.

Entities whose ECDFs coincide (distance exactly 0) can never satisfy
separation at any level, so they are stored on the node of their first
occurrence and reported as distance-0 neighbors by queries.

Queries are exact: they return the same ordered neighbor list as a brute
force scan, with distance ties broken by the smaller entity index.
"""

from __future__ import annotations

import numpy as np

from .ecdf import Dataset, _padded_cum, _w1
from .errors import CoverTreeInvariantError, KOutOfRange, UnknownEntity

__all__ = ["CoverTree", "cover_tree_build", "cover_tree_knn"]


class CoverTree:
    """Metric tree over the entities of a dataset. Build via :meth:`build`."""

    def __init__(self, dataset: Dataset):
        self._ids = list(dataset.entity_ids)
        self._supports = [e.support for e in dataset.ecdfs]
        self._cums = [_padded_cum(e) for e in dataset.ecdfs]
        self._cache: dict[tuple[int, int], float] = {}
        self._index = {e: i for i, e in enumerate(self._ids)}
        self.root: int | None = None
        self.top_level = 0
        self.min_level = 0
        # parent index -> list of (child index, child level)
        self.children: dict[int, list[tuple[int, int]]] = {}
        # representative index -> level of its explicit node (root excluded)
        self.node_level: dict[int, int] = {}
        # representative index -> entities co-located with it (distance 0)
        self.duplicates: dict[int, list[int]] = {}
        self._rep_of: dict[int, int] = {}

    # -- construction --------------------------------------------------------

    @classmethod
    def build(cls, dataset: Dataset) -> "CoverTree":
        tree = cls(dataset)
        for i in range(dataset.n):
            tree._insert(i)
        return tree

    def distance(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        key = (i, j) if i < j else (j, i)
        d = self._cache.get(key)
        if d is None:
            d = _w1(self._supports[i], self._cums[i], self._supports[j], self._cums[j])
            self._cache[key] = d
        return d

    def _insert(self, p: int) -> None:
        if self.root is None:
            self.root = p
            self._rep_of[p] = p
            return
        d_root = self.distance(p, self.root)
        if d_root == 0.0:
            self._attach_duplicate(p, self.root)
            return
        while d_root > 2.0 ** self.top_level:
            self.top_level += 1
        placed = self._descend(p, [self.root], self.top_level)
        if not placed:  # cannot happen: the root covers everything at top_level
            raise AssertionError("cover-tree insertion failed to place a point")

    def _attach_duplicate(self, p: int, rep: int) -> None:
        self.duplicates.setdefault(rep, []).append(p)
        self._rep_of[p] = rep

    def _descend(self, p: int, q_set: list[int], level: int) -> bool:
        """Classic recursive insertion over cover sets.

        ``q_set`` is the portion of the level-``level`` cover set that can
        still cover ``p``. Returns True once ``p`` is attached (or stored
        as a co-located duplicate).
        """
        radius = 2.0 ** level
        expanded = list(q_set)
        for q in q_set:
            for child, child_level in self.children.get(q, ()):
                if child_level == level - 1:
                    expanded.append(child)
        dists = [(self.distance(p, q), q) for q in expanded]
        d_min = min(d for d, _ in dists)
        if d_min == 0.0:
            rep = min(q for d, q in dists if d == 0.0)
            self._attach_duplicate(p, rep)
            return True
        if d_min > radius:
            return False
        next_set = [q for d, q in dists if d <= radius]
        if self._descend(p, next_set, level - 1):
            return True
        parent_candidates = [(self.distance(p, q), q) for q in q_set]
        d_parent, parent = min(parent_candidates)
        if d_parent > radius:
            return False
        self.children.setdefault(parent, []).append((p, level - 1))
        self.node_level[p] = level - 1
        self._rep_of[p] = p
        self.min_level = min(self.min_level, level - 1)
        return True

    # -- queries --------------------------------------------------------------

    def knn(self, query_id: str, k: int) -> list[str]:
        """The k nearest entities to ``query_id``, nearest first.

        The query entity itself is excluded; ties are broken by the smaller
        entity index, matching a brute-force scan exactly.
        """
        if query_id not in self._index:
            raise UnknownEntity(f"entity {query_id!r} not in the tree")
        q = self._index[query_id]
        n = len(self._ids)
        if not 1 <= k <= n - 1:
            raise KOutOfRange(f"k={k} outside [1, {n - 1}]")

        seen: dict[int, float] = {self.root: self.distance(q, self.root)}
        frontier = [self.root]
        for level in range(self.top_level, self.min_level - 1, -1):
            new = []
            for node in frontier:
                for child, child_level in self.children.get(node, ()):
                    if child_level == level - 1 and child not in seen:
                        seen[child] = self.distance(q, child)
                        new.append(child)
            frontier = frontier + new
            dk = self._kth_distance(seen, q, k)
            bound = dk + 2.0 ** level
            frontier = [node for node in frontier if seen[node] <= bound]

        pool = self._expand_pool(seen, q)
        pool.sort()
        return [self._ids[idx] for _, idx in pool[:k]]

    def _expand_pool(self, seen: dict[int, float], q: int) -> list[tuple[float, int]]:
        pool = []
        for rep, dist in seen.items():
            for entity in (rep, *self.duplicates.get(rep, ())):
                if entity != q:
                    pool.append((dist, entity))
        return pool

    def _kth_distance(self, seen, q, k) -> float:
        dists = sorted(d for d, _ in self._expand_pool(seen, q))
        return dists[k - 1] if len(dists) >= k else np.inf

    # -- verification ----------------------------------------------------------

    def audit(self) -> dict:
        """Check nesting, covering and separation over the whole structure.

        Raises :class:`CoverTreeInvariantError` on the first violation;
        returns a small summary otherwise.
        """
        n = len(self._ids)
        if self.root is None:
            raise CoverTreeInvariantError("empty tree")
        reps = {self.root, *self.node_level}
        placed = set(reps)
        for rep, dups in self.duplicates.items():
            if rep not in reps:
                raise CoverTreeInvariantError(f"duplicates attached to non-node {rep}")
            for entity in dups:
                if self.distance(rep, entity) != 0.0:
                    raise CoverTreeInvariantError(
                        f"entity {entity} stored as duplicate of {rep} at distance > 0")
            placed.update(dups)
        if placed != set(range(n)):
            raise CoverTreeInvariantError("some entities are missing from the tree")

        # nesting: children live strictly below their parent's top level, and
        # every non-root representative has exactly one explicit node
        child_count: dict[int, int] = {}
        for parent, kids in self.children.items():
            parent_top = self.top_level if parent == self.root else self.node_level[parent]
            for child, child_level in kids:
                child_count[child] = child_count.get(child, 0) + 1
                if child_level >= parent_top:
                    raise CoverTreeInvariantError(
                        f"child {child} at level {child_level} not below parent {parent}")
                if self.node_level.get(child) != child_level:
                    raise CoverTreeInvariantError(f"child {child} level mismatch")
                # covering: a level l-1 node lies within 2**l of its parent
                if self.distance(parent, child) > 2.0 ** (child_level + 1):
                    raise CoverTreeInvariantError(
                        f"covering violated for edge {parent} -> {child}")
        if any(c != 1 for c in child_count.values()) or set(child_count) != set(self.node_level):
            raise CoverTreeInvariantError("an entity has a wrong number of explicit nodes")

        # separation: entities present at level l are more than 2**l apart
        for level in range(self.top_level, self.min_level - 1, -1):
            present = [self.root] + [e for e, l in self.node_level.items() if l >= level]
            threshold = 2.0 ** level
            for a_pos, a in enumerate(present):
                for b in present[a_pos + 1:]:
                    if self.distance(a, b) <= threshold:
                        raise CoverTreeInvariantError(
                            f"separation violated at level {level} for {a}, {b}")
        return {
            "entities": n,
            "representatives": len(reps),
            "top_level": self.top_level,
            "min_level": self.min_level,
        }


def cover_tree_build(dataset: Dataset) -> CoverTree:
    """Build a cover tree over all entities of ``dataset``."""
    return CoverTree.build(dataset)


def cover_tree_knn(tree: CoverTree, query_id: str, k: int) -> list[str]:
    """Exact k-nearest-neighbor query on a built tree."""
    return tree.knn(query_id, k)
