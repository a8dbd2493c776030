"""Fixed-radius neighborhood graph via uniform grid hashing."""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .core import as_points
from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class NeighborhoodGraph:
    """Undirected edges ``(p, q)`` with ``p < q``, sorted lexicographically.

    ``indptr``/``indices`` hold a CSR adjacency so that ``neighbors(p)`` is a
    slice lookup.
    """

    n_points: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n_points: int, edges) -> "NeighborhoodGraph":
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(e):
            if np.any(e[:, 0] == e[:, 1]):
                raise InvalidInputError("self-loops are not allowed")
            if e.min() < 0 or e.max() >= n_points:
                raise InvalidInputError("edge index out of range")
            e = np.sort(e, axis=1)
            e = np.unique(e, axis=0)
        both = np.concatenate([e, e[:, ::-1]]) if len(e) else e
        order = np.lexsort((both[:, 1], both[:, 0])) if len(both) else np.empty(0, dtype=np.int64)
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=n_points) if len(both) else np.zeros(n_points, dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        indices = both[:, 1].copy() if len(both) else np.empty(0, dtype=np.int64)
        for arr in (e, indptr, indices):
            arr.setflags(write=False)
        return cls(int(n_points), e, indptr, indices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, p: int) -> np.ndarray:
        return self.indices[self.indptr[p]:self.indptr[p + 1]]

    def degree(self, p: int) -> int:
        return int(self.indptr[p + 1] - self.indptr[p])

    def edge_set(self) -> set:
        return {(int(p), int(q)) for p, q in self.edges}


def build_neighborhood(points, radius: float) -> NeighborhoodGraph:
    """All pairs of points within Euclidean distance ``radius`` (inclusive).

    Points are hashed into cubic cells of side ``radius``; each cell is
    compared against itself and its lexicographically larger neighbours among
    the ``3**n`` surrounding cells, so every pair is tested once.
    """
    if not radius > 0:
        raise InvalidInputError(f"radius must be > 0, got {radius}")
    pts = as_points(points)
    n, dim = pts.shape
    if n < 2:
        return NeighborhoodGraph.from_edges(n, np.empty((0, 2), dtype=np.int64))

    # slightly enlarged cells keep boundary pairs inside adjacent cells despite rounding
    cells = np.floor(pts / (radius * (1.0 + 1e-9))).astype(np.int64)
    buckets = defaultdict(list)
    for i, key in enumerate(map(tuple, cells)):
        buckets[key].append(i)
    buckets = {key: np.asarray(idx, dtype=np.int64) for key, idx in buckets.items()}

    offsets = [off for off in itertools.product((-1, 0, 1), repeat=dim) if off > (0,) * dim]
    r2 = radius * radius
    found = []
    for key, members in buckets.items():
        here = pts[members]
        if len(members) > 1:
            d2 = _sq_dist(here, here)
            a, b = np.nonzero(np.triu(d2 <= r2, k=1))
            if len(a):
                found.append(np.column_stack([members[a], members[b]]))
        for off in offsets:
            other = buckets.get(tuple(k + o for k, o in zip(key, off)))
            if other is None:
                continue
            d2 = _sq_dist(here, pts[other])
            a, b = np.nonzero(d2 <= r2)
            if len(a):
                found.append(np.column_stack([members[a], other[b]]))
    edges = np.concatenate(found) if found else np.empty((0, 2), dtype=np.int64)
    return NeighborhoodGraph.from_edges(n, edges)


def brute_force_neighborhood(points, radius: float) -> NeighborhoodGraph:
    """Quadratic pairwise scan with the same inclusive ``<= radius`` rule."""
    pts = as_points(points)
    d2 = _sq_dist(pts, pts)
    a, b = np.nonzero(np.triu(d2 <= radius * radius, k=1))
    return NeighborhoodGraph.from_edges(len(pts), np.column_stack([a, b]))


def _sq_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)
