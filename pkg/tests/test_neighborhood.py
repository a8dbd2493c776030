import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gcransac.errors import InvalidInputError
from gcransac.neighborhood import NeighborhoodGraph, brute_force_neighborhood, build_neighborhood


def pairwise_oracle(points, r):
    pts = np.asarray(points, dtype=float)
    out = set()
    for p in range(len(pts)):
        for q in range(p + 1, len(pts)):
            if np.sqrt(np.sum((pts[p] - pts[q]) ** 2)) <= r:
                out.add((p, q))
    return out


def test_boundary_inclusive():
    g = build_neighborhood([(0.0, 0.0), (3.0, 4.0)], 5.0)
    assert g.edge_set() == {(0, 1)}


def test_far_points_empty():
    g = build_neighborhood([(0, 0), (100, 0), (0, 100)], 20)
    assert g.n_edges == 0


def test_zero_and_one_point():
    assert build_neighborhood(np.zeros((0, 2)), 1).n_edges == 0
    assert build_neighborhood([(1, 1)], 1).n_edges == 0


def test_random_4d_matches_quadratic_scan():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 100, (500, 4))
    g = build_neighborhood(pts, 20)
    assert g.edge_set() == pairwise_oracle(pts, 20)
    assert g.n_edges > 0


def test_graph_structure():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 50, (200, 2))
    g = build_neighborhood(pts, 5)
    assert np.all(g.edges[:, 0] < g.edges[:, 1])
    assert len(g.edge_set()) == g.n_edges
    for p in range(len(pts)):
        for q in g.neighbors(p):
            assert p in g.neighbors(q)
        assert g.degree(p) == len(g.neighbors(p))


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4]), st.floats(0.1, 30))
def test_matches_brute_force(seed, dim, r):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 60, (int(rng.integers(0, 80)), dim))
    # snap to a grid so that exact-boundary distances occur
    pts = np.round(pts)
    assert build_neighborhood(pts, r).edge_set() == brute_force_neighborhood(pts, r).edge_set()


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 8.0]))
def test_scale_invariance(seed, factor):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 100, (120, 2))
    a = build_neighborhood(pts, 10)
    b = build_neighborhood(pts * factor, 10 * factor)
    assert a.edge_set() == b.edge_set()


def test_sub_quadratic_smoke():
    rng = np.random.default_rng(2)
    small, large = rng.uniform(0, 600, (1000, 2)), rng.uniform(0, 1200, (4000, 2))
    t0 = time.perf_counter()
    build_neighborhood(small, 20)
    t1 = time.perf_counter()
    build_neighborhood(large, 20)
    t2 = time.perf_counter()
    # same density, 4x the points: a quadratic scan would take ~16x
    assert (t2 - t1) < 12 * max(t1 - t0, 1e-3)


def test_invalid_inputs():
    with pytest.raises(InvalidInputError):
        build_neighborhood([(0, 0), (1, 1)], 0)
    with pytest.raises(InvalidInputError):
        NeighborhoodGraph.from_edges(3, [(1, 1)])
    with pytest.raises(InvalidInputError):
        NeighborhoodGraph.from_edges(3, [(0, 3)])


def test_from_edges_dedups():
    g = NeighborhoodGraph.from_edges(4, [(2, 1), (1, 2), (0, 3)])
    assert g.edge_set() == {(0, 3), (1, 2)}
