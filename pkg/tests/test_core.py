import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gcransac.core import (
    Labeling,
    ModelKind,
    ModelParams,
    ScoredModel,
    Settings,
    kernel,
    pairwise_cost,
    residual,
    residuals,
    sampson_distance,
    support,
    total_energy,
    unary_cost,
)
from gcransac.errors import InvalidInputError, SingularModelError
from gcransac.neighborhood import NeighborhoodGraph

from conftest import TwoCameras

EPS = 0.31


def line(a, b, c):
    return ModelParams(ModelKind.LINE2D, [a, b, c])


# residuals


def test_residual_point_on_line():
    assert residual(line(0, 1, 0), (5, 0)) == 0


def test_residual_identity_homography():
    assert residual(ModelParams(ModelKind.HOMOGRAPHY, np.eye(3).ravel()), (3, 4, 3, 4)) == 0


def test_residual_line_hand_value():
    assert residual(line(1, 0, -2), (5, 7)) == pytest.approx(3.0, abs=1e-12)


def test_residual_fundamental_exact_correspondence():
    cams = TwoCameras(3)
    pts = cams.correspondences(20)
    f = ModelParams(ModelKind.FUNDAMENTAL, cams.f.ravel())
    assert residuals(f, pts).max() < 1e-9


def test_residual_affine():
    model = ModelParams(ModelKind.AFFINE2D, [1, 0, 2, 0, 1, -1])
    # A p1 + t = (3, 0); distance to (6, 4) is 5
    assert residual(model, (1, 1, 6, 4)) == pytest.approx(5.0)


def test_residual_homography_is_symmetric_transfer():
    h = np.diag([2.0, 2.0, 1.0])
    model = ModelParams(ModelKind.HOMOGRAPHY, h.ravel())
    # forward: H(1,1) = (2,2) vs (3,2) -> 1; backward: H^-1(3,2) = (1.5,1) vs (1,1) -> 0.5
    assert residual(model, (1, 1, 3, 2)) == pytest.approx(0.75)


def test_residual_singular_homography():
    model = ModelParams(ModelKind.HOMOGRAPHY, [1, 0, 0, 0, 1, 0, 0, 0, 0])
    with pytest.raises(SingularModelError):
        residual(model, (1, 1, 1, 1))


def test_residual_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        residual(line(0, 1, 0), (1, 2, 3, 4))
    with pytest.raises(InvalidInputError):
        residuals(ModelParams(ModelKind.HOMOGRAPHY, np.eye(3).ravel()), np.zeros((3, 2)))


def test_sampson_matches_formula():
    rng = np.random.default_rng(1)
    f = rng.normal(size=(3, 3))
    x1, x2 = rng.uniform(0, 100, (5, 2)), rng.uniform(0, 100, (5, 2))
    got = sampson_distance(f, x1, x2)
    for i in range(5):
        a = np.append(x1[i], 1)
        b = np.append(x2[i], 1)
        fa, ftb = f @ a, f.T @ b
        want = abs(b @ f @ a) / math.sqrt(fa[0] ** 2 + fa[1] ** 2 + ftb[0] ** 2 + ftb[1] ** 2)
        assert got[i] == pytest.approx(want, rel=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-50, 50), st.floats(-100, 100), st.floats(-100, 100))
def test_residual_invariant_to_line_sign(a, b, c, x, y):
    if math.hypot(a, b) < 1e-3:
        return
    assert residual(line(a, b, c), (x, y)) == pytest.approx(residual(line(-a, -b, -c), (x, y)), abs=1e-9)


# model normalization


def test_line_normalized():
    m = line(3, 4, 10)
    assert np.allclose(m.theta, [0.6, 0.8, 2.0])


def test_homography_unit_frobenius():
    m = ModelParams(ModelKind.HOMOGRAPHY, 3 * np.eye(3).ravel())
    assert np.linalg.norm(m.theta) == pytest.approx(1.0, abs=1e-9)


def test_fundamental_rank_two():
    m = ModelParams(ModelKind.FUNDAMENTAL, np.random.default_rng(0).normal(size=9))
    s = np.linalg.svd(m.matrix, compute_uv=False)
    assert np.linalg.norm(m.theta) == pytest.approx(1.0, abs=1e-9)
    assert s[2] <= 1e-7 * s[0]


def test_model_params_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        line(0, 0, 1)
    with pytest.raises(InvalidInputError):
        ModelParams(ModelKind.AFFINE2D, [1, 2, 3])
    with pytest.raises(InvalidInputError):
        ModelParams(ModelKind.HOMOGRAPHY, [np.nan] * 9)


def test_model_kind_sample_sizes():
    assert [k.sample_size for k in ModelKind] == [2, 3, 4, 7]
    assert ModelKind.parse("Homography") is ModelKind.HOMOGRAPHY
    with pytest.raises(InvalidInputError):
        ModelKind.parse("essential")


# kernel and energy terms


def test_kernel_values():
    assert kernel(0, EPS) == 1.0
    assert kernel(EPS, EPS) == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert kernel(EPS, EPS) == pytest.approx(0.60653, abs=1e-5)
    assert kernel(3 * EPS, EPS) == pytest.approx(math.exp(-4.5), rel=1e-12)
    assert kernel(3 * EPS, EPS) == pytest.approx(0.01111, abs=1e-5)
    assert kernel(math.inf, EPS) == 0.0


def test_kernel_clamps_tiny_values():
    # exp(-50) ~ 2e-22 is below the floor
    assert kernel(10 * EPS, EPS) == 0.0
    assert np.all(kernel(np.array([0.0, 100.0]), EPS) == [1.0, 0.0])


@given(st.floats(0, 20), st.floats(0, 20), st.floats(0.01, 5))
def test_kernel_monotone(d1, d2, eps):
    lo, hi = sorted((d1, d2))
    assert 0.0 <= kernel(hi, eps) <= kernel(lo, eps) <= 1.0


def test_unary_cost_values():
    assert unary_cost(1, 0, EPS) == 0.0
    assert unary_cost(0, 0, EPS) == 1.0
    assert unary_cost(1, EPS, EPS) == pytest.approx(1 - math.exp(-0.5))
    assert unary_cost(1, EPS, EPS) == pytest.approx(0.39347, abs=1e-5)


@given(st.floats(0, 10), st.floats(0.01, 5))
def test_unary_costs_sum_to_one(d, eps):
    assert unary_cost(1, d, eps) + unary_cost(0, d, eps) == pytest.approx(1.0)


def test_pairwise_cost_values():
    assert pairwise_cost(1, 0, 0.3, 0.9) == 1.0
    assert pairwise_cost(0, 1, 0.0, 0.0) == 1.0
    assert pairwise_cost(1, 1, 1, 1) == 0.0
    assert pairwise_cost(0, 0, 0.8, 0.6) == pytest.approx(0.7)


@given(st.floats(0, 1), st.floats(0, 1))
def test_pairwise_cost_submodular(kp, kq):
    c = {(a, b): pairwise_cost(a, b, kp, kq) for a in (0, 1) for b in (0, 1)}
    assert c[0, 0] + c[1, 1] == pytest.approx(1.0)
    assert c[0, 1] + c[1, 0] == 2.0


# support


def test_support_all_on_model():
    pts = np.column_stack([np.arange(10.0), np.zeros(10)])
    w, lab = support(line(0, 1, 0), pts, EPS)
    assert w == 10.0
    assert lab.inlier_count == 10


def test_support_far_points():
    pts = np.column_stack([np.arange(10.0), np.full(10, 10 * EPS)])
    w, lab = support(line(0, 1, 0), pts, EPS)
    assert w < 10 * math.exp(-50)
    assert lab.inlier_count == 0


def test_support_hand_value():
    pts = np.array([[0.0, 0.0], [1.0, EPS], [2.0, 2 * EPS]])
    w, lab = support(line(0, 1, 0), pts, EPS)
    assert w == pytest.approx(1 + math.exp(-0.5) + math.exp(-2), rel=1e-12)
    assert w == pytest.approx(1.74186, abs=1e-5)
    # threshold is strict: the point at exactly epsilon is an outlier
    assert lab.labels.tolist() == [True, False, False]


def test_support_tophat():
    pts = np.array([[0.0, 0.0], [1.0, 0.1], [2.0, 1.0]])
    w, _ = support(line(0, 1, 0), pts, EPS, loss="tophat")
    assert w == 2.0


# total energy


def chain_points():
    # three points on the y axis with residuals 0, eps, 2 eps to the line y = 0
    return np.array([[0.0, 0.0], [5.0, EPS], [10.0, 2 * EPS]])


def test_total_energy_zero_on_model():
    pts = np.column_stack([np.arange(5.0) * 3, np.zeros(5)])
    nb = NeighborhoodGraph.from_edges(5, [(0, 1), (1, 2)])
    e = total_energy(Labeling(np.ones(5, bool)), line(0, 1, 0), nb, Settings(lambda_=0.0), pts)
    assert e == 0.0


def test_total_energy_empty_neighborhood_is_unary_sum():
    pts = chain_points()
    nb = NeighborhoodGraph.from_edges(3, [])
    lab = Labeling([True, False, True])
    k = [1.0, math.exp(-0.5), math.exp(-2)]
    want = (1 - k[0]) + k[1] + (1 - k[2])
    assert total_energy(lab, line(0, 1, 0), nb, Settings(lambda_=1.0), pts) == pytest.approx(want, abs=1e-12)


def test_total_energy_chain_hand_value():
    pts = chain_points()
    nb = NeighborhoodGraph.from_edges(3, [(0, 1), (1, 2)])
    lab = Labeling([True, True, False])
    k0, k1, k2 = 1.0, math.exp(-0.5), math.exp(-2)
    unary = (1 - k0) + (1 - k1) + k2
    pair = (1 - (k0 + k1) / 2) + 1.0
    e = total_energy(lab, line(0, 1, 0), nb, Settings(lambda_=0.5), pts)
    assert e == pytest.approx(unary + 0.5 * pair, abs=1e-12)


def test_total_energy_size_mismatch():
    pts = chain_points()
    nb = NeighborhoodGraph.from_edges(3, [])
    with pytest.raises(InvalidInputError):
        total_energy(Labeling([True, False]), line(0, 1, 0), nb, Settings(), pts)
    with pytest.raises(InvalidInputError):
        total_energy(Labeling([True] * 3), line(0, 1, 0), NeighborhoodGraph.from_edges(4, []), Settings(), pts)


# value types


def test_labeling_count():
    lab = Labeling([1, 0, 1, 1])
    assert lab.inlier_count == 3
    assert lab.inliers.tolist() == [0, 2, 3]
    assert len(lab) == 4


def test_settings_defaults_and_validation():
    s = Settings()
    assert (s.epsilon, s.radius, s.lambda_, s.eps_conf, s.confidence) == (0.31, 20.0, 0.1, 10.0, 0.95)
    for bad in (dict(epsilon=0), dict(radius=-1), dict(lambda_=-0.1), dict(eps_conf=0.5),
                dict(confidence=1.0), dict(confidence=0.0), dict(max_iterations=0), dict(loss="huber")):
        with pytest.raises(InvalidInputError):
            Settings(**bad)


def test_scored_model_fields():
    sm = ScoredModel(line(0, 1, 0), Labeling([True, False]), 1.0, 3, 0.5, 1, (0, 1))
    assert sm.support <= len(sm.labeling)
    assert 0 <= sm.found_inlier_ratio <= 1
