"""Minimal and least-squares solvers for every model kind."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ModelKind, ModelParams, as_points
from .errors import DegenerateSampleError, InsufficientDataError, InvalidInputError

CONDITION_CAP = 1e12
ROOT_IMAG_TOL = 1e-10
COLLINEAR_TOL = 1e-9


@dataclass(frozen=True)
class MinimalSample:
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise InvalidInputError("sample indices must be distinct")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class SolverResult:
    models: list = field(default_factory=list)

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)


def hartley_normalize(points) -> tuple[np.ndarray, np.ndarray]:
    """Similarity moving the centroid to the origin with mean distance sqrt(2).

    Returns the 3x3 transform and the transformed ``(N, 2)`` points.
    """
    pts = as_points(points, 2)
    if len(pts) < 2:
        raise DegenerateSampleError("normalization needs at least 2 points")
    centroid = pts.mean(axis=0)
    shifted = pts - centroid
    mean_dist = np.mean(np.hypot(shifted[:, 0], shifted[:, 1]))
    if mean_dist <= 1e-12 * max(1.0, float(np.abs(centroid).max())):
        raise DegenerateSampleError("all points coincide")
    scale = math.sqrt(2.0) / mean_dist
    t = np.array([
        [scale, 0.0, -scale * centroid[0]],
        [0.0, scale, -scale * centroid[1]],
        [0.0, 0.0, 1.0],
    ])
    return t, shifted * scale


def _null_vector(a: np.ndarray, nullity: int = 1) -> np.ndarray:
    """Right singular vectors of the ``nullity`` smallest singular values.

    Rejects systems whose remaining rank is numerically deficient.
    """
    _, s, vt = np.linalg.svd(a)
    rank = a.shape[1] - nullity
    if rank > len(s) or s[0] == 0 or s[rank - 1] < s[0] / CONDITION_CAP:
        raise DegenerateSampleError("design matrix is rank deficient")
    return vt[-nullity:]


def _collinear(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> bool:
    u, v = q - p, r - p
    scale = max(np.dot(u, u), np.dot(v, v), 1e-300)
    return abs(u[0] * v[1] - u[1] * v[0]) <= COLLINEAR_TOL * scale


def _prepare(kind, points, weights=None):
    kind = ModelKind.parse(kind)
    pts = as_points(points, kind.point_dim)
    if weights is None:
        return kind, pts, None
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != len(pts):
        raise InvalidInputError("one weight per point is required")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be finite and non-negative")
    keep = w > 0
    pts, w = pts[keep], w[keep]
    if len(w) and np.all(w == w[0]):
        return kind, pts, None
    return kind, pts, w / w.max() if len(w) else w


# lines


def _line_through(p, q) -> ModelParams:
    d = q - p
    if np.hypot(*d) <= 1e-12 * max(1.0, np.abs(p).max()):
        raise DegenerateSampleError("line sample points coincide")
    return ModelParams(ModelKind.LINE2D, [d[1], -d[0], d[0] * p[1] - d[1] * p[0]])


def _line_tls(pts, w) -> ModelParams:
    if w is None:
        centroid = pts.mean(axis=0)
        centered = pts - centroid
        cov = centered.T @ centered
    else:
        centroid = (w[:, None] * pts).sum(axis=0) / w.sum()
        centered = pts - centroid
        cov = (w[:, None] * centered).T @ centered
    evals, evecs = np.linalg.eigh(cov)
    if evals[1] <= 0 or evals[1] - evals[0] <= 1e-12 * evals[1]:
        raise DegenerateSampleError("points do not define a direction")
    normal = evecs[:, 0]
    return ModelParams(ModelKind.LINE2D, [normal[0], normal[1], -normal @ centroid])


# affine


def _affine(pts, w) -> ModelParams:
    x1, x2 = pts[:, :2], pts[:, 2:]
    a = np.column_stack([x1, np.ones(len(x1))])
    if w is not None:
        sw = np.sqrt(w)[:, None]
        a, x2 = a * sw, x2 * sw
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] < s[0] / CONDITION_CAP:
        raise DegenerateSampleError("affine design matrix is rank deficient")
    sol, *_ = np.linalg.lstsq(a, x2, rcond=None)
    return ModelParams(ModelKind.AFFINE2D, sol.T.ravel())


# homography


def _homography_dlt(pts, w) -> ModelParams:
    t1, n1 = hartley_normalize(pts[:, :2])
    t2, n2 = hartley_normalize(pts[:, 2:])
    x, y = n1[:, 0], n1[:, 1]
    u, v = n2[:, 0], n2[:, 1]
    zero, one = np.zeros(len(x)), np.ones(len(x))
    rows_a = np.column_stack([-x, -y, -one, zero, zero, zero, u * x, u * y, u])
    rows_b = np.column_stack([zero, zero, zero, -x, -y, -one, v * x, v * y, v])
    if w is not None:
        sw = np.sqrt(w)[:, None]
        rows_a, rows_b = rows_a * sw, rows_b * sw
    a = np.empty((2 * len(x), 9))
    a[0::2], a[1::2] = rows_a, rows_b
    h = _null_vector(a).reshape(3, 3)
    h = np.linalg.inv(t2) @ h @ t1
    return ModelParams(ModelKind.HOMOGRAPHY, h)


def _homography_sample_degenerate(pts) -> bool:
    for img in (pts[:, :2], pts[:, 2:]):
        for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
            if _collinear(img[i], img[j], img[k]):
                return True
    return False


# fundamental


def _epipolar_rows(n1, n2) -> np.ndarray:
    x, y = n1[:, 0], n1[:, 1]
    u, v = n2[:, 0], n2[:, 1]
    return np.column_stack([u * x, u * y, u, v * x, v * y, v, x, y, np.ones(len(x))])


def solve_cubic(a: float, b: float, c: float, d: float) -> list[float]:
    """Real roots of ``a t^3 + b t^2 + c t + d`` in closed form.

    Uses the trigonometric method for three real roots and Cardano's formula
    otherwise; a numerically vanishing leading coefficient falls back to the
    quadratic. Repeated roots are returned once.
    """
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0:
        return []
    a, b, c, d = a / scale, b / scale, c / scale, d / scale
    if abs(a) < 1e-12:
        return _solve_quadratic(b, c, d)
    b, c, d = b / a, c / a, d / a
    # depressed cubic t = s - b/3:  s^3 + p s + q = 0
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc < 0:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * q / (p * r)))
        phi = math.acos(arg) / 3.0
        roots = [r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
    else:
        sq = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + sq) ** (1 / 3), -q / 2.0 + sq)
        v = math.copysign(abs(-q / 2.0 - sq) ** (1 / 3), -q / 2.0 - sq)
        roots = [u + v]
        # the complex pair -(u+v)/2 +- i*sqrt(3)/2*(u-v) counts as real when nearly so
        if 0.5 * math.sqrt(3.0) * abs(u - v) <= ROOT_IMAG_TOL * max(1.0, abs(u + v)):
            roots.append(-0.5 * (u + v))
    out = []
    for s in sorted(roots):
        t = s - shift
        # one Newton step polishes the closed form
        f = ((t + b) * t + c) * t + d
        df = (3.0 * t + 2.0 * b) * t + c
        if df != 0:
            t -= f / df
        if not out or abs(t - out[-1]) > 1e-12 * max(1.0, abs(t)):
            out.append(t)
    return out


def _solve_quadratic(a, b, c) -> list[float]:
    if abs(a) < 1e-12:
        return [] if abs(b) < 1e-12 else [-c / b]
    disc = b * b - 4 * a * c
    if disc < -ROOT_IMAG_TOL * max(1.0, b * b):
        return []
    sq = math.sqrt(max(disc, 0.0))
    q = -0.5 * (b + math.copysign(sq, b))
    roots = {q / a} if q == 0 else {q / a, c / q}
    return sorted(roots)


def _seven_point(pts) -> list[ModelParams]:
    t1, n1 = hartley_normalize(pts[:, :2])
    t2, n2 = hartley_normalize(pts[:, 2:])
    basis = _null_vector(_epipolar_rows(n1, n2), nullity=2)
    f1, f2 = basis[0].reshape(3, 3), basis[1].reshape(3, 3)
    # det(s F1 + (1 - s) F2) is cubic in s; interpolate it from four samples
    samples = np.array([-1.0, 0.0, 1.0, 2.0])
    dets = [np.linalg.det(s * f1 + (1 - s) * f2) for s in samples]
    coeffs = np.linalg.solve(np.vander(samples, 4), dets)
    models = []
    for s in solve_cubic(*coeffs):
        f = s * f1 + (1 - s) * f2
        f = t2.T @ f @ t1
        if np.linalg.norm(f) == 0:
            continue
        models.append(ModelParams(ModelKind.FUNDAMENTAL, f))
    if not models:
        raise DegenerateSampleError("seven-point cubic has no real root")
    return models


def _eight_point(pts, w) -> ModelParams:
    t1, n1 = hartley_normalize(pts[:, :2])
    t2, n2 = hartley_normalize(pts[:, 2:])
    a = _epipolar_rows(n1, n2)
    if w is not None:
        a = a * np.sqrt(w)[:, None]
    f = _null_vector(a).reshape(3, 3)
    u, s, vt = np.linalg.svd(f)
    s[2] = 0.0
    f = t2.T @ ((u * s) @ vt) @ t1
    return ModelParams(ModelKind.FUNDAMENTAL, f)


def oriented_epipolar_check(model: ModelParams, sample) -> bool:
    """True when every correspondence sees the epipolar geometry with the same orientation.

    The sign of ``(e' x x'_i) . (F x_i)`` must agree over the sample, where
    ``e'`` spans the null space of ``F^T``.
    """
    if model.kind is not ModelKind.FUNDAMENTAL:
        raise InvalidInputError("oriented check applies to fundamental matrices")
    pts = np.asarray(sample, dtype=float).reshape(-1, 4)
    if len(pts) == 0:
        return True
    f = model.matrix
    _, s, vt = np.linalg.svd(f.T)
    if s[0] == 0 or s[1] < 1e-10 * s[0]:
        return False
    epipole = vt[-1]
    x1 = np.column_stack([pts[:, :2], np.ones(len(pts))])
    x2 = np.column_stack([pts[:, 2:], np.ones(len(pts))])
    signs = np.einsum("ij,ij->i", np.cross(epipole, x2), x1 @ f.T)
    scale = np.linalg.norm(epipole) * np.linalg.norm(x2, axis=1) * np.linalg.norm(x1, axis=1)
    # correspondences sitting on the epipole carry no orientation
    signs = signs[np.abs(signs) > 1e-12 * scale]
    return bool(np.all(signs > 0) or np.all(signs < 0))


def fit_minimal(kind, points) -> SolverResult:
    """Models determined by exactly ``m`` points of the given kind.

    Raises :class:`DegenerateSampleError` for configurations without a unique
    solution (coincident points, collinear affine triples, three collinear
    points in a homography sample, rank-deficient seven-point systems).
    """
    kind, pts, _ = _prepare(kind, points)
    m = kind.sample_size
    if len(pts) != m:
        raise InvalidInputError(f"{kind.value} minimal sample needs exactly {m} points, got {len(pts)}")
    if kind is ModelKind.LINE2D:
        return SolverResult([_line_through(pts[0], pts[1])])
    if kind is ModelKind.AFFINE2D:
        if _collinear(*pts[:, :2]) or _collinear(*pts[:, 2:]):
            raise DegenerateSampleError("affine sample is collinear")
        return SolverResult([_affine(pts, None)])
    if kind is ModelKind.HOMOGRAPHY:
        if _homography_sample_degenerate(pts):
            raise DegenerateSampleError("three points of the homography sample are collinear")
        return SolverResult([_homography_dlt(pts, None)])
    return SolverResult(_seven_point(pts))


def fit_lsq(kind, points, weights: Optional[np.ndarray] = None) -> SolverResult:
    """Least-squares model from any number ``>= m`` of points.

    Lines use total least squares, affine maps ordinary least squares,
    homographies the normalized DLT and fundamental matrices the normalized
    eight-point algorithm. With exactly seven points the fundamental case is
    solved by the seven-point method and may return up to three models.
    Zero-weight points are ignored.
    """
    kind, pts, w = _prepare(kind, points, weights)
    m = kind.sample_size
    if len(pts) < m:
        raise InsufficientDataError(f"{kind.value} fit needs >= {m} points, got {len(pts)}")
    if kind is ModelKind.LINE2D:
        return SolverResult([_line_tls(pts, w)])
    if kind is ModelKind.AFFINE2D:
        return SolverResult([_affine(pts, w)])
    if kind is ModelKind.HOMOGRAPHY:
        return SolverResult([_homography_dlt(pts, w)])
    if len(pts) == m:
        return SolverResult(_seven_point(pts))
    return SolverResult([_eight_point(pts, w)])
