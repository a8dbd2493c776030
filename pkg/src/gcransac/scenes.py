"""Synthetic scenes with known ground truth.

Line scenes follow the 600 x 600 window protocol: 100 inliers on a random
line (straight, or dashed around 10 knots) plus uniform outliers. Two-view
scenes produce exact correspondences of a random affinity, homography or
calibrated camera pair.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ModelKind, ModelParams, residuals
from .errors import InvalidInputError
from .estimators import fit_minimal

WINDOW = 600.0
LINE_INLIERS = 100
KNOTS = 10
KNOT_SPREAD = 10.0


@dataclass(frozen=True, eq=False)
class SyntheticLineScene:
    points: np.ndarray
    ground_truth: ModelParams
    inlier_mask: np.ndarray
    sigma: float
    outlier_count: int
    style: str


@dataclass(frozen=True, eq=False)
class SyntheticTwoViewScene:
    points: np.ndarray
    ground_truth: ModelParams
    inlier_mask: np.ndarray
    sigma: float
    outlier_count: int
    cameras: Optional[tuple] = None


def _clip_segment(normal, c, size=WINDOW):
    """End points of the line ``normal . x + c = 0`` inside ``[0, size]^2``."""
    a, b = normal
    hits = []
    for x in (0.0, size):
        if abs(b) > 1e-15:
            y = -(a * x + c) / b
            if 0.0 <= y <= size:
                hits.append((x, y))
    for y in (0.0, size):
        if abs(a) > 1e-15:
            x = -(b * y + c) / a
            if 0.0 <= x <= size:
                hits.append((x, y))
    if len(hits) < 2:
        return None
    hits = np.asarray(hits)
    # farthest pair, corners may be reported twice
    d = np.linalg.norm(hits[:, None] - hits[None], axis=2)
    i, j = np.unravel_index(np.argmax(d), d.shape)
    if d[i, j] <= 1e-9:
        return None
    return hits[i], hits[j]


def _random_line(rng):
    while True:
        p, q = rng.uniform(0.0, WINDOW, size=(2, 2))
        d = q - p
        if np.hypot(*d) < 1e-6:
            continue
        normal = np.array([d[1], -d[0]]) / np.hypot(*d)
        c = -normal @ p
        segment = _clip_segment(normal, c)
        if segment is not None:
            return ModelParams(ModelKind.LINE2D, [normal[0], normal[1], c]), segment


def gen_line_scene(style: str, sigma: float, outlier_count: int, seed: int) -> SyntheticLineScene:
    """Random line scene; a pure function of its arguments.

    ``straight`` spreads the 100 inliers uniformly in arc length over the
    visible segment. ``dashed`` drops 10 knots on the segment and samples 10
    points per knot, uniformly within 10 px along the line. Gaussian noise of
    std ``sigma`` is added to both coordinates, then the points are clipped to
    the window. Points are shuffled; ``inlier_mask`` marks the line samples.
    """
    if style not in ("straight", "dashed"):
        raise InvalidInputError(f"unknown line style {style!r}")
    if sigma < 0 or outlier_count < 0:
        raise InvalidInputError("sigma and outlier_count must be non-negative")
    rng = np.random.default_rng(seed)
    model, (start, end) = _random_line(rng)
    length = float(np.linalg.norm(end - start))
    direction = (end - start) / length

    if style == "straight":
        t = rng.uniform(0.0, length, LINE_INLIERS)
    else:
        lo, hi = (KNOT_SPREAD, length - KNOT_SPREAD) if length > 2 * KNOT_SPREAD else (0.0, length)
        knots = rng.uniform(lo, hi, KNOTS)
        t = (knots[:, None] + rng.uniform(-KNOT_SPREAD, KNOT_SPREAD, (KNOTS, LINE_INLIERS // KNOTS))).ravel()
        t = np.clip(t, 0.0, length)
    inliers = start + t[:, None] * direction
    inliers = inliers + rng.normal(0.0, sigma, inliers.shape) if sigma > 0 else inliers
    outliers = rng.uniform(0.0, WINDOW, (int(outlier_count), 2))
    pts = np.clip(np.vstack([inliers, outliers]), 0.0, WINDOW)
    mask = np.zeros(len(pts), dtype=bool)
    mask[:LINE_INLIERS] = True
    order = rng.permutation(len(pts))
    return SyntheticLineScene(pts[order], model, mask[order], float(sigma), int(outlier_count), style)


# two-view scenes


def _intrinsics(focal=600.0, centre=WINDOW / 2):
    return np.array([[focal, 0.0, centre], [0.0, focal, centre], [0.0, 0.0, 1.0]])


def _rotation(rng, max_angle):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(-max_angle, max_angle)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def camera_pair(rng):
    """Camera 1 at the origin looking down +z; camera 2 rotated up to 15 degrees and shifted."""
    k = _intrinsics()
    p1 = k @ np.hstack([np.eye(3), np.zeros((3, 1))])
    r = _rotation(rng, np.deg2rad(15.0))
    t = rng.normal(size=3)
    t[2] *= 0.2
    t = t / np.linalg.norm(t) * rng.uniform(0.5, 1.5)
    p2 = k @ np.hstack([r, t[:, None]])
    return p1, p2


def fundamental_from_cameras(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """``F = [e']_x P2 P1^+`` with ``e' = P2 C`` and ``C`` the centre of camera 1."""
    _, _, vt = np.linalg.svd(p1)
    centre = vt[-1]
    e2 = p2 @ centre
    skew = np.array([[0, -e2[2], e2[1]], [e2[2], 0, -e2[0]], [-e2[1], e2[0], 0]])
    return skew @ p2 @ np.linalg.pinv(p1)


def project(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    h = np.column_stack([x, np.ones(len(x))]) @ p.T
    return h[:, :2] / h[:, 2:3]


def _depths(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    return (np.column_stack([x, np.ones(len(x))]) @ p.T)[:, 2]


def _random_homography(rng):
    corners = np.array([[0, 0], [WINDOW, 0], [WINDOW, WINDOW], [0, WINDOW]], dtype=float)
    moved = corners + rng.uniform(-0.15 * WINDOW, 0.15 * WINDOW, corners.shape)
    return fit_minimal(ModelKind.HOMOGRAPHY, np.hstack([corners, moved])).models[0]


def _random_affine(rng):
    angle = rng.uniform(-np.pi / 6, np.pi / 6)
    scale = rng.uniform(0.8, 1.2, 2)
    shear = rng.uniform(-0.1, 0.1)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    a = rot @ np.array([[scale[0], shear], [0.0, scale[1]]])
    centre = np.full(2, WINDOW / 2)
    t = centre - a @ centre + rng.uniform(-30, 30, 2)
    return ModelParams(ModelKind.AFFINE2D, np.column_stack([a, t]).ravel())


def _map_points(model: ModelParams, x1: np.ndarray) -> np.ndarray:
    if model.kind is ModelKind.AFFINE2D:
        a = model.matrix
        return x1 @ a[:, :2].T + a[:, 2]
    proj = np.column_stack([x1, np.ones(len(x1))]) @ model.matrix.T
    return proj[:, :2] / proj[:, 2:3]


def gen_two_view_scene(
    kind,
    n_inliers: int = 100,
    outlier_count: int = 100,
    sigma: float = 0.0,
    seed: int = 0,
    outlier_margin: float = 0.0,
) -> SyntheticTwoViewScene:
    """Correspondences of a random ground-truth model plus uniform outliers.

    Outliers are uniform in both windows; with ``outlier_margin > 0`` any
    outlier whose residual under the ground truth falls below the margin is
    redrawn, so the inlier/outlier split is unambiguous.
    """
    kind = ModelKind.parse(kind)
    if kind is ModelKind.LINE2D:
        raise InvalidInputError("use gen_line_scene for lines")
    rng = np.random.default_rng(seed)
    cameras = None
    if kind is ModelKind.FUNDAMENTAL:
        p1, p2 = camera_pair(rng)
        cameras = (p1, p2)
        model = ModelParams(ModelKind.FUNDAMENTAL, fundamental_from_cameras(p1, p2))
        chunks, have = [], 0
        while have < n_inliers:
            x = np.column_stack([rng.uniform(-2, 2, (4 * n_inliers, 2)), rng.uniform(4, 8, 4 * n_inliers)])
            ok = (_depths(p1, x) > 0) & (_depths(p2, x) > 0)
            x1, x2 = project(p1, x[ok]), project(p2, x[ok])
            inside = np.all((x1 >= 0) & (x1 <= WINDOW) & (x2 >= 0) & (x2 <= WINDOW), axis=1)
            chunk = np.hstack([x1, x2])[inside]
            chunks.append(chunk)
            have += len(chunk)
        clean = np.vstack(chunks)[:n_inliers]
    else:
        model = _random_homography(rng) if kind is ModelKind.HOMOGRAPHY else _random_affine(rng)
        x1 = rng.uniform(0, WINDOW, (n_inliers, 2))
        clean = np.hstack([x1, _map_points(model, x1)])
    inliers = clean + rng.normal(0.0, sigma, clean.shape) if sigma > 0 else clean

    outliers = np.empty((0, 4))
    while len(outliers) < outlier_count:
        cand = rng.uniform(0, WINDOW, (outlier_count, 4))
        if outlier_margin > 0:
            cand = cand[residuals(model, cand) >= outlier_margin]
        outliers = np.vstack([outliers, cand])
    outliers = outliers[:outlier_count]

    pts = np.vstack([inliers, outliers])
    mask = np.zeros(len(pts), dtype=bool)
    mask[:n_inliers] = True
    order = rng.permutation(len(pts))
    return SyntheticTwoViewScene(pts[order], model, mask[order], float(sigma), int(outlier_count), cameras)
