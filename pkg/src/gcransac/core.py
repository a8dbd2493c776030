"""Shared data types, residual functions and the labeling energy terms.

Points are stored as ``(N, n)`` float arrays. Lines use ``n = 2`` and every
two-view model uses the concatenated correspondence layout
``(x1, y1, x2, y2)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import InvalidInputError, SingularModelError

if TYPE_CHECKING:
    from .neighborhood import NeighborhoodGraph

KERNEL_FLOOR = 1e-12
SINGULAR_DET = 1e-12


class ModelKind(enum.Enum):
    LINE2D = "line"
    AFFINE2D = "affine"
    HOMOGRAPHY = "homography"
    FUNDAMENTAL = "fundamental"

    @property
    def sample_size(self) -> int:
        """Minimal number of points that determines a model of this kind."""
        return _SAMPLE_SIZE[self]

    @property
    def point_dim(self) -> int:
        return 2 if self is ModelKind.LINE2D else 4

    @classmethod
    def parse(cls, name) -> "ModelKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for kind in cls:
            if kind.value == key or kind.name.lower() == key:
                return kind
        raise InvalidInputError(f"unknown model kind {name!r}")


_SAMPLE_SIZE = {
    ModelKind.LINE2D: 2,
    ModelKind.AFFINE2D: 3,
    ModelKind.HOMOGRAPHY: 4,
    ModelKind.FUNDAMENTAL: 7,
}
_THETA_SIZE = {
    ModelKind.LINE2D: 3,
    ModelKind.AFFINE2D: 6,
    ModelKind.HOMOGRAPHY: 9,
    ModelKind.FUNDAMENTAL: 9,
}


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Parameter vector of a geometric model, normalized on construction.

    Line2D ``(a, b, c)`` is scaled so that ``a**2 + b**2 == 1``. Homography and
    Fundamental are 3x3 matrices flattened row-major with unit Frobenius norm;
    a Fundamental matrix is additionally projected onto rank 2. Affine2D holds
    ``[A | t]`` row-major and is stored as given.
    """

    kind: ModelKind
    theta: np.ndarray

    def __post_init__(self):
        kind = ModelKind.parse(self.kind)
        theta = np.array(self.theta, dtype=float).ravel()
        if theta.size != _THETA_SIZE[kind]:
            raise InvalidInputError(
                f"{kind.value} model needs {_THETA_SIZE[kind]} parameters, got {theta.size}"
            )
        if not np.all(np.isfinite(theta)):
            raise InvalidInputError("model parameters must be finite")
        theta = _normalize_theta(kind, theta)
        theta.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "theta", theta)

    @property
    def matrix(self) -> np.ndarray:
        """3x3 matrix for Homography/Fundamental, 2x3 ``[A | t]`` for Affine2D."""
        if self.kind is ModelKind.LINE2D:
            raise InvalidInputError("a line has no matrix form")
        rows = 2 if self.kind is ModelKind.AFFINE2D else 3
        return self.theta.reshape(rows, 3)

    @classmethod
    def from_matrix(cls, kind, matrix) -> "ModelParams":
        return cls(ModelKind.parse(kind), np.asarray(matrix, dtype=float).ravel())

    def __repr__(self):
        values = ", ".join(f"{v:.6g}" for v in self.theta)
        return f"ModelParams({self.kind.value}, [{values}])"


def _normalize_theta(kind: ModelKind, theta: np.ndarray) -> np.ndarray:
    # already-normalized input is kept bit-for-bit so that saved models reload exactly
    if kind is ModelKind.LINE2D:
        norm = math.hypot(theta[0], theta[1])
        if norm == 0.0:
            raise InvalidInputError("line normal (a, b) must be nonzero")
        return theta if abs(norm - 1.0) <= 1e-15 else theta / norm
    if kind is ModelKind.AFFINE2D:
        return theta
    if kind is ModelKind.FUNDAMENTAL:
        u, s, vt = np.linalg.svd(theta.reshape(3, 3))
        if s[2] > 1e-14 * s[0] or abs(np.linalg.norm(s) - 1.0) > 1e-15:
            s[2] = 0.0
            theta = ((u * s) @ vt).ravel()
        else:
            return theta
    norm = np.linalg.norm(theta)
    if norm == 0.0:
        raise InvalidInputError(f"{kind.value} matrix must be nonzero")
    return theta if abs(norm - 1.0) <= 1e-15 else theta / norm


@dataclass(frozen=True, eq=False)
class Labeling:
    """Binary inlier (True) / outlier (False) assignment over all points."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=bool).ravel()
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def inlier_count(self) -> int:
        return int(np.count_nonzero(self.labels))

    @property
    def inliers(self) -> np.ndarray:
        return np.flatnonzero(self.labels)

    def __len__(self):
        return self.labels.size

    def __eq__(self, other):
        if not isinstance(other, Labeling):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    __hash__ = None


@dataclass(frozen=True)
class Settings:
    """Parameters of an estimation run; defaults suit pixel-scale data.

    ``loss`` selects the per-point score (``"gaussian"`` kernel or the
    RANSAC ``"tophat"``) and ``local_optimization=False`` switches the
    graph-cut step off entirely. Together with ``lambda_=0`` they turn the
    engine into plain RANSAC.
    """

    epsilon: float = 0.31
    radius: float = 20.0
    lambda_: float = 0.1
    eps_conf: float = 10.0
    confidence: float = 0.95
    max_iterations: int = 10000
    rng_seed: int = 0
    loss: str = "gaussian"
    local_optimization: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.radius > 0:
            raise InvalidInputError(f"radius must be > 0, got {self.radius}")
        if not self.lambda_ >= 0:
            raise InvalidInputError(f"lambda must be >= 0, got {self.lambda_}")
        if not self.eps_conf >= 1:
            raise InvalidInputError(f"eps_conf must be >= 1, got {self.eps_conf}")
        if not 0 < self.confidence < 1:
            raise InvalidInputError(f"confidence must be in (0, 1), got {self.confidence}")
        if int(self.max_iterations) < 1:
            raise InvalidInputError("max_iterations must be >= 1")
        if self.loss not in ("gaussian", "tophat"):
            raise InvalidInputError(f"unknown loss {self.loss!r}")


@dataclass(frozen=True, eq=False)
class ScoredModel:
    """A model together with its labeling and score.

    ``support`` is the kernel sum used for model comparison and
    ``inlier_count`` the number of points with residual below epsilon, which
    drives the termination criterion. ``sample`` keeps the indices of the
    minimal sample the model descends from, local optimization included.
    """

    model: ModelParams
    labeling: Labeling
    support: float
    found_at_iteration: int
    found_inlier_ratio: float
    inlier_count: int = 0
    sample: tuple = field(default_factory=tuple)


# residuals


def as_points(points, dim: Optional[int] = None) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise InvalidInputError(f"points must be a 2-D array, got shape {pts.shape}")
    if dim is not None and pts.shape[1] != dim:
        raise InvalidInputError(f"expected {dim}-D points, got {pts.shape[1]}-D")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("point coordinates must be finite")
    return pts


def _homogeneous(xy: np.ndarray) -> np.ndarray:
    return np.column_stack([xy, np.ones(len(xy))])


def _transfer_distance(h: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    proj = _homogeneous(src) @ h.T
    with np.errstate(divide="ignore", invalid="ignore"):
        xy = proj[:, :2] / proj[:, 2:3]
        d = np.hypot(xy[:, 0] - dst[:, 0], xy[:, 1] - dst[:, 1])
    d[~np.isfinite(d)] = np.inf
    return d


def sampson_distance(f: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    h1 = _homogeneous(x1)
    h2 = _homogeneous(x2)
    fx1 = h1 @ f.T
    ftx2 = h2 @ f
    algebraic = np.sum(h2 * fx1, axis=1)
    denom = fx1[:, 0] ** 2 + fx1[:, 1] ** 2 + ftx2[:, 0] ** 2 + ftx2[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.abs(algebraic) / np.sqrt(denom)
    d[denom == 0] = np.where(algebraic[denom == 0] == 0, 0.0, np.inf)
    return d


def residuals(model: ModelParams, points) -> np.ndarray:
    """Point-to-model distances for every row of ``points``.

    Line2D gives the orthogonal distance, Affine2D ``|A p1 + t - p2|``,
    Homography the symmetric transfer error (mean of the forward and backward
    distances) and Fundamental the Sampson distance.
    """
    return _residuals(model, as_points(points, model.kind.point_dim))


def _residuals(model: ModelParams, pts: np.ndarray) -> np.ndarray:
    kind = model.kind
    theta = model.theta
    if kind is ModelKind.LINE2D:
        return np.abs(pts @ theta[:2] + theta[2])
    x1, x2 = pts[:, :2], pts[:, 2:]
    if kind is ModelKind.AFFINE2D:
        a = model.matrix
        mapped = x1 @ a[:, :2].T + a[:, 2]
        return np.hypot(mapped[:, 0] - x2[:, 0], mapped[:, 1] - x2[:, 1])
    if kind is ModelKind.HOMOGRAPHY:
        h = model.matrix
        if abs(np.linalg.det(h)) < SINGULAR_DET:
            raise SingularModelError("homography is singular, backward transfer undefined")
        forward = _transfer_distance(h, x1, x2)
        backward = _transfer_distance(np.linalg.inv(h), x2, x1)
        return 0.5 * (forward + backward)
    return sampson_distance(model.matrix, x1, x2)


def residual(model: ModelParams, point) -> float:
    """Distance of a single point to ``model``; see :func:`residuals`."""
    pt = np.asarray(point, dtype=float)
    if pt.ndim != 1:
        raise InvalidInputError("residual expects a single point")
    return float(residuals(model, pt[None, :])[0])


# energy terms


def kernel(delta, epsilon: float):
    """Gaussian kernel ``exp(-delta**2 / (2 epsilon**2))``.

    Works elementwise on arrays. Values below 1e-12 are flushed to zero and
    an infinite distance maps to zero.
    """
    if not epsilon > 0:
        raise InvalidInputError("epsilon must be > 0")
    d = np.asarray(delta, dtype=float)
    k = np.exp((d * d) * (-0.5 / (epsilon * epsilon)))
    if k.ndim == 0:
        k = float(k)
        return 0.0 if k < KERNEL_FLOOR or k != k else k
    k[~(k >= KERNEL_FLOOR)] = 0.0
    return k


def tophat(delta, epsilon: float):
    """RANSAC's 0/1 score: 1 where ``delta < epsilon``."""
    d = np.asarray(delta, dtype=float)
    k = (d < epsilon).astype(float)
    return float(k) if k.ndim == 0 else k


def unary_cost(label, delta, epsilon: float):
    k = kernel(delta, epsilon)
    return 1.0 - k if label else k


def pairwise_cost(label_p, label_q, kp: float, kq: float) -> float:
    """Modified Potts term for one neighbouring pair."""
    if bool(label_p) != bool(label_q):
        return 1.0
    mean = 0.5 * (kp + kq)
    return 1.0 - mean if label_p else mean


def point_scores(model: ModelParams, points, settings: Settings) -> tuple[np.ndarray, np.ndarray]:
    """Residuals and per-point scores under the loss selected in ``settings``.

    ``points`` must already be a validated ``(N, n)`` float array.
    """
    r = _residuals(model, points)
    score = kernel if settings.loss == "gaussian" else tophat
    return r, score(r, settings.epsilon)


def support(model: ModelParams, points, epsilon: float, loss: str = "gaussian") -> tuple[float, Labeling]:
    """Kernel support of ``model`` and its threshold labeling.

    The support is the sum of kernel values over all points; a point is
    labeled inlier when its residual is strictly below ``epsilon``.
    """
    pts = as_points(points)
    if len(pts) == 0:
        raise InvalidInputError("support needs at least one point")
    r = residuals(model, pts)
    weights = kernel(r, epsilon) if loss == "gaussian" else tophat(r, epsilon)
    return float(np.sum(weights)), Labeling(r < epsilon)


def total_energy(
    labeling: Labeling,
    model: ModelParams,
    neighborhood: "NeighborhoodGraph",
    settings: Settings,
    points,
) -> float:
    """Unary plus ``lambda``-weighted pairwise energy of ``labeling``.

    Evaluated directly from the definitions, so it serves as the reference
    the min-cut labeling is checked against.
    """
    pts = as_points(points, model.kind.point_dim)
    labels = labeling.labels
    if labels.size != len(pts):
        raise InvalidInputError(
            f"labeling has {labels.size} entries for {len(pts)} points"
        )
    if neighborhood.n_points != len(pts):
        raise InvalidInputError("neighborhood graph was built over a different point set")
    k = np.atleast_1d(kernel(residuals(model, pts), settings.epsilon))
    unary = float(np.sum(np.where(labels, 1.0 - k, k)))
    if settings.lambda_ == 0.0 or neighborhood.n_edges == 0:
        return unary
    p, q = neighborhood.edges[:, 0], neighborhood.edges[:, 1]
    lp, lq = labels[p], labels[q]
    mean = 0.5 * (k[p] + k[q])
    pair = np.where(lp != lq, 1.0, np.where(lp, 1.0 - mean, mean))
    return unary + settings.lambda_ * float(np.sum(pair))
