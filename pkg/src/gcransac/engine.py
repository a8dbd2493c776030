"""The robust estimation main loop and its graph-cut local optimization."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    Labeling,
    ModelKind,
    ModelParams,
    ScoredModel,
    Settings,
    as_points,
    kernel,
    point_scores,
    residuals,
)
from .errors import (
    DegenerateSampleError,
    InsufficientDataError,
    InvalidInputError,
    NoModelFoundError,
    SingularModelError,
)
from .estimators import MinimalSample, fit_lsq, fit_minimal, oriented_epipolar_check
from .maxflow import EnergyGraph, min_cut
from .neighborhood import NeighborhoodGraph, build_neighborhood

LO_SUBSET_FACTOR = 7
_SKIPPABLE = (DegenerateSampleError, InsufficientDataError, SingularModelError)


@dataclass(frozen=True)
class SampleRecord:
    iteration: int
    support: float
    was_best: bool
    sample: tuple
    sample_was_all_inlier: Optional[bool] = None


@dataclass
class RunReport:
    final: ScoredModel
    samples_drawn: int
    lo_runs: int
    gc_runs: int
    wall_time: float
    log: list = field(default_factory=list)

    @property
    def winning_sample(self) -> tuple:
        return self.final.sample if self.final is not None else ()


class SampleStream:
    """Endless, seed-determined sequence of minimal samples.

    Indices are drawn in blocks of ``block`` candidate rows; rows with a
    repeated index are dropped, which leaves every m-subset equally likely.
    When ``2 m > n`` each sample is the prefix of a random permutation.
    """

    def __init__(self, rng: np.random.Generator, n_points: int, m: int, block: int = 64):
        if n_points < m:
            raise InsufficientDataError(f"insufficient data: need >= {m} points, got {n_points}")
        self.rng = rng
        self.n_points = n_points
        self.m = m
        self.block = block
        self._buffer = np.empty((0, m), dtype=np.int64)
        self._pos = 0

    def _refill(self):
        if 2 * self.m > self.n_points:
            rows = [self.rng.permutation(self.n_points)[: self.m] for _ in range(self.block)]
            self._buffer = np.asarray(rows, dtype=np.int64).reshape(-1, self.m)
        else:
            cand = self.rng.integers(0, self.n_points, (self.block, self.m))
            ordered = np.sort(cand, axis=1)
            distinct = np.all(ordered[:, 1:] != ordered[:, :-1], axis=1)
            self._buffer = cand[distinct]
        self._pos = 0

    def peek_block(self) -> np.ndarray:
        """The samples not yet consumed from the current block (refilling if empty)."""
        while self._pos >= len(self._buffer):
            self._refill()
        return self._buffer[self._pos:]

    def take(self) -> tuple:
        row = self.peek_block()[0]
        self._pos += 1
        return tuple(row.tolist())


@dataclass
class EngineState:
    best: Optional[ScoredModel] = None
    iteration: int = 0
    lo_count: int = 0
    gc_count: int = 0
    prev_best: Optional[tuple] = None
    sample_rng: Optional[np.random.Generator] = None
    lo_rng: Optional[np.random.Generator] = None
    sampler: Optional[SampleStream] = None

    @classmethod
    def seeded(cls, seed: int) -> "EngineState":
        # separate streams: LO draws never shift the sequence of minimal samples
        sample_seq, lo_seq = np.random.SeedSequence(seed).spawn(2)
        return cls(sample_rng=np.random.default_rng(sample_seq), lo_rng=np.random.default_rng(lo_seq))

    def stream(self, n_points: int, m: int) -> SampleStream:
        if self.sampler is None or (self.sampler.n_points, self.sampler.m) != (n_points, m):
            self.sampler = SampleStream(self.sample_rng, n_points, m)
        return self.sampler


def required_iterations(
    inlier_count: int, total: int, m: int, confidence: float, max_iterations: int = 10000
) -> int:
    """Number of samples needed to draw an all-inlier sample with the given confidence.

    The all-inlier probability ``C(I, m) / C(N, m)`` is computed as a product
    of ratios; the result is clamped to ``[1, max_iterations]``.
    """
    if not 0 <= inlier_count <= total or m > total:
        raise InvalidInputError("need 0 <= inlier_count <= total and m <= total")
    p_inlier = 1.0
    for i in range(m):
        p_inlier *= (inlier_count - i) / (total - i)
    if p_inlier >= 1.0 - 1e-12:
        return 1
    if p_inlier <= 0.0:
        return int(max_iterations)
    k = math.ceil(math.log(1.0 - confidence) / math.log1p(-p_inlier))
    return int(min(max(k, 1), max_iterations))


def draw_minimal_sample(state: EngineState, points, m: int) -> MinimalSample:
    """Next sample of ``m`` distinct indices, uniform without replacement."""
    n_points = points if isinstance(points, int) else len(points)
    return MinimalSample(state.stream(n_points, m).take())


def _confidence(k: int, eta: float, m: int) -> float:
    return 1.0 - (1.0 - eta ** m) ** k


def lo_trigger(k1, eta1, k2: int, eta2: float, m: int, eps_conf: float) -> bool:
    """Whether a new so-far-the-best model earns local optimization.

    Compares the confidence ``1 - (1 - eta^m)^k`` of the new best (``k2``,
    ``eta2``) with that of the previous one; ``k1=None`` means there was no
    previous best and always triggers.
    """
    if k1 is None:
        return True
    mu1 = _confidence(k1, eta1, m)
    if mu1 <= 0.0:
        return True
    return _confidence(k2, eta2, m) / mu1 > eps_conf


def build_problem_graph(points, model: ModelParams, neighborhood: NeighborhoodGraph, settings: Settings) -> EnergyGraph:
    """Graph whose min cut minimizes the kernel unary plus lambda-weighted Potts energy."""
    pts = as_points(points, model.kind.point_dim)
    k = np.atleast_1d(kernel(residuals(model, pts), settings.epsilon))
    graph = EnergyGraph(len(pts))
    for p, kp in enumerate(k.tolist()):
        graph.add_term1(p, kp, 1.0 - kp)
    lam = settings.lambda_
    if lam > 0:
        for p, q in neighborhood.edges.tolist():
            mean = 0.5 * (k[p] + k[q])
            graph.add_term2(p, q, lam * mean, lam, lam, lam * (1.0 - mean))
    return graph


def _score(model: ModelParams, pts: np.ndarray, settings: Settings) -> tuple[float, np.ndarray]:
    r, w = point_scores(model, pts, settings)
    return float(np.sum(w)), r


def _scored(model, support, r, settings, iteration, sample) -> ScoredModel:
    thresholded = r < settings.epsilon
    count = int(np.count_nonzero(thresholded))
    return ScoredModel(
        model=model,
        labeling=Labeling(thresholded),
        support=support,
        found_at_iteration=iteration,
        found_inlier_ratio=count / len(r),
        inlier_count=count,
        sample=tuple(sample),
    )


def _best_candidate(models, pts, settings):
    best = None
    for model in models:
        try:
            w, r = _score(model, pts, settings)
        except SingularModelError:
            continue
        if best is None or w > best[1]:
            best = (model, w, r)
    return best


def _line_block_supports(pts: np.ndarray, block: np.ndarray, settings: Settings) -> np.ndarray:
    """Supports of the lines through each 2-point sample of ``block``.

    Used only to screen hypotheses; a sample that beats the current best is
    re-evaluated through the regular solver. Coincident pairs score -inf.
    """
    p, q = pts[block[:, 0]], pts[block[:, 1]]
    d = q - p
    norm = np.hypot(d[:, 0], d[:, 1])
    valid = norm > 1e-12 * np.maximum(1.0, np.abs(p).max(axis=1))
    norm[~valid] = 1.0
    a, b = d[:, 1] / norm, -d[:, 0] / norm
    c = -(a * p[:, 0] + b * p[:, 1])
    r = np.abs(pts @ np.vstack([a, b]) + c)
    if settings.loss == "gaussian":
        w = kernel(r, settings.epsilon).sum(axis=0)
    else:
        w = (r < settings.epsilon).sum(axis=0).astype(float)
    w[~valid] = -np.inf
    return w


def local_optimize(
    points,
    neighborhood: NeighborhoodGraph,
    best: ScoredModel,
    settings: Settings,
    rng: Optional[np.random.Generator] = None,
) -> tuple[ScoredModel, int]:
    """Alternate graph-cut labeling and re-fitting while the support improves.

    Each round labels the points by a min cut for the current model, refits
    on at most ``7 m`` random inliers of that labeling and keeps the result
    if its support is higher. Returns the best model seen (never worse than
    ``best``) and the number of graph cuts performed.
    """
    pts = as_points(points, best.model.kind.point_dim)
    kind = best.model.kind
    m = kind.sample_size
    rng = rng if rng is not None else np.random.default_rng(0)
    current = best
    cuts = 0
    while True:
        graph = build_problem_graph(pts, current.model, neighborhood, settings)
        labeling = min_cut(graph).labeling
        cuts += 1
        inliers = labeling.inliers
        if len(inliers) < m:
            break
        subset_size = LO_SUBSET_FACTOR * m
        subset = inliers if len(inliers) <= subset_size else rng.choice(inliers, subset_size, replace=False)
        try:
            candidate = _best_candidate(fit_lsq(kind, pts[subset]).models, pts, settings)
        except _SKIPPABLE:
            break
        if candidate is None or not candidate[1] > current.support:
            break
        model, w, r = candidate
        # the cut above labels the previous model; L* must belong to the new one
        current = _scored(model, w, r, settings, best.found_at_iteration, best.sample)
    return current, cuts


def run(points, kind, settings: Optional[Settings] = None, all_inlier_mask=None) -> RunReport:
    """Fit a model of ``kind`` to ``points`` with graph-cut local optimization.

    ``all_inlier_mask`` is optional ground truth: when given, each log entry
    records whether its minimal sample consisted only of masked points.

    Raises :class:`InsufficientDataError` when there are fewer points than
    the minimal sample and :class:`NoModelFoundError` when no hypothesis was
    ever valid.
    """
    settings = settings or Settings()
    kind = ModelKind.parse(kind)
    pts = as_points(points, kind.point_dim)
    n, m = len(pts), kind.sample_size
    if n < m:
        raise InsufficientDataError(f"insufficient data: need >= {m} points, got {n}")
    mask = None if all_inlier_mask is None else np.asarray(all_inlier_mask, dtype=bool)

    start = time.perf_counter()
    state = EngineState.seeded(settings.rng_seed)
    use_lo = settings.local_optimization
    neighborhood = build_neighborhood(pts, settings.radius) if use_lo else None
    log: list[SampleRecord] = []
    limit = settings.max_iterations

    stream = state.stream(n, m)
    while state.iteration < limit:
        block = stream.peek_block()
        screened = _line_block_supports(pts, block, settings) if kind is ModelKind.LINE2D else None
        for j in range(len(block)):
            if state.iteration >= limit:
                break
            state.iteration += 1
            k = state.iteration
            sample = stream.take()
            all_inlier = None if mask is None else bool(mask[list(sample)].all())
            best_support = state.best.support if state.best is not None else 0.0
            if screened is not None and not screened[j] > best_support:
                log.append(SampleRecord(k, max(float(screened[j]), 0.0), False, sample, all_inlier))
                continue
            candidate = _hypothesis(kind, pts, sample, settings)
            if candidate is None:
                log.append(SampleRecord(k, 0.0, False, sample, all_inlier))
                continue
            model, w, r = candidate
            improved = w > best_support
            log.append(SampleRecord(k, w, improved, sample, all_inlier))
            if not improved:
                continue

            state.best = _scored(model, w, r, settings, k, sample)
            if use_lo:
                k1, eta1 = state.prev_best if state.prev_best is not None else (None, None)
                if lo_trigger(k1, eta1, k, state.best.found_inlier_ratio, m, settings.eps_conf):
                    optimized, cuts = local_optimize(pts, neighborhood, state.best, settings, state.lo_rng)
                    state.lo_count += 1
                    state.gc_count += cuts
                    if optimized.support > state.best.support:
                        state.best = optimized
            state.prev_best = (k, state.best.found_inlier_ratio)
            limit = required_iterations(
                state.best.inlier_count, n, m, settings.confidence, settings.max_iterations
            )

    elapsed = time.perf_counter() - start
    if state.best is None:
        report = RunReport(None, state.iteration, state.lo_count, state.gc_count, elapsed, log)
        raise NoModelFoundError(f"no valid {kind.value} hypothesis in {state.iteration} samples", report)

    if use_lo and state.lo_count == 0:
        optimized, cuts = local_optimize(pts, neighborhood, state.best, settings, state.lo_rng)
        state.lo_count += 1
        state.gc_count += cuts
        if optimized.support > state.best.support:
            state.best = optimized

    final = _polish(pts, kind, state.best, settings)
    elapsed = time.perf_counter() - start
    return RunReport(final, state.iteration, state.lo_count, state.gc_count, elapsed, log)


def _hypothesis(kind, pts, sample, settings):
    """Best-supported model from one minimal sample, or None if it yields none."""
    sample_pts = pts[list(sample)]
    try:
        models = fit_minimal(kind, sample_pts).models
    except _SKIPPABLE:
        return None
    if kind is ModelKind.FUNDAMENTAL:
        models = [f for f in models if oriented_epipolar_check(f, sample_pts)]
    return _best_candidate(models, pts, settings)


def _polish(pts, kind, best: ScoredModel, settings: Settings) -> ScoredModel:
    """Least-squares refit on the inliers of the so-far-the-best labeling."""
    inliers = best.labeling.inliers
    if len(inliers) < kind.sample_size:
        return best
    try:
        candidate = _best_candidate(fit_lsq(kind, pts[inliers]).models, pts, settings)
    except _SKIPPABLE:
        return best
    if candidate is None:
        return best
    model, w, r = candidate
    return _scored(model, w, r, settings, best.found_at_iteration, best.sample)
