"""Ground-truth metrics and the multi-trial experiment runner.

Every trial is a pure function of ``(method, kind, style, sigma, outliers,
seed)``: the scene and the estimator are both seeded from ``seed``, so all
methods see the same scene for a given seed.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ModelKind, ModelParams, Settings, residuals
from .engine import run
from .errors import GCRansacError, InvalidInputError, NoModelFoundError
from .scenes import gen_line_scene, gen_two_view_scene

log = logging.getLogger(__name__)

METHODS = ("gc", "plain-baseline", "gc-no-spatial")
METHOD_ALIASES = {"baseline": "plain-baseline"}
# a run counts as successful below this error (degrees for lines, px otherwise)
SUCCESS_THRESHOLD = 2.0
TWO_VIEW_INLIERS = 100

CSV_FIELDS = (
    "method", "kind", "style", "sigma", "outliers", "seed",
    "error", "time_ms", "samples", "lo_runs", "gc_runs", "not_all_inlier_success",
)
AGG_FIELDS = (
    "method", "kind", "style", "sigma", "outliers", "trials", "failures",
    "error", "time_ms", "samples", "lo_runs", "gc_runs", "success_rate", "not_all_inlier_success",
)
_MEAN_FIELDS = ("error", "time_ms", "samples", "lo_runs", "gc_runs")


# metrics


def angular_error(estimate: ModelParams, truth: ModelParams) -> float:
    """Angle between two lines in degrees, in [0, 90]."""
    if estimate.kind is not ModelKind.LINE2D or truth.kind is not ModelKind.LINE2D:
        raise InvalidInputError("angular_error compares two lines")
    n1, n2 = estimate.theta[:2], truth.theta[:2]
    cos = abs(float(n1 @ n2)) / (np.linalg.norm(n1) * np.linalg.norm(n2))
    return math.degrees(math.acos(min(cos, 1.0)))


def model_error(kind, estimate: ModelParams, ground_truth_inliers, points) -> float:
    """Mean residual of ``estimate`` over the ground-truth inliers."""
    kind = ModelKind.parse(kind)
    if estimate.kind is not kind:
        raise InvalidInputError(f"estimate is a {estimate.kind.value}, expected {kind.value}")
    pts = np.asarray(points, dtype=float)
    mask = np.asarray(ground_truth_inliers, dtype=bool)
    if mask.shape != (len(pts),):
        raise InvalidInputError("inlier mask length must match the number of points")
    if not mask.any():
        raise InvalidInputError("model_error needs a nonempty inlier set")
    return float(np.mean(residuals(estimate, pts[mask])))


def sample_is_all_inlier(truth: ModelParams, sample_points, sigma: float) -> bool:
    """True when no sample point lies farther than ``sigma`` from the ground truth."""
    return bool(np.all(residuals(truth, sample_points) <= sigma + 1e-9))


# experiment


def method_settings(method: str, base: Settings = Settings()) -> Settings:
    method = canonical_method(method)
    if method == "gc-no-spatial":
        return replace(base, lambda_=0.0)
    if method == "plain-baseline":
        return replace(base, lambda_=0.0, eps_conf=math.inf, loss="tophat", local_optimization=False)
    return base


def canonical_method(method: str) -> str:
    name = METHOD_ALIASES.get(method, method)
    if name not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}; choose from {', '.join(METHODS)} or baseline")
    return name


@dataclass(frozen=True)
class ExperimentConfig:
    methods: Sequence[str] = ("gc", "plain-baseline")
    kind: str = "line"
    styles: Sequence[str] = ("straight",)
    sigmas: Sequence[float] = (0.0, 2.0, 4.0, 6.0, 8.0)
    outliers: Sequence[int] = (100, 500, 1000)
    trials: int = 200
    base_seed: int = 0
    settings: Settings = field(default_factory=Settings)
    workers: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(canonical_method(m) for m in self.methods))
        kind = ModelKind.parse(self.kind)
        object.__setattr__(self, "kind", kind.value)
        if kind is not ModelKind.LINE2D:
            object.__setattr__(self, "styles", ("-",))
        elif any(s not in ("straight", "dashed") for s in self.styles):
            raise InvalidInputError(f"unknown line style in {tuple(self.styles)}")
        if not self.methods or not self.styles or not self.sigmas or not self.outliers:
            raise InvalidInputError("every grid axis needs at least one value")
        if any(s < 0 for s in self.sigmas) or any(o < 0 for o in self.outliers):
            raise InvalidInputError("sigma and outlier counts must be non-negative")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")

    def cells(self):
        for method in self.methods:
            for style in self.styles:
                for sigma in self.sigmas:
                    for outliers in self.outliers:
                        yield method, style, float(sigma), int(outliers)

    def trial_specs(self):
        for method, style, sigma, outliers in self.cells():
            for t in range(self.trials):
                yield (method, self.kind, style, sigma, outliers, self.base_seed + t, self.settings)


@dataclass(frozen=True)
class TrialRecord:
    """One row of the per-trial CSV; ``error is None`` marks a failed trial."""

    method: str
    kind: str
    style: str
    sigma: float
    outliers: int
    seed: int
    error: Optional[float]
    time_ms: float
    samples: int
    lo_runs: int
    gc_runs: int
    # None unless the run succeeded; then whether its winning sample was not-all-inlier
    not_all_inlier_success: Optional[bool] = None
    message: str = ""

    @property
    def failed(self) -> bool:
        return self.error is None

    @property
    def succeeded(self) -> bool:
        return self.error is not None and self.error < SUCCESS_THRESHOLD


def make_scene(kind: str, style: str, sigma: float, outliers: int, seed: int):
    """Scene of one grid cell as ``(points, ground_truth, inlier_mask)``."""
    kind = ModelKind.parse(kind)
    if kind is ModelKind.LINE2D:
        scene = gen_line_scene(style, sigma, outliers, seed)
    else:
        scene = gen_two_view_scene(kind, TWO_VIEW_INLIERS, outliers, sigma, seed)
    return scene.points, scene.ground_truth, scene.inlier_mask


def run_trial(method, kind, style, sigma, outliers, seed, base=Settings()) -> TrialRecord:
    """Run one method on one seeded scene; never raises for estimator failures."""
    method = canonical_method(method)
    points, truth, mask = make_scene(kind, style, sigma, outliers, seed)
    settings = replace(method_settings(method, base), rng_seed=int(seed))
    key = dict(method=method, kind=truth.kind.value, style=style, sigma=float(sigma),
               outliers=int(outliers), seed=int(seed))
    try:
        report = run(points, truth.kind, settings)
    except NoModelFoundError as exc:
        rep = exc.report
        return TrialRecord(**key, error=None, time_ms=_ms(rep.wall_time) if rep else 0.0,
                           samples=rep.samples_drawn if rep else 0, lo_runs=0, gc_runs=0, message=str(exc))
    except (GCRansacError, np.linalg.LinAlgError) as exc:
        return TrialRecord(**key, error=None, time_ms=0.0, samples=0, lo_runs=0, gc_runs=0, message=str(exc))

    estimate = report.final.model
    if truth.kind is ModelKind.LINE2D:
        error = angular_error(estimate, truth)
    else:
        error = model_error(truth.kind, estimate, mask, points)
    flag = None
    if error < SUCCESS_THRESHOLD:
        sample = list(report.winning_sample)
        flag = not sample_is_all_inlier(truth, points[sample], sigma)
    return TrialRecord(**key, error=error, time_ms=_ms(report.wall_time),
                       samples=report.samples_drawn, lo_runs=report.lo_runs,
                       gc_runs=report.gc_runs, not_all_inlier_success=flag)


def _ms(seconds: float) -> float:
    return round(seconds * 1e3, 3)


def _run_spec(spec):
    return run_trial(*spec)


def worker_count(requested: Optional[int] = None) -> int:
    """Pool size: the request (or the CPU count), capped by ``GCRANSAC_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("GCRANSAC_THREADS")
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise InvalidInputError(f"GCRANSAC_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def run_experiment(config: ExperimentConfig, out_path=None) -> list[TrialRecord]:
    """Run every trial of ``config``; with ``out_path`` also write the CSVs.

    Records come back in grid order whatever the pool size.
    """
    specs = list(config.trial_specs())
    workers = worker_count(config.workers)
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_spec, specs, chunksize=max(1, len(specs) // (8 * workers))))
    else:
        records = [_run_spec(s) for s in specs]
    for r in records:
        if r.failed:
            log.warning("trial failed (%s, sigma=%g, outliers=%d, seed=%d): %s",
                        r.method, r.sigma, r.outliers, r.seed, r.message)
    if out_path is not None:
        write_csv(records, out_path)
        write_aggregate(aggregate(records), agg_path(out_path))
    return records


# CSV


def agg_path(path) -> Path:
    path = Path(path)
    stem = path.name[:-4] if path.name.endswith(".csv") else path.name
    return path.with_name(stem + ".agg.csv")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(path, fields, rows):
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(fields)
            for row in rows:
                writer.writerow([_cell(row[f]) for f in fields])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_csv(records: Sequence[TrialRecord], path) -> Path:
    rows = []
    for r in records:
        rows.append({f: getattr(r, f) for f in CSV_FIELDS})
    return _write(path, CSV_FIELDS, rows)


def aggregate(records: Sequence[TrialRecord]) -> list[dict]:
    """Per-cell means over the trials that did not fail."""
    cells: dict = {}
    for r in records:
        cells.setdefault((r.method, r.kind, r.style, r.sigma, r.outliers), []).append(r)
    rows = []
    for (method, kind, style, sigma, outliers), group in cells.items():
        ok = [r for r in group if not r.failed]
        row = dict(method=method, kind=kind, style=style, sigma=sigma, outliers=outliers,
                   trials=len(group), failures=len(group) - len(ok))
        for f in _MEAN_FIELDS:
            row[f] = float(np.mean([getattr(r, f) for r in ok])) if ok else None
        flags = [r.not_all_inlier_success for r in ok if r.not_all_inlier_success is not None]
        row["success_rate"] = len(flags) / len(ok) if ok else None
        row["not_all_inlier_success"] = float(np.mean(flags)) if flags else None
        rows.append(row)
    return rows


def write_aggregate(rows: Sequence[dict], path) -> Path:
    return _write(path, AGG_FIELDS, rows)


def read_csv(path) -> list[dict]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def format_table(rows: Sequence[dict], with_timing: bool = True) -> str:
    """Fixed-width text table of aggregate rows."""
    fields = [f for f in AGG_FIELDS if with_timing or f != "time_ms"]
    cells = [[_fmt_short(row[f]) for f in fields] for row in rows]
    widths = [max(len(f), *(len(c[i]) for c in cells)) if cells else len(f) for i, f in enumerate(fields)]
    lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _fmt_short(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)
