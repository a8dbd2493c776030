"""Command-line front end: ``gcransac fit | synth | bench``.

Exit codes: 0 on success, 2 when no model could be estimated (including too
few points), 1 for usage, configuration and I/O errors. Diagnostics go to
standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench
from .core import ModelKind, Settings
from .datasets import CorrespondenceDataset, load_dataset, save_dataset
from .engine import run
from .errors import GCRansacError, InsufficientDataError, InvalidInputError, NoModelFoundError
from .scenes import gen_line_scene

EXIT_OK, EXIT_ERROR, EXIT_NO_MODEL = 0, 1, 2
DEFAULT_GRID = "style=straight;sigma=0,2,4,6,8;outliers=100,500"
_GRID_KEYS = {"style", "sigma", "outliers", "kind"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which we reserve for "no model"
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _g9(v) -> float:
    return float(f"{float(v):.9g}")


def _add_settings_flags(p):
    d = Settings()
    p.add_argument("--epsilon", type=float, default=d.epsilon, help="kernel width / inlier threshold (px)")
    p.add_argument("--radius", type=float, default=d.radius, help="neighborhood radius (px)")
    p.add_argument("--lambda", dest="lambda_", type=float, default=d.lambda_, help="spatial coherence weight")
    p.add_argument("--eps-conf", type=float, default=d.eps_conf, help="local optimization trigger ratio")
    p.add_argument("--confidence", type=float, default=d.confidence)
    p.add_argument("--max-iters", type=int, default=d.max_iterations)
    p.add_argument("--seed", type=int, default=d.rng_seed)


def _settings(args) -> Settings:
    return Settings(
        epsilon=args.epsilon, radius=args.radius, lambda_=args.lambda_, eps_conf=args.eps_conf,
        confidence=args.confidence, max_iterations=args.max_iters, rng_seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcransac", description="Robust model fitting with graph-cut local optimization.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit a model to a correspondence file")
    fit.add_argument("--input", required=True, type=Path)
    fit.add_argument("--model", required=True, choices=[k.value for k in ModelKind])
    _add_settings_flags(fit)
    fit.add_argument("--json", action="store_true", help="print one JSON object")

    synth = sub.add_parser("synth", help="write a synthetic line scene")
    synth.add_argument("--style", choices=("straight", "dashed"), default="straight")
    synth.add_argument("--sigma", type=float, default=0.0)
    synth.add_argument("--outliers", type=int, default=0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, type=Path)

    b = sub.add_parser("bench", help="run an experiment sweep and write CSVs")
    b.add_argument("--grid", default=DEFAULT_GRID,
                   help=f"cell grid, e.g. '{DEFAULT_GRID}' (keys: kind, style, sigma, outliers)")
    b.add_argument("--trials", type=int, default=200)
    b.add_argument("--methods", default="gc,baseline", help="comma list of gc, baseline, gc-no-spatial")
    b.add_argument("--out-dir", required=True, type=Path)
    b.add_argument("--workers", type=int, default=None, help="worker processes (capped by GCRANSAC_THREADS)")
    _add_settings_flags(b)
    return parser


def parse_grid(spec: str) -> dict:
    """``"style=straight,dashed;sigma=0,2;outliers=100"`` -> dict of value lists."""
    grid = {}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        key, sep, values = part.partition("=")
        key = key.strip()
        if not sep or key not in _GRID_KEYS:
            raise InvalidInputError(f"bad grid entry {part!r}; expected key=v1,v2 with key in {sorted(_GRID_KEYS)}")
        items = [v.strip() for v in values.split(",") if v.strip()]
        if not items:
            raise InvalidInputError(f"grid entry {key!r} has no values")
        try:
            if key == "sigma":
                grid["sigmas"] = [float(v) for v in items]
            elif key == "outliers":
                grid["outliers"] = [int(v) for v in items]
            elif key == "style":
                grid["styles"] = items
            elif len(items) == 1:
                grid["kind"] = items[0]
            else:
                raise InvalidInputError("grid takes a single kind")
        except ValueError:
            raise InvalidInputError(f"non-numeric value in grid entry {part!r}") from None
    return grid


def cmd_fit(args) -> int:
    settings = _settings(args)
    kind = ModelKind.parse(args.model)
    data = load_dataset(args.input)
    if data.correspondences.shape[1] != kind.point_dim:
        raise InvalidInputError(
            f"{kind.value} needs {kind.point_dim}D points, {args.input} has {data.correspondences.shape[1]} columns"
        )
    report = run(data.correspondences, kind, settings)
    final = report.final
    out = {
        "model": kind.value,
        "theta": [_g9(v) for v in final.model.theta],
        "inliers": int(final.labeling.inlier_count),
        "support": _g9(final.support),
        "samples": int(report.samples_drawn),
        "lo_runs": int(report.lo_runs),
        "gc_runs": int(report.gc_runs),
        "time_ms": round(report.wall_time * 1e3, 3),
    }
    if args.json:
        print(json.dumps(out))
    else:
        print(f"model: {out['model']}")
        print("theta: " + " ".join(f"{v:.9g}" for v in out["theta"]))
        for key in ("inliers", "support", "samples", "lo_runs", "gc_runs"):
            value = out[key]
            print(f"{key}: {value:.9g}" if isinstance(value, float) else f"{key}: {value}")
        print(f"time_ms: {out['time_ms']:.3f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    scene = gen_line_scene(args.style, args.sigma, args.outliers, args.seed)
    data = CorrespondenceDataset(scene.points, scene.inlier_mask, scene.ground_truth, args.out.stem, ModelKind.LINE2D)
    try:
        save_dataset(data, args.out)
    except OSError as exc:
        raise OSError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
    print(f"wrote {len(scene.points)} points to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    grid = parse_grid(args.grid)
    config = bench.ExperimentConfig(
        methods=[m.strip() for m in args.methods.split(",") if m.strip()],
        trials=args.trials,
        base_seed=args.seed,
        settings=_settings(args),
        workers=args.workers,
        **grid,
    )
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {args.out_dir}: {exc.strerror or exc}") from exc
    out = args.out_dir / "trials.csv"
    records = bench.run_experiment(config, out)
    failed = sum(r.failed for r in records)
    print(bench.format_table(bench.aggregate(records)))
    print(f"\n{len(records)} trials ({failed} failed) -> {out}, {bench.agg_path(out)}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {"fit": cmd_fit, "synth": cmd_synth, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except InsufficientDataError as exc:
        m = ModelKind.parse(args.model).sample_size if getattr(args, "model", None) else None
        print(f"insufficient data: need ≥ {m}" if m else str(exc), file=sys.stderr)
        return EXIT_NO_MODEL
    except NoModelFoundError as exc:
        print(f"no model found: {exc}", file=sys.stderr)
        return EXIT_NO_MODEL
    except (GCRansacError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
