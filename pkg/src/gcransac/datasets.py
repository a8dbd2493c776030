"""Plain-text correspondence files.

One observation per line, whitespace separated: ``x1 y1 x2 y2 [inlier_flag]``
for two-view data or ``x y [inlier_flag]`` for 2D points. Lines starting with
``#`` are comments; ``# model: <kind>`` names the model kind. A ground-truth
model may sit next to the data in ``<file>.gt``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ModelKind, ModelParams
from .errors import DatasetFormatError, DatasetParseError, InvalidInputError

_MODEL_HEADER = re.compile(r"^#\s*model\s*:\s*(\w+)\s*$", re.IGNORECASE)


@dataclass(frozen=True, eq=False)
class CorrespondenceDataset:
    correspondences: np.ndarray
    ground_truth_inliers: Optional[np.ndarray] = None
    ground_truth_model: Optional[ModelParams] = None
    name: str = ""
    kind: Optional[ModelKind] = None

    def __post_init__(self):
        pts = np.asarray(self.correspondences, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 4):
            raise InvalidInputError("correspondences must be an (N, 2) or (N, 4) array")
        object.__setattr__(self, "correspondences", pts)
        if self.ground_truth_inliers is not None:
            mask = np.asarray(self.ground_truth_inliers, dtype=bool)
            if mask.shape != (len(pts),):
                raise InvalidInputError("inlier mask length must match the number of correspondences")
            object.__setattr__(self, "ground_truth_inliers", mask)
        if self.kind is not None:
            object.__setattr__(self, "kind", ModelKind.parse(self.kind))

    def __len__(self):
        return len(self.correspondences)


def gt_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".gt")


def load_dataset(path) -> CorrespondenceDataset:
    """Parse a correspondence file; errors carry the offending line number."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetParseError(f"cannot read dataset: {exc.strerror or exc}", path) from exc

    kind = None
    rows, flags = [], []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header = _MODEL_HEADER.match(line)
            if header:
                try:
                    kind = ModelKind.parse(header.group(1))
                except InvalidInputError as exc:
                    raise DatasetParseError(str(exc), path, lineno) from None
            continue
        fields = line.split()
        if width is None:
            width = len(fields)
            if width not in (2, 3, 4, 5):
                raise DatasetFormatError(f"expected 2 to 5 columns, got {width}", path, lineno)
        elif len(fields) != width:
            raise DatasetFormatError(
                f"inconsistent column count: expected {width}, got {len(fields)}", path, lineno
            )
        try:
            values = [float(v) for v in fields]
        except ValueError:
            raise DatasetParseError(f"non-numeric value in {line!r}", path, lineno) from None
        if not all(np.isfinite(values)):
            raise DatasetParseError("coordinates must be finite", path, lineno)
        rows.append((values, lineno))

    if width is None:
        raise DatasetFormatError("dataset contains no data rows", path)
    dim = _point_dim(width, kind)
    if dim is None:
        raise DatasetFormatError(f"{width} columns do not fit a {kind.value} dataset", path)
    has_flag = width == dim + 1
    coords = []
    for values, lineno in rows:
        coords.append(values[:dim])
        if has_flag:
            flag = values[dim]
            if flag not in (0.0, 1.0):
                raise DatasetParseError(f"inlier flag must be 0 or 1, got {flag:g}", path, lineno)
            flags.append(flag == 1.0)

    model = _load_gt(gt_path(path))
    if model is not None and kind is None:
        kind = model.kind
    return CorrespondenceDataset(
        np.asarray(coords, dtype=float),
        np.asarray(flags, dtype=bool) if has_flag else None,
        model,
        path.stem,
        kind,
    )


def _point_dim(width: int, kind: Optional[ModelKind]):
    if kind is None:
        return 2 if width in (2, 3) else 4
    dim = kind.point_dim
    return dim if width in (dim, dim + 1) else None


def _load_gt(path: Path) -> Optional[ModelParams]:
    if not path.exists():
        return None
    kind, values = None, []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        header = _MODEL_HEADER.match(line)
        if header:
            kind = ModelKind.parse(header.group(1))
        elif line and not line.startswith("#"):
            try:
                values.extend(float(v) for v in line.split())
            except ValueError:
                raise DatasetParseError("non-numeric model parameter", path, lineno) from None
    if kind is None:
        raise DatasetParseError("ground-truth file lacks a '# model:' header", path)
    return ModelParams(kind, values)


def _fmt(v: float) -> str:
    return repr(float(v))


def save_dataset(dataset: CorrespondenceDataset, path) -> Path:
    """Write ``dataset`` (and its ``.gt`` sidecar when a model is known)."""
    path = Path(path)
    lines = []
    if dataset.kind is not None:
        lines.append(f"# model: {dataset.kind.value}")
    mask = dataset.ground_truth_inliers
    for i, row in enumerate(dataset.correspondences):
        fields = [_fmt(v) for v in row]
        if mask is not None:
            fields.append("1" if mask[i] else "0")
        lines.append(" ".join(fields))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if dataset.ground_truth_model is not None:
        save_model(dataset.ground_truth_model, gt_path(path))
    return path


def save_model(model: ModelParams, path) -> Path:
    path = Path(path)
    body = " ".join(_fmt(v) for v in model.theta)
    path.write_text(f"# model: {model.kind.value}\n{body}\n", encoding="utf-8")
    return path
