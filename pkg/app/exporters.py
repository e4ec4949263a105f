# app/exporters.py
"""
Files written by the CLI: curve CSV (+ JSON sidecar), grid CSV, ASCII PLY
point clouds and the JSON invariant report. Floats use 17 significant
digits so a CSV read back reproduces the arrays bit for bit.
"""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import ExportError
from .models import CurveKind, CurveSample, GridSpec, InvariantReport, SphereFit

logger = logging.getLogger(__name__)

POINT_COLUMNS = [f"p{k}" for k in range(4)]
FRAME_COLUMNS = [f"F{i}{j}" for i in range(4) for j in range(4)]
CURVE_HEADER = ["param", *POINT_COLUMNS, *FRAME_COLUMNS]
GRID_HEADER = ["i", "j", "x", "y", *POINT_COLUMNS, *FRAME_COLUMNS]


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _open_for_write(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}") from e


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def write_curve_csv(curve: CurveSample, path: Path) -> Path:
    """One row per node: param, point, frame entries in row-major order."""
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for t, p, F in zip(curve.params, curve.points, curve.frames):
            writer.writerow([_fmt(t), *map(_fmt, p), *map(_fmt, np.asarray(F).ravel())])
    logger.info("wrote %d curve rows to %s", len(curve.params), path)
    return path


def _sphere_dict(fit: Optional[SphereFit]) -> Optional[Dict[str, Any]]:
    if fit is None:
        return None
    return {
        "center": [float(v) for v in fit.center],
        "radius": fit.radius,
        "normal": [float(v) for v in fit.normal],
        "max_radial_dev": fit.max_radial_dev,
        "max_planar_dev": fit.max_planar_dev,
    }


def write_sidecar(curve: CurveSample, path: Path, fit: Optional[SphereFit] = None, extra: Optional[Dict[str, Any]] = None) -> Path:
    data = {
        "kind": curve.kind.value,
        "fixed": curve.fixed,
        "side": curve.side,
        "nodes": len(curve.params),
        "sphere": _sphere_dict(fit),
    }
    if extra:
        data.update(extra)
    with _open_for_write(path) as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def read_curve_csv(path: Path, kind: Optional[CurveKind] = None, fixed: Optional[float] = None) -> CurveSample:
    """
    Read a curve written by write_curve_csv. Kind, fixed value and side come
    from the sidecar when present; `kind` and `fixed` override it.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise ExportError(f"cannot read {path}: {e}") from e
    if not rows or rows[0] != CURVE_HEADER:
        raise ExportError(f"{path} is not a curve CSV (unexpected header)")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as e:
        raise ExportError(f"{path}: non-numeric value: {e}") from e
    if data.ndim != 2 or data.shape[1] != len(CURVE_HEADER):
        raise ExportError(f"{path} has no complete data rows")

    meta: Dict[str, Any] = {}
    side = sidecar_path(path)
    if side.exists():
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ExportError(f"cannot read sidecar {side}: {e}") from e

    return CurveSample(
        kind=kind or CurveKind(meta.get("kind", CurveKind.X_CURVE.value)),
        fixed=float(meta.get("fixed", 0.0)) if fixed is None else fixed,
        side=int(meta.get("side", 1)),
        params=data[:, 0],
        points=data[:, 1:5],
        frames=data[:, 5:].reshape(-1, 4, 4),
    )


def write_grid_csv(grid: GridSpec, frames: np.ndarray, points: np.ndarray, path: Path) -> Path:
    """Lattice frames and points, rows ordered by i then j."""
    n = grid.n
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GRID_HEADER)
        for i in range(n + 1):
            x = grid.x_at(i)
            for j in range(n + 1):
                writer.writerow(
                    [i, j, _fmt(x), _fmt(grid.y_at(j)), *map(_fmt, points[i, j]), *map(_fmt, frames[i, j].ravel())]
                )
    logger.info("wrote %d grid rows to %s", (n + 1) ** 2, path)
    return path


def project(points: np.ndarray, frame: Optional[np.ndarray] = None, origin: Optional[np.ndarray] = None) -> np.ndarray:
    """First three coordinates of F^T (p - origin), F being the anchor frame the caller passes."""
    P = np.asarray(points, dtype=float).reshape(-1, 4)
    if origin is not None:
        P = P - np.asarray(origin, dtype=float)
    if frame is not None:
        P = P @ np.asarray(frame, dtype=float)
    return P[:, :3]


def write_ply(points: np.ndarray, path: Path, frame: Optional[np.ndarray] = None, origin: Optional[np.ndarray] = None) -> Path:
    xyz = project(points, frame, origin)
    with _open_for_write(path) as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(xyz)}\n")
        fh.write("property double x\nproperty double y\nproperty double z\nend_header\n")
        for row in xyz:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
    logger.info("wrote %d vertices to %s", len(xyz), path)
    return path


def report_dict(report: InvariantReport) -> Dict[str, Any]:
    entries: List[Dict[str, Any]] = [e.model_dump() for e in report.entries]
    return {"entries": entries, "passed": report.passed, "summary": report.summary}


def write_report_json(report: InvariantReport, path: Path) -> Path:
    with _open_for_write(path) as fh:
        json.dump(report_dict(report), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path
