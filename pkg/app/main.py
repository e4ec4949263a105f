# app/main.py
from __future__ import annotations

import csv
import functools
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import click
import numpy as np
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from .asymptotics import build_u_curve
from .config import configure_logging, load_run_config, settings
from .connection import classify_point
from .curves import build_diagonal, build_x_curve, build_y_curve, curve_sphere, reflect_to_Dminus, surface_points
from .errors import DomainError, ExportError, FrameFieldError
from .exporters import (
    read_curve_csv,
    report_dict,
    sidecar_path,
    write_curve_csv,
    write_grid_csv,
    write_ply,
    write_report_json,
    write_sidecar,
)
from .integrator import orthogonality_defect, sweep_grid
from .invariants import CHECKS, run_invariants
from .models import CheckOptions, CurveKind, GridSpec, InvariantReport, RunConfig
from .specfun import derived_scalars, eval_x0

logger = logging.getLogger(__name__)

EVAL_COLUMNS = [
    "x", "y", "X0", "d1", "d1_over_x", "d2", "tau", "h", "B2", "C2",
    "kappa1", "kappa2", "kappa3", "class",
]


def _handle_errors(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except FrameFieldError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)
        except ValidationError as e:
            raise click.UsageError(str(e)) from e

    return wrapper


def _file_section(ctx: click.Context, section: str) -> Dict[str, Any]:
    return dict((ctx.obj or {}).get("file", {}).get(section, {}) or {})


def _pick(flag: Any, section: Dict[str, Any], key: str, default: Any) -> Any:
    """Flag, then config file, then default."""
    if flag is not None:
        return flag
    return section.get(key, default)


def load_init_frame(spec: str) -> np.ndarray:
    """'identity', or a 4x4 orthogonal matrix stored as .npy or comma-separated text."""
    if spec == "identity":
        return np.eye(4)
    path = Path(spec)
    try:
        frame = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, delimiter=",")
    except (OSError, ValueError) as e:
        raise ExportError(f"cannot read initial frame {path}: {e}") from e
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (4, 4):
        raise DomainError(f"initial frame must be 4x4, got shape {frame.shape}")
    if orthogonality_defect(frame) > 1e-10:
        raise DomainError("initial frame is not orthogonal")
    return frame


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="YAML run config with domain / tolerances / output sections.")
@click.option("--log-level", default=None, help="Overrides FRAMEFIELD_LOG_LEVEL.")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Threads for grid sweeps.")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[Path], log_level: Optional[str], workers: Optional[int]) -> None:
    """Frame field F = [phi, X_alpha, X_beta, xi] and its curvature surface."""
    configure_logging(log_level)
    data: Dict[str, Any] = {}
    if config_path is not None:
        try:
            data = load_run_config(config_path)
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="--config") from e
    ctx.obj = {"file": data, "workers": workers if workers is not None else settings.workers}


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


@cli.command("eval")
@click.option("--x", "xs", type=float, multiple=True, required=True)
@click.option("--y", "ys", type=float, multiple=True, help="One value for all x, or one per x. Default 0.")
@_handle_errors
def cmd_eval(xs: Sequence[float], ys: Sequence[float]) -> None:
    """Scalars of X0 at each (x, y), as CSV on stdout."""
    if not ys:
        ys = (0.0,)
    if len(ys) == 1:
        ys = tuple(ys) * len(xs)
    if len(ys) != len(xs):
        raise click.UsageError("give one --y, or as many --y as --x")

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(EVAL_COLUMNS)
    for x, y in zip(xs, ys):
        if x < 0:
            raise DomainError(f"x must be >= 0, got {x}")
        e = eval_x0(x)
        d = derived_scalars(x, y)
        row = [x, y, e.value, e.d1, e.d1_over_x, e.d2, d.tau, d.h, d.B2, d.C2, d.kappa1, d.kappa2, d.kappa3]
        writer.writerow([format(v, ".17g") for v in row] + [classify_point(x, y).value])


# ---------------------------------------------------------------------------
# curve
# ---------------------------------------------------------------------------


_KINDS = {"x": CurveKind.X_CURVE, "y": CurveKind.Y_CURVE, "diagonal": CurveKind.DIAGONAL, "u-asymptotic": CurveKind.U_CURVE}


@cli.command("curve")
@click.option("--kind", type=click.Choice(list(_KINDS)), required=True)
@click.option("--y0", type=float, default=None, help="Fixed y of an x- or u-curve.")
@click.option("--x0", type=float, default=None, help="Fixed x of a y-curve.")
@click.option("--range", "param_range", type=(float, float), default=None, help="Parameter range LO HI.")
@click.option("--n", type=click.IntRange(min=1), default=None)
@click.option("--init", "init_frame", default=None, help="'identity' or a .npy / .csv 4x4 frame.")
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "ply"]), default=None)
@click.pass_context
@_handle_errors
def cmd_curve(
    ctx: click.Context,
    kind: str,
    y0: Optional[float],
    x0: Optional[float],
    param_range: Optional[Tuple[float, float]],
    n: Optional[int],
    init_frame: Optional[str],
    output: Optional[Path],
    fmt: Optional[str],
) -> None:
    """Build one curve and write it as CSV (+ JSON sidecar) or PLY."""
    domain = _file_section(ctx, "domain")
    out = _file_section(ctx, "output")
    run = RunConfig(
        command="curve",
        n=_pick(n, domain, "n", 1000),
        init_frame=_pick(init_frame, domain, "init_frame", "identity"),
        output=str(_pick(output, out, "path", None) or ""),
        format=_pick(fmt, out, "format", "csv"),
    )
    if not run.output:
        raise click.UsageError("curve needs --output (or output.path in the config file)")
    init = load_init_frame(run.init_frame)
    lo, hi = _pick(param_range, domain, "range", None) or _default_range(kind)

    fit = None
    if kind == "x":
        curve = build_x_curve(_need(y0, "--y0"), (lo, hi), run.n, init)
        fit = curve_sphere(curve)
    elif kind == "y":
        curve = build_y_curve(_need(x0, "--x0"), (lo, hi), run.n, init)
        fit = curve_sphere(curve)
    elif kind == "diagonal":
        curve = build_diagonal((lo, hi), run.n, init).diagonal
    else:
        curve = build_u_curve(_need(y0, "--y0"), (lo, hi), run.n, init)

    path = Path(run.output)
    if run.format == "ply":
        write_ply(curve.points, path, frame=curve.frames[0])
    else:
        write_curve_csv(curve, path)
        write_sidecar(curve, sidecar_path(path), fit)
    if fit is not None:
        click.echo(f"sphere radius {fit.radius:.12g}, max radial deviation {fit.max_radial_dev:.3g}", err=True)


def _need(value: Optional[float], name: str) -> float:
    if value is None:
        raise click.UsageError(f"this curve kind needs {name}")
    return value


def _default_range(kind: str) -> Tuple[float, float]:
    return {"x": (0.002, 100.0), "y": (-10.0, 10.0), "diagonal": (0.5, 5.0), "u-asymptotic": (0.0, 10.0)}[kind]


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


@cli.command("grid")
@click.option("--rect", type=(float, float, float), default=None, help="X0 Y0 A: the square [X0, X0+A] x [Y0, Y0+A].")
@click.option("--n", type=click.IntRange(min=1), default=None)
@click.option("--init", "init_frame", default=None)
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "ply"]), default=None)
@click.pass_context
@_handle_errors
def cmd_grid(
    ctx: click.Context,
    rect: Optional[Tuple[float, float, float]],
    n: Optional[int],
    init_frame: Optional[str],
    output: Optional[Path],
    fmt: Optional[str],
) -> None:
    """Frames and surface points at every lattice point."""
    domain = _file_section(ctx, "domain")
    out = _file_section(ctx, "output")
    run = RunConfig(
        command="grid",
        rectangle=tuple(_pick(rect, domain, "rectangle", (2.0, 1.0, 1.0))),
        n=_pick(n, domain, "n", 64),
        init_frame=_pick(init_frame, domain, "init_frame", "identity"),
        output=str(_pick(output, out, "path", None) or ""),
        format=_pick(fmt, out, "format", "csv"),
    )
    if not run.output:
        raise click.UsageError("grid needs --output (or output.path in the config file)")
    x0, y0, a = run.rectangle
    grid = GridSpec(x0=x0, y0=y0, a=a, n=run.n)
    frames = sweep_grid(grid, load_init_frame(run.init_frame), workers=ctx.obj["workers"], progress=sys.stderr.isatty())
    points = surface_points(grid, frames)
    path = Path(run.output)
    if run.format == "ply":
        write_ply(points.reshape(-1, 4), path, frame=frames[0, 0])
    else:
        write_grid_csv(grid, frames, points, path)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------


def _print_report(report: InvariantReport) -> None:
    table = Table(title=f"invariants {report.summary}")
    table.add_column("check")
    table.add_column("measured", justify="right")
    table.add_column("bound", justify="right")
    table.add_column("", justify="center")
    table.add_column("detail")
    for e in report.entries:
        mark = "[green]pass[/green]" if e.passed else "[red]FAIL[/red]"
        table.add_row(e.name, f"{e.measured:.3e}", f"{e.bound:.1e}", mark, e.detail)
    Console(stderr=True).print(table)


@cli.command("invariants")
@click.option("--only", multiple=True, type=click.Choice(sorted(CHECKS)), help="Run only these checks.")
@click.option("--rect", type=(float, float, float), default=None)
@click.option("--n", type=click.IntRange(min=1), default=None)
@click.option("--stress-steps", type=click.IntRange(min=1), default=None)
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_context
@_handle_errors
def cmd_invariants(
    ctx: click.Context,
    only: Sequence[str],
    rect: Optional[Tuple[float, float, float]],
    n: Optional[int],
    stress_steps: Optional[int],
    output: Optional[Path],
) -> None:
    """Run the invariant suite; exit 1 if any entry fails."""
    domain = _file_section(ctx, "domain")
    out = _file_section(ctx, "output")
    run = RunConfig(
        command="invariants",
        rectangle=tuple(_pick(rect, domain, "rectangle", (2.0, 1.0, 1.0))),
        n=_pick(n, domain, "n", 64),
        tolerances=_file_section(ctx, "tolerances"),
        output=_pick(str(output) if output else None, out, "path", None),
        format="json-report",
    )
    x0, y0, a = run.rectangle
    opts = CheckOptions(
        grid=GridSpec(x0=x0, y0=y0, a=a, n=run.n),
        tolerances=run.tolerances,
        stress_steps=stress_steps or 1_000_000,
        workers=ctx.obj["workers"],
        progress=sys.stderr.isatty(),
    )
    report = run_invariants(only or None, opts)
    if run.output:
        write_report_json(report, Path(run.output))
    else:
        click.echo(json.dumps(report_dict(report), sort_keys=True, indent=2))
    _print_report(report)
    if not report.passed:
        sys.exit(1)


# ---------------------------------------------------------------------------
# reflect
# ---------------------------------------------------------------------------


@cli.command("reflect")
@click.argument("source", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), required=True)
@_handle_errors
def cmd_reflect(source: Path, output: Path) -> None:
    """Re-index a curve CSV from (x, y) to (-x, y)."""
    curve = reflect_to_Dminus(read_curve_csv(source))
    write_curve_csv(curve, output)
    write_sidecar(curve, sidecar_path(output))


def main() -> None:
    cli(prog_name="framefield")


if __name__ == "__main__":
    main()
