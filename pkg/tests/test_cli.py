"""Tests for the command line and the file formats it writes."""
import csv
import io
import json

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from app.curves import build_x_curve, build_y_curve, curve_sphere
from app.errors import ExportError
from app.exporters import (
    CURVE_HEADER,
    project,
    read_curve_csv,
    sidecar_path,
    write_curve_csv,
    write_ply,
    write_sidecar,
)
from app.main import cli, load_init_frame
from app.models import CurveKind


@pytest.fixture
def runner():
    return CliRunner()


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_at_origin(runner):
    result = runner.invoke(cli, ["eval", "--x", "0"])
    assert result.exit_code == 0, result.output
    (row,) = _rows(result.stdout)
    assert float(row["X0"]) == 2.5
    assert float(row["d1_over_x"]) == 2.0
    assert row["class"] == "OffDomain"


def test_eval_several_points(runner):
    result = runner.invoke(cli, ["eval", "--x", "1", "--x", "2", "--y", "1"])
    assert result.exit_code == 0, result.output
    rows = _rows(result.stdout)
    assert [r["class"] for r in rows] == ["S1_degenerate", "Regular"]
    assert float(rows[0]["X0"]) == pytest.approx(3.453738, abs=1e-5)


def test_eval_rejects_negative_x(runner):
    result = runner.invoke(cli, ["eval", "--x", "-1"])
    assert result.exit_code == 3


def test_eval_mismatched_y(runner):
    result = runner.invoke(cli, ["eval", "--x", "1", "--x", "2", "--x", "3", "--y", "1", "--y", "2"])
    assert result.exit_code == 2


def test_curve_round_trip(runner, tmp_path):
    out = tmp_path / "x.csv"
    result = runner.invoke(
        cli, ["curve", "--kind", "x", "--y0", "0", "--range", "0.01", "20", "--n", "256", "-o", str(out)]
    )
    assert result.exit_code == 0, result.output
    meta = json.loads(sidecar_path(out).read_text())
    assert meta["kind"] == "XCurve"
    assert meta["nodes"] == 257
    assert meta["sphere"]["radius"] == pytest.approx(0.5, abs=1e-10)

    curve = read_curve_csv(out)
    assert curve.kind == CurveKind.X_CURVE
    assert curve.params.shape == (257,)
    assert curve.frames.shape == (257, 4, 4)
    np.testing.assert_allclose(curve.frames[0], np.eye(4), atol=1e-14)


def test_curve_needs_fixed_value_and_output(runner, tmp_path):
    result = runner.invoke(cli, ["curve", "--kind", "x", "-o", str(tmp_path / "c.csv")])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["curve", "--kind", "y", "--x0", "1"])
    assert result.exit_code == 2


def test_curve_domain_error(runner, tmp_path):
    result = runner.invoke(
        cli, ["curve", "--kind", "x", "--y0", "1", "--range", "0", "2", "-o", str(tmp_path / "c.csv")]
    )
    assert result.exit_code == 3


def test_curve_unwritable_output(runner, tmp_path):
    blocker = tmp_path / "file.txt"
    blocker.write_text("")
    result = runner.invoke(
        cli, ["curve", "--kind", "y", "--x0", "1", "--n", "16", "-o", str(blocker / "c.csv")]
    )
    assert result.exit_code == 4


def test_curve_ply(runner, tmp_path):
    out = tmp_path / "y.ply"
    result = runner.invoke(
        cli, ["curve", "--kind", "y", "--x0", "2", "--range", "-1", "1", "--n", "20", "--format", "ply", "-o", str(out)]
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[:3] == ["ply", "format ascii 1.0", "element vertex 21"]
    assert lines.index("end_header") == 6
    assert len(lines) == 7 + 21
    curve = build_y_curve(2.0, (-1.0, 1.0), 20)
    xyz = np.array([[float(v) for v in line.split()] for line in lines[7:]])
    np.testing.assert_array_equal(xyz, project(curve.points, curve.frames[0]))


def test_curve_ply_uses_the_init_frame(runner, tmp_path, random_orthogonal):
    Q = random_orthogonal()
    np.save(tmp_path / "q.npy", Q)
    out = tmp_path / "x.ply"
    result = runner.invoke(
        cli,
        ["curve", "--kind", "x", "--y0", "1", "--range", "0.5", "2", "--n", "32",
         "--init", str(tmp_path / "q.npy"), "--format", "ply", "-o", str(out)],
    )
    assert result.exit_code == 0, result.output
    xyz = np.array([[float(v) for v in line.split()] for line in out.read_text().splitlines()[7:]])
    plain = build_x_curve(1.0, (0.5, 2.0), 32)
    np.testing.assert_allclose(xyz, project(plain.points, plain.frames[0]), atol=1e-12)


def test_reflect_command(runner, tmp_path):
    src = tmp_path / "y.csv"
    curve = build_y_curve(2.0, (-1.0, 1.0), 32)
    write_curve_csv(curve, src)
    write_sidecar(curve, sidecar_path(src))
    dst = tmp_path / "y_minus.csv"
    result = runner.invoke(cli, ["reflect", str(src), "-o", str(dst)])
    assert result.exit_code == 0, result.output
    back = read_curve_csv(dst)
    assert back.side == -1
    assert back.fixed == -2.0
    np.testing.assert_array_equal(back.points, curve.points)


def test_reflect_missing_source(runner, tmp_path):
    result = runner.invoke(cli, ["reflect", str(tmp_path / "none.csv"), "-o", str(tmp_path / "out.csv")])
    assert result.exit_code == 4


def test_grid_command(runner, tmp_path):
    out = tmp_path / "grid.csv"
    result = runner.invoke(cli, ["--workers", "2", "grid", "--rect", "2", "1", "1", "--n", "4", "-o", str(out)])
    assert result.exit_code == 0, result.output
    rows = _rows(out.read_text())
    assert len(rows) == 25
    assert (rows[-1]["i"], rows[-1]["j"]) == ("4", "4")
    assert float(rows[-1]["x"]) == 3.0


def test_grid_rejects_rectangle_off_domain(runner, tmp_path):
    result = runner.invoke(cli, ["grid", "--rect", "-1", "0", "1", "--n", "4", "-o", str(tmp_path / "g.csv")])
    assert result.exit_code == 2


def test_invariants_command(runner, tmp_path):
    result = runner.invoke(cli, ["invariants", "--only", "tau"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.stdout)
    assert data["passed"] is True
    assert {e["name"] for e in data["entries"]} >= {"tau-lower-bound", "tau-limit"}


def test_invariants_config_tolerance_fails(runner, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(yaml.safe_dump({"tolerances": {"tau-limit": 0.0}}))
    out = tmp_path / "report.json"
    result = runner.invoke(cli, ["--config", str(cfg), "invariants", "--only", "tau", "-o", str(out)])
    assert result.exit_code == 1
    data = json.loads(out.read_text())
    assert data["passed"] is False


def test_bad_config_section(runner, tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(yaml.safe_dump({"domian": {"n": 4}}))
    result = runner.invoke(cli, ["--config", str(cfg), "eval", "--x", "1"])
    assert result.exit_code == 2


def test_load_init_frame(tmp_path, random_orthogonal):
    Q = random_orthogonal()
    np.save(tmp_path / "q.npy", Q)
    np.testing.assert_array_equal(load_init_frame(str(tmp_path / "q.npy")), Q)
    np.savetxt(tmp_path / "q.csv", Q, delimiter=",", fmt="%.17g")
    np.testing.assert_allclose(load_init_frame(str(tmp_path / "q.csv")), Q, atol=1e-15)
    np.save(tmp_path / "bad.npy", 2.0 * Q)
    with pytest.raises(ValueError):
        load_init_frame(str(tmp_path / "bad.npy"))
    with pytest.raises(ExportError):
        load_init_frame(str(tmp_path / "missing.npy"))


def test_curve_csv_is_exact(tmp_path):
    curve = build_x_curve(1.0, (0.5, 2.0), 40)
    path = write_curve_csv(curve, tmp_path / "c.csv")
    back = read_curve_csv(path, kind=CurveKind.X_CURVE, fixed=1.0)
    np.testing.assert_array_equal(back.params, curve.params)
    np.testing.assert_array_equal(back.points, curve.points)
    np.testing.assert_array_equal(back.frames, curve.frames)
    assert curve_sphere(back).radius == pytest.approx(curve_sphere(curve).radius)


def test_read_rejects_foreign_csv(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ExportError):
        read_curve_csv(path)
    path.write_text(",".join(CURVE_HEADER) + "\n")
    with pytest.raises(ExportError):
        read_curve_csv(path)


def test_project_and_ply(tmp_path):
    pts = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(project(pts), pts[:, :3])
    np.testing.assert_array_equal(project(pts, origin=pts[0])[0], np.zeros(3))
    path = write_ply(pts, tmp_path / "p.ply")
    assert path.read_text().splitlines()[-1] == "8 9 10"
