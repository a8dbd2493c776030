import json
import subprocess
import sys

import numpy as np
import pytest

from gcransac.cli import main, parse_grid
from gcransac.errors import InvalidInputError

TIMING = ("time_ms",)


def cli(*args):
    """Run the CLI in-process; returns (exit code, stdout, stderr)."""
    return main([str(a) for a in args])


def run_cli(capsys, *args):
    code = cli(*args)
    out, err = capsys.readouterr()
    return code, out, err


def strip_timing(text):
    return "\n".join(line for line in text.splitlines() if not line.startswith(TIMING))


@pytest.fixture
def identity_file(tmp_path):
    path = tmp_path / "identity.txt"
    path.write_text("0 0 0 0\n100 0 100 0\n100 100 100 100\n0 100 0 100\n")
    return path


@pytest.fixture
def line_file(tmp_path, capsys):
    path = tmp_path / "scene.txt"
    assert cli("synth", "--style", "straight", "--sigma", 1, "--outliers", 100, "--seed", 4, "--out", path) == 0
    capsys.readouterr()
    return path


# fit


def test_fit_identity_homography(identity_file, capsys):
    code, out, _ = run_cli(capsys, "fit", "--input", identity_file, "--model", "homography", "--json")
    assert code == 0
    theta = np.array(json.loads(out)["theta"]).reshape(3, 3)
    assert np.allclose(theta / theta[2, 2], np.eye(3), atol=1e-8)


def test_fit_insufficient_data(tmp_path, capsys):
    path = tmp_path / "six.txt"
    path.write_text("".join(f"{i} {i * i} {i + 1} {2 * i}\n" for i in range(6)))
    code, out, err = run_cli(capsys, "fit", "--input", path, "--model", "fundamental")
    assert code == 2
    assert "insufficient data: need ≥ 7" in err
    assert out == ""


def test_fit_text_output(line_file, capsys):
    code, out, _ = run_cli(capsys, "fit", "--input", line_file, "--model", "line", "--seed", 1)
    assert code == 0
    keys = [line.split(":")[0] for line in out.splitlines()]
    assert keys == ["model", "theta", "inliers", "support", "samples", "lo_runs", "gc_runs", "time_ms"]
    theta = out.splitlines()[1].split()[1:]
    assert len(theta) == 3
    assert all(len(v.lstrip("-").replace(".", "").lstrip("0")) <= 9 for v in theta if "e" not in v)


def test_fit_json_complete(line_file, capsys):
    code, out, _ = run_cli(capsys, "fit", "--input", line_file, "--model", "line", "--json")
    assert code == 0
    data = json.loads(out)
    assert set(data) == {"model", "theta", "inliers", "support", "samples", "lo_runs", "gc_runs", "time_ms"}
    assert data["gc_runs"] >= data["lo_runs"] >= 1


def test_fit_deterministic(line_file, capsys):
    outs = [run_cli(capsys, "fit", "--input", line_file, "--model", "line", "--seed", 7)[1] for _ in range(2)]
    assert strip_timing(outs[0]) == strip_timing(outs[1])
    outs = [run_cli(capsys, "fit", "--input", line_file, "--model", "line", "--seed", 7, "--json")[1]
            for _ in range(2)]
    a, b = (json.loads(o) for o in outs)
    a.pop("time_ms"), b.pop("time_ms")
    assert a == b


def test_fit_settings_flags(line_file, capsys):
    code, out, _ = run_cli(capsys, "fit", "--input", line_file, "--model", "line", "--epsilon", 1.0,
                           "--radius", 10, "--lambda", 0.5, "--eps-conf", 2, "--confidence", 0.99,
                           "--max-iters", 500, "--json")
    assert code == 0
    assert json.loads(out)["samples"] <= 500


@pytest.mark.parametrize("args", [
    ["fit", "--model", "line"],
    ["fit", "--input", "x.txt"],
    ["fit", "--input", "x.txt", "--model", "conic"],
    ["fit", "--input", "x.txt", "--model", "line", "--epsilon", "abc"],
    ["frobnicate"],
])
def test_usage_errors_exit_1(args, capsys):
    code, _, err = run_cli(capsys, *args)
    assert code == 1
    assert "error" in err


def test_invalid_settings_exit_1(line_file, capsys):
    for flag, value in (("--epsilon", 0), ("--confidence", 1.5), ("--lambda", -1), ("--eps-conf", 0.5)):
        code, out, err = run_cli(capsys, "fit", "--input", line_file, "--model", "line", flag, value)
        assert code == 1 and out == "" and err


def test_io_errors_exit_1(tmp_path, capsys):
    code, _, err = run_cli(capsys, "fit", "--input", tmp_path / "missing.txt", "--model", "line")
    assert code == 1 and "missing.txt" in err
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3 4\n1 2\n")
    code, _, err = run_cli(capsys, "fit", "--input", bad, "--model", "homography")
    assert code == 1 and ":2:" in err


def test_fit_dimension_mismatch(identity_file, capsys):
    code, _, err = run_cli(capsys, "fit", "--input", identity_file, "--model", "line")
    assert code == 1


def test_fit_no_model_exit_2(tmp_path, capsys):
    path = tmp_path / "same.txt"
    path.write_text("3 4\n" * 10)
    code, _, err = run_cli(capsys, "fit", "--input", path, "--model", "line", "--max-iters", 20)
    assert code == 2 and "no model" in err


# synth


def test_synth_noiseless_no_outliers(tmp_path, capsys):
    out = tmp_path / "s.txt"
    assert cli("synth", "--sigma", 0, "--outliers", 0, "--out", out) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(rows) == 100
    assert all(r.split()[2] == "1" for r in rows)
    assert (tmp_path / "s.txt.gt").exists()


def test_synth_row_count(tmp_path, capsys):
    out = tmp_path / "s.txt"
    assert cli("synth", "--outliers", 500, "--sigma", 2, "--style", "dashed", "--out", out) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(rows) == 600


def test_synth_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert cli("synth", "--style", "dashed", "--sigma", 3, "--outliers", 50, "--seed", 9, "--out", path) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.txt.gt").read_bytes() == (tmp_path / "b.txt.gt").read_bytes()


def test_synth_unwritable(tmp_path, capsys):
    code, _, err = run_cli(capsys, "synth", "--out", tmp_path / "no" / "such" / "dir.txt")
    assert code == 1 and err


# bench


def test_bench_single_row(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "bench", "--grid", "style=straight;sigma=1;outliers=50", "--trials", 1,
                           "--methods", "gc", "--out-dir", tmp_path)
    assert code == 0
    lines = (tmp_path / "trials.csv").read_text().splitlines()
    assert len(lines) == 2
    assert (tmp_path / "trials.agg.csv").exists()
    assert out.splitlines()[0].split()[0] == "method"


def test_bench_both_methods(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "bench", "--grid", "sigma=1;outliers=50", "--trials", 2,
                           "--methods", "gc,baseline", "--out-dir", tmp_path)
    assert code == 0
    agg = (tmp_path / "trials.agg.csv").read_text()
    assert "\ngc," in agg and "\nplain-baseline," in agg


def test_bench_config_errors(tmp_path, capsys):
    for args in (["--grid", "sigma=a"], ["--grid", "colour=red"], ["--methods", "msac"], ["--trials", 0]):
        code, _, err = run_cli(capsys, "bench", "--out-dir", tmp_path, *args)
        assert code == 1 and err


def test_parse_grid():
    g = parse_grid("style=straight,dashed; sigma=0,2 ;outliers=100,500;kind=line")
    assert g == {"styles": ["straight", "dashed"], "sigmas": [0.0, 2.0], "outliers": [100, 500], "kind": "line"}
    with pytest.raises(InvalidInputError):
        parse_grid("sigma=")


def test_module_entry_point(identity_file):
    proc = subprocess.run([sys.executable, "-m", "gcransac", "fit", "--input", str(identity_file),
                           "--model", "homography"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("model: homography")
