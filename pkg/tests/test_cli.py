import csv
import json
import subprocess
import sys

import pytest

from tractdyn.cli import main
from tractdyn.export import read_ppm
from tractdyn.tract import Window


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_render_smoke(tmp_path, capsys):
    code, out, _ = run(["render", "--model", "exp", "--window", "-2,2,-2,2", "--res", "64x64",
                        "--workers", 1, "-o", tmp_path], capsys)
    assert code == 0
    img = read_ppm(tmp_path / "image.ppm")
    assert img.shape == (64, 64, 3)
    side = json.loads((tmp_path / "image.json").read_text())
    assert sum(side["histogram"].values()) == 64 * 64
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "render"
    assert manifest["config"]["window"] == [-2.0, 2.0, -2.0, 2.0]
    assert "timestamp" in manifest
    assert (tmp_path / "image.png").exists()
    assert json.loads(out)["shape"] == [64, 64]


def test_render_is_byte_identical(tmp_path, capsys):
    args = ["render", "--model", "example1", "--lambda", "2", "--res", "30x40", "--no-png"]
    run(args + ["--workers", 1, "-o", tmp_path / "a"], capsys)
    run(args + ["--workers", 2, "-o", tmp_path / "b"], capsys)
    for name in ("image.ppm", "image.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_render_preset_fig2_mid(tmp_path, capsys):
    code, _, _ = run(["render", "--preset", "fig2-mid", "--no-png", "-o", tmp_path], capsys)
    assert code == 0
    img = read_ppm(tmp_path / "image.ppm")
    side = json.loads((tmp_path / "image.json").read_text())
    w = Window(*(side["spec"]["window"][k] for k in
                 ("reMin", "reMax", "imMin", "imMax", "width", "height")))
    row, col = w.lattice_index([0j])
    assert list(img[row[0], col[0]]) == side["legend"]["Basin"]


def test_growth_exp(tmp_path, capsys):
    code, out, _ = run(["growth", "--model", "exp", "--R", 1, "--rmin", 5, "--rmax", 100,
                        "--no-png", "-o", tmp_path], capsys)
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "profile.csv").open()))
    assert rows
    for row in rows:
        assert 0.99 <= float(row["a"]) / float(row["r"]) <= 1.01
    summary = json.loads(out)
    assert summary["checkABound"]["fraction"] == 1.0
    assert summary["checkSqrtGrowth"]["holds"] is True


def test_growth_example1(tmp_path, capsys):
    code, _, _ = run(["growth", "--model", "example1", "--lambda", 1, "--R", 20, "--rmin", 3,
                      "--rmax", 12, "--no-png", "-o", tmp_path], capsys)
    assert code == 0
    assert len((tmp_path / "profile.csv").read_text().splitlines()) > 1


def test_growth_single_radius(tmp_path, capsys):
    code, out, _ = run(["growth", "--model", "exp", "--R", 1, "--rmin", 5, "--rmax", 5,
                        "--no-png", "-o", tmp_path], capsys)
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "profile.csv").open()))
    assert len(rows) == 1 and rows[0]["a"] == ""
    assert json.loads(out)["checkABound"] is None


def test_growth_circle_misses(tmp_path, capsys):
    code, _, err = run(["growth", "--model", "gamma_shift1", "--rmin", 0.1, "--rmax", 0.2,
                        "-o", tmp_path], capsys)
    assert code == 3
    assert err.count("\n") == 1 and "CircleMissesTract" in err


def test_wv_check(tmp_path, capsys):
    code, out, _ = run(["wv-check", "--model", "exp", "--R", 1, "--r", 100, "--tau", 0.75,
                        "-o", tmp_path], capsys)
    assert code == 0
    assert 0.025 <= json.loads(out)["relErrValue"] <= 0.075


def test_wv_sweep(tmp_path, capsys):
    code, out, _ = run(["wv-check", "--model", "exp", "--R", 1, "--rmin", 20, "--rmax", 60,
                        "--count", 4, "--samples", 32, "--no-png", "-o", tmp_path], capsys)
    assert code == 0
    assert (tmp_path / "sweep.csv").read_text().startswith("r,")
    assert json.loads(out)["flagged"] == []


def test_ode_bound(capsys):
    code, out, _ = run(["ode-bound", "f'' - z*f"], capsys)
    data = json.loads(out)
    assert code == 0
    assert data["verdict"] == "Bound" and data["bound"] == "1/2"
    assert data["kappaCandidates"] == ["3/2"]
    code, out, _ = run(["ode-bound", "f' - f^2"], capsys)
    assert json.loads(out)["verdict"] == "SingletonS"


def test_ode_bound_json_and_fit(tmp_path, capsys):
    path = tmp_path / "eq.json"
    path.write_text(json.dumps([{"t": [0, 1], "coeff": "1"}, {"t": [1, 0], "coeff": "-1"}]))
    code, out, _ = run(["ode-bound", "--json", path, "--verify-growth"], capsys)
    data = json.loads(out)
    assert code == 0 and data["bound"] == "1"
    assert abs(data["growthFit"]["slope"] - 1) <= 0.02


def test_ode_bound_errors(capsys):
    code, _, err = run(["ode-bound", "f' -* f"], capsys)
    assert code == 5 and "position 4" in err
    code, _, err = run(["ode-bound", "f - f"], capsys)
    assert code == 5 and "EmptyEquation" in err


def test_outer_seq(tmp_path, capsys):
    code, out, _ = run(["outer-seq", "--model", "exp", "--R", 1, "--no-png", "-o", tmp_path],
                       capsys)
    data = json.loads(out)
    assert code == 0 and data["completed"] == 2
    assert data["steps"][0]["rNext"] >= 48


def test_outer_seq_precondition(tmp_path, capsys):
    code, _, err = run(["outer-seq", "--model", "exp", "--R", 1, "--radius", 0.5,
                        "-o", tmp_path], capsys)
    assert code == 6 and "PreconditionViolation" in err


def test_tract_info(tmp_path, capsys):
    code, out, _ = run(["tract-info", "--model", "example1", "--lambda", 1, "--R", 20,
                        "--seed", 6, "-o", tmp_path], capsys)
    assert code == 0
    assert json.loads(out)["direct"] == "DirectCandidate"
    assert (tmp_path / "tract.pgm").exists() and (tmp_path / "tract.png").exists()


def test_negative_flag_values(tmp_path, capsys):
    code, out, _ = run(["tract-info", "--model", "example1", "--lambda", 1, "--R", 5,
                        "--seed", "-8", "--window", "-10,8,-12,12", "--res", "200x200",
                        "--no-png", "-o", tmp_path], capsys)
    assert code == 0
    assert json.loads(out)["direct"] == "ContainsPole"


@pytest.mark.parametrize("argv,code", [
    (["render", "--res", "3"], 2),
    (["render", "--window", "1,0,0,1"], 2),
    (["growth", "--model", "exp"], 2),
    (["frobnicate"], 2),
])
def test_flag_errors(argv, code, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == code


def test_unknown_model_and_seed(tmp_path, capsys):
    code, _, err = run(["growth", "--model", "nope", "--rmin", 1, "--rmax", 2, "-o", tmp_path],
                       capsys)
    assert code == 2 and err.startswith("tractdyn:")
    code, _, _ = run(["tract-info", "--model", "exp", "--R", 1, "--seed", "-3", "-o", tmp_path],
                     capsys)
    assert code == 3


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "tractdyn.cli", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "tractdyn" in res.stdout
