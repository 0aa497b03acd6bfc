import json
import subprocess
import sys

import pytest

from greenbundles.cli import run


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_systems_list_and_export(capsys, tmp_path):
    code, out, _ = call(capsys, "systems", "list")
    names = [s["name"] for s in json.loads(out)]
    assert code == 0 and "pendulum" in names
    f = tmp_path / "m.json"
    code, out, _ = call(capsys, "systems", "export", "mathieu", "--file", str(f))
    assert code == 0 and json.loads(f.read_text()) == json.loads(out)
    code, out, _ = call(capsys, "greens", "--system", str(f), "--T", "10")
    assert code == 0 and json.loads(out)["converged"]


def test_config_errors_are_json(capsys, tmp_path):
    for argv in (["orbit", "--system", "nosuch"],
                 ["orbit"],
                 ["frobnicate"],
                 [],
                 ["--tol", "-1", "orbit", "--system", "pendulum"],
                 ["orbit", "--system", "pendulum", "--x", "1", "2"],
                 ["index", "--system", "pendulum", "--set", "1,2,3,4"],
                 ["cocycle", "--maps", str(tmp_path / "none.json")]):
        code, out, err = call(capsys, *argv)
        assert code == 2, argv
        doc = json.loads(err)
        assert doc["exit_code"] == 2 and "message" in doc


def test_numerical_error_exit(capsys):
    code, _, err = call(capsys, "greens", "--system", "harmonic", "--T", "2")
    assert code == 3 and json.loads(err)["error"] == "disconjugacy-violation"


def test_orbit_and_jacobi(capsys, tmp_path):
    code, out, _ = call(capsys, "--out", str(tmp_path), "orbit", "--system", "pendulum",
                        "--x", "0.1", "--p", "0.5", "--T", "3", "--samples", "11")
    assert code == 0 and json.loads(out)["energy_drift"] < 1e-8
    rows = (tmp_path / "orbit.csv").read_text().splitlines()
    assert rows[0] == "t,x0,p0,H" and len(rows) == 12
    code, out, _ = call(capsys, "jacobi", "--system", "harmonic", "--T", "4", "--plot-data",
                        "--samples", "5")
    assert code == 0
    assert json.loads(out.split("\n# ")[0])["jacobi_residual"] < 1e-6
    assert "# t x0 p0 H H00 V00" in out


def test_riccati_and_conjugate(capsys):
    code, out, _ = call(capsys, "riccati", "--system", "pendulum", "--T", "10")
    doc = json.loads(out)
    assert code == 0 and doc["verification"]["passed"]
    code, out, _ = call(capsys, "conjugate", "--system", "harmonic", "--T", "10")
    doc = json.loads(out)
    assert code == 0 and len(doc["conjugate_times"]) == 3


def test_index_command(capsys, tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("x,p\n0.0,0.0\n")
    code, out, _ = call(capsys, "--out", str(tmp_path), "index", "--system", "pendulum",
                        "--T", "5", "10", "--mesh", "64", "--set", str(pts))
    assert code == 0 and json.loads(out)["uniform_a"] > 1.0
    assert (tmp_path / "index.csv").read_text().startswith("T,a_min\n5.0,")


def test_hyperbolicity_exit_codes(capsys):
    code, out, _ = call(capsys, "hyperbolicity", "--system", "pendulum", "--pipeline", "theoremA",
                        "--T-list", "5", "10", "--mesh", "128")
    assert code == 0 and json.loads(out)["verdict"] == "hyperbolic"
    code, out, _ = call(capsys, "hyperbolicity", "--system", "free_particle(2)")
    assert code == 1 and json.loads(out)["verdict"] == "not_hyperbolic"
    code, out, _ = call(capsys, "hyperbolicity", "--system", "free_particle", "--pipeline", "theoremA",
                        "--T-list", "5", "10", "--mesh", "64")
    assert code == 1 and json.loads(out)["verdict"] == "hypothesis_not_satisfied"
    code, out, _ = call(capsys, "hyperbolicity", "--system", "pendulum", "--pipeline", "cocycle",
                        "--horizon", "10")
    assert code == 0 and json.loads(out)["verdict"] == "quasi_hyperbolic"


def test_cocycle_command(capsys, tmp_path):
    assert call(capsys, "cocycle")[0] == 0
    assert call(capsys, "cocycle", "--builtin", "rotation")[0] == 1
    code, out, _ = call(capsys, "cocycle", "--builtin", "shear")
    assert code == 1 and json.loads(out)["intersection_flagged"]
    f = tmp_path / "maps.json"
    f.write_text(json.dumps([[[2, 0], [0, 0.5]], [[3, 0], [0, 1 / 3]]]))
    code, out, _ = call(capsys, "cocycle", "--maps", str(f), "--boundary", "clamp", "--points", "0", "1")
    assert code == 0 and json.loads(out)["dims"] == {"0": [1, 1], "1": [1, 1]}


def test_global_flags_before_and_after(capsys):
    a = call(capsys, "--tol", "1e-9", "greens", "--system", "pendulum")[1]
    b = call(capsys, "greens", "--system", "pendulum", "--tol", "1e-9")[1]
    c = call(capsys, "greens", "--system", "pendulum")[1]
    assert a == b and a != c


def test_deterministic_reports(capsys, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / str(k)
        code, out, _ = call(capsys, "--out", str(d), "hyperbolicity", "--system", "rotor_pendulum")
        assert code == 0
        outs.append((out, (d / "hyperbolicity.json").read_bytes()))
    assert outs[0] == outs[1]


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "greenbundles.cli", "cocycle", "--builtin", "rotation"],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and json.loads(proc.stdout)["verdict"] == "not_quasi_hyperbolic"
