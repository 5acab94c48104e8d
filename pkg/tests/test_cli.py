import csv
import hashlib
import json
import math
import subprocess
import sys

import pytest

from fluidem import chsh
from fluidem.cli import main


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def load(path):
    return json.loads(path.read_text())


def snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


@pytest.mark.parametrize("n,expect", [(1, -2 * math.pi), (0, 0.0), (3, -6 * math.pi)])
def test_vortex_winding(tmp_path, n, expect):
    code, out = run(tmp_path, "vortex", "--n", str(n), "--k-r", "1", "--loop-r", "2", "--h", "0.1")
    assert code == 0
    s = load(out / "vortex_summary.json")
    assert s["winding"] == pytest.approx(expect, abs=1e-9)
    assert all(c["passed"] for c in s["checks"])
    assert {"vortex_density.fld", "vortex_B.fld", "vortex_density_z0.csv"} <= set(snapshot(out))


def test_vortex_csv_slice(tmp_path):
    code, out = run(tmp_path, "vortex", "--n", "1", "--h", "0.1")
    with open(out / "vortex_density_z0.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {float(r["z"]) for r in rows} == {0.0}
    assert len(rows) == 51 * 51


def test_manifest_checksums(tmp_path):
    code, out = run(tmp_path, "vortex", "--n", "2", "--h", "0.1")
    m = load(out / "manifest.json")
    assert set(m["artifacts"]) == set(snapshot(out)) - {"manifest.json"}
    for name, digest in m["artifacts"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    cfg = m["config"]
    assert cfg["n"] == 2 and cfg["command"] == "vortex"
    assert cfg["tolerances"]["winding_analytic"] == 1e-9
    assert "out" not in cfg and "workers" not in cfg


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("FLUIDEM_OUT", str(tmp_path / "env"))
    assert main(["chsh", "--phi", "0", "--n-trials", "10"]) == 0
    assert (tmp_path / "env" / "chsh_tally.json").exists()


def test_default_output_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("FLUIDEM_OUT", raising=False)
    monkeypatch.chdir(tmp_path)
    assert main(["chsh", "--phi", "0", "--n-trials", "10"]) == 0
    assert (tmp_path / "fluidem-out" / "manifest.json").exists()


@pytest.mark.parametrize("suite", ["wave", "calculus"])
def test_verify_passes(tmp_path, suite):
    code, out = run(tmp_path, "verify", "--suite", suite)
    assert code == 0
    rep = load(out / "verify_report.json")
    assert rep["passed"] and list(rep["suites"]) == [suite]


def test_verify_lorentz_single_speed(tmp_path):
    code, out = run(tmp_path, "verify", "--suite", "lorentz", "--v", "0.5")
    assert code == 0
    names = [c["name"] for c in load(out / "verify_report.json")["suites"]["lorentz"]["checks"]]
    assert any("v=0.5c" in n for n in names)


def test_verify_tolerance_override_fails(tmp_path):
    code, out = run(tmp_path, "verify", "--suite", "wave", "--tol", "wave_rel=1e-30")
    assert code == 1
    assert load(out / "manifest.json")["config"]["tolerances"]["wave_rel"] == 1e-30
    assert not load(out / "verify_report.json")["passed"]


@pytest.mark.parametrize("tol", ["wave_rel", "nonsense=1", "wave_rel=abc"])
def test_bad_tolerance_is_usage_error(tmp_path, tol):
    assert run(tmp_path, "verify", "--suite", "calculus", "--tol", tol)[0] == 2


def test_bad_speed_is_usage_error(tmp_path):
    assert run(tmp_path, "verify", "--suite", "lorentz", "--v", "1.2")[0] == 2


def test_bjerknes_aligned(tmp_path):
    code, out = run(tmp_path, "bjerknes", "--mode", "aligned", "--d-min", "0.1", "--d-max", "10",
                    "--points", "32")
    assert code == 0
    fit = load(out / "bjerknes_fit.json")
    assert fit["exponent"] == pytest.approx(-2.0, abs=0.02)
    assert abs(fit["force_at_unit_distance"]) == pytest.approx(0.5, abs=1e-9)
    with open(out / "bjerknes_sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 32
    assert list(rows[0]) == ["d", "d_over_lambda", "mean_force", "abs_mean_force", "closed_form"]


def test_bjerknes_phase_flip(tmp_path):
    args = ["bjerknes", "--mode", "offset", "--d-min", "0.001", "--d-max", "0.05"]
    c0, o0 = run(tmp_path, *args, "--psi", "0", name="a")
    c1, o1 = run(tmp_path, *args, "--psi", "3.14159", name="b")
    assert c0 == c1 == 0
    f0 = load(o0 / "bjerknes_fit.json")["force_at_unit_distance"]
    f1 = load(o1 / "bjerknes_fit.json")["force_at_unit_distance"]
    assert f0 * f1 < 0


def test_bjerknes_mixed_sign_exit_1(tmp_path):
    code, out = run(tmp_path, "bjerknes", "--mode", "offset")
    assert code == 1
    fit = load(out / "bjerknes_fit.json")
    assert fit["exponent"] is None and len(fit["sign_changes"]) >= 2


@pytest.mark.parametrize("argv", [["--points", "4"], ["--d-min", "1", "--d-max", "5"],
                                  ["--d-min", "-1"], ["--dV", "-1"]])
def test_bjerknes_usage_errors(tmp_path, argv):
    assert run(tmp_path, "bjerknes", *argv)[0] == 2


def test_chsh_phi_zero_exact(tmp_path):
    code, out = run(tmp_path, "chsh", "--phi", "0", "--n-trials", "10")
    assert code == 0
    t = load(out / "chsh_tally.json")
    assert t["E"] == 1.0 and t["n"] == 10
    assert load(out / "manifest.json")["config"]["rng"] == chsh.RNG_ALGORITHM


def test_chsh_curve(tmp_path):
    code, out = run(tmp_path, "chsh", "--curve", "--n-trials", "100000", "--seed", "42")
    assert code == 0
    with open(out / "chsh_curve.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 19
    for r in rows:
        e, a = float(r["E_hat"]), float(r["analytic"])
        assert abs(e - a) <= 3 * math.sqrt(max(0.0, 1 - a * a) / 100000) + 1e-15


def test_chsh_custom_angles(tmp_path):
    code, out = run(tmp_path, "chsh", "--angles", "0,0,0,0", "--n-trials", "100")
    assert code == 0
    s = load(out / "chsh_summary.json")
    assert s["S"] == 2.0 and s["S_analytic"] == 2.0


@pytest.mark.parametrize("argv", [["--angles", "1,2"], ["--angles", "a,b,c,d"], [],
                                  ["--phi", "0", "--n-trials", "0"], ["--phi", "0", "--seed", "-1"],
                                  ["--phi", "0", "--workers", "0"]])
def test_chsh_usage_errors(tmp_path, argv):
    assert run(tmp_path, "chsh", *argv)[0] == 2


def test_parse_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["vortex", "--out", str(tmp_path)])  # --n is required
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["teleport"])
    assert err.value.code == 2


def test_bad_fluid_params_exit_2(tmp_path):
    assert run(tmp_path, "vortex", "--n", "1", "--c", "-1")[0] == 2


@pytest.mark.parametrize("cmd", ["vortex", "verify", "bjerknes", "chsh"])
def test_help(cmd, capsys):
    with pytest.raises(SystemExit) as err:
        main([cmd, "--help"])
    assert err.value.code == 0
    assert "--out" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["vortex", "--n", "1", "--h", "0.1"],
    ["bjerknes", "--points", "16", "--d-min", "0.1", "--d-max", "5"],
    ["chsh", "--curve", "--angles", "canonical", "--phi", "0.3", "--n-trials", "20000", "--seed", "3"],
    ["verify", "--suite", "calculus"],
])
def test_byte_identical_reruns(tmp_path, argv):
    assert run(tmp_path, *argv, name="a")[0] == 0
    assert run(tmp_path, *argv, name="b")[0] == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")


def test_workers_do_not_change_artifacts(tmp_path):
    argv = ["chsh", "--curve", "--points", "5", "--n-trials", "3000000", "--seed", "9"]
    assert run(tmp_path, *argv, "--workers", "1", name="a")[0] == 0
    assert run(tmp_path, *argv, "--workers", "4", name="b")[0] == 0
    assert snapshot(tmp_path / "a") == snapshot(tmp_path / "b")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fluidem", "chsh", "--phi", "0", "--n-trials", "5",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "E(0) = 1.000000" in proc.stdout
