import csv
import json
import math
import os
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from pdm_ladder.cli import main, read_config, report_schema, scenario_from_mapping, ConfigError


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_potential_quadratic(tmp_path):
    assert run(tmp_path, "potential", "--profile", "quadratic") == 0
    raw = (tmp_path / "potential.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    header, data = read_csv(tmp_path / "potential.csv")
    assert header == ["x", "m", "F", "V_R", "V_I"]
    assert data.shape == (4001, 5)
    row = data[np.argmin(np.abs(data[:, 0]))]
    assert row[0] == 0 and row[4] == 0
    # 12 significant digits at most
    assert all(len(v.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 12
               for v in raw.decode().splitlines()[1].split(","))
    svg = (tmp_path / "potential.svg").read_text()
    assert svg.startswith("<?xml") and "λ = 0.2" in svg and "V_I" in svg


def test_potential_cosine_mass_column(tmp_path):
    assert run(tmp_path, "potential", "--profile", "cosine", "--grid", "801") == 0
    _, data = read_csv(tmp_path / "potential.csv")
    np.testing.assert_allclose(data[:, 1], 1.1 + np.cos(data[:, 0]), rtol=1e-11)


def test_unwritable_output_is_exit_2(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["potential", "--profile", "quadratic", "--out", str(blocker / "sub")]) == 2
    assert "error" in capsys.readouterr().err


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0, reason="root ignores permissions")
def test_read_only_directory_is_exit_2(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    try:
        assert main(["potential", "--profile", "quadratic", "--out", str(ro)]) == 2
    finally:
        ro.chmod(0o700)


def test_states_spectrum(tmp_path):
    assert run(tmp_path, "states", "--profile", "quadratic", "--nmax", "1") == 0
    spectrum = json.loads((tmp_path / "spectrum.json").read_text())
    assert set(spectrum) >= {"energies", "norm_constants", "params"}
    assert spectrum["energies"] == pytest.approx([0.52, 1.52], abs=1e-15)
    assert spectrum["norm_constants"][0][0] == pytest.approx(0.751126, abs=1e-4)
    header, data = read_csv(tmp_path / "states.csv")
    assert header == ["x", "re_psi_0", "im_psi_0", "re_psi_1", "im_psi_1"]
    assert (tmp_path / "state_0.svg").exists() and (tmp_path / "state_1.svg").exists()


def test_states_lambda_zero_and_single_state(tmp_path):
    assert run(tmp_path, "states", "--profile", "quadratic", "--lambda", "0", "--nmax", "0",
               "--grid", "1001") == 0
    header, data = read_csv(tmp_path / "states.csv")
    assert header == ["x", "re_psi_0", "im_psi_0"]
    assert np.all(data[:, 2] == 0)


def test_states_decay_failure_reports_domain(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("expr = 1 + x^2\nxmin = -1.5\nxmax = 1.5\nn = 801\n")
    assert main(["states", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "try the domain" in capsys.readouterr().err


def test_validate_writes_schema_valid_report(tmp_path):
    assert run(tmp_path, "validate", "--profile", "quadratic", "--nmax", "2") == 0
    report = json.loads((tmp_path / "report.json").read_text())
    jsonschema.validate(report, report_schema())
    assert list(report) == ["scenario", "residuals", "gram_bilinear", "gram_sesquilinear",
                            "commutators", "factorization", "convergence", "nodes", "verdict"]


def test_validate_a_override_fails(tmp_path):
    assert run(tmp_path, "validate", "--profile", "quadratic", "--expert-a", "2") == 1
    report = json.loads((tmp_path / "report.json").read_text())
    jsonschema.validate(report, report_schema())
    assert report["verdict"]["failed"] == ["factorization"]


def test_validate_coarse_grid_fails_with_hint(tmp_path, capsys):
    assert run(tmp_path, "validate", "--profile", "quadratic", "--grid", "201") == 1
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["residuals"]["status"] == "fail"
    assert "refine grid" in report["residuals"]["hint"]
    assert "refine grid" in capsys.readouterr().err


def test_sweep_quadratic(tmp_path):
    assert run(tmp_path, "sweep-lambda", "--profile", "quadratic") == 0
    text = (tmp_path / "sweep.csv").read_text(encoding="utf-8")
    assert text.splitlines()[0] == "λ,node_count_re,node_count_im,E₀"
    _, data = read_csv(tmp_path / "sweep.csv")
    assert list(data[:, 0]) == [0, 1, 2, 4]
    assert np.all(np.diff(data[:, 1]) >= 0) and data[-1, 1] > data[0, 1]
    svg = (tmp_path / "sweep.svg").read_text()
    assert all(f"λ = {v}" in svg for v in ("0", "1", "2", "4"))


def test_sweep_single_lambda(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("profile = quadratic\nsweep = 0\nn = 1001\n")
    assert main(["sweep-lambda", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "sweep.csv")
    assert data.tolist() == [[0, 0, 0, 0.5]]


def test_sweep_exponential_energies(tmp_path):
    assert run(tmp_path, "sweep-lambda", "--profile", "exponential", "--grid", "2001") == 0
    _, data = read_csv(tmp_path / "sweep.csv")
    np.testing.assert_allclose(data[:, 3], 0.5 + data[:, 0] ** 2 / 2, rtol=1e-12)


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# scenario\nprofile = quadratic\nlambda = 0.5\nnmax = 2\nn = 1001\n"
                   f"outdir = {tmp_path / 'a'}\n")
    sc = scenario_from_mapping(read_config(cfg))
    assert sc.params.lam == 0.5 and sc.nmax == 2 and sc.n == 1001
    assert main(["states", "--config", str(cfg), "--lambda", "0"]) == 0
    spectrum = json.loads((tmp_path / "a" / "spectrum.json").read_text())
    assert spectrum["params"]["lambda"] == 0.0 and spectrum["energies"] == [0.5, 1.5, 2.5]


@pytest.mark.parametrize("text, flags", [
    ("profile = quadratic\ncolour = red\n", []),
    ("profile = quadratic\nprofile = cosine\n", []),
    ("profile = quadratic\n", ["--nmax", "13"]),
    ("profile = quadratic\n", ["--grid", "200"]),
    ("profile = nowhere\n", []),
    ("expr = 1 + x^\nxmin = -1\nxmax = 1\n", []),
    ("expr = cos(x)\nxmin = -4\nxmax = 4\n", []),
    ("profile = quadratic\nsweep = 1, 1\n", []),
    ("profile = quadratic\nn = many\n", []),
])
def test_config_errors_exit_2(tmp_path, text, flags):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert main(["sweep-lambda", "--config", str(cfg), "--out", str(tmp_path), *flags]) == 2


def test_missing_config_file_exit_2(tmp_path):
    assert main(["potential", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_scenario_invariants():
    with pytest.raises(ConfigError):
        scenario_from_mapping({"profile": "quadratic", "expr": "1"})
    with pytest.raises(ConfigError):
        scenario_from_mapping({"expr": "1 + x^2"})


def test_outputs_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        out = str(tmp_path / d)
        for cmd in ("potential", "states", "validate"):
            assert main([cmd, "--profile", "quadratic", "--grid", "1001", "--nmax", "2",
                         "--out", out]) in (0, 1)
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == sorted(os.listdir(tmp_path / "b"))
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_console_script_exit_codes(tmp_path):
    exe = [sys.executable, "-m", "pdm_ladder.cli"]
    ok = subprocess.run([*exe, "potential", "--profile", "quadratic", "--grid", "401",
                         "--out", str(tmp_path)], capture_output=True)
    assert ok.returncode == 0
    bad = subprocess.run([*exe, "potential"], capture_output=True, text=True)
    assert bad.returncode == 2 and "profile" in bad.stderr
    usage = subprocess.run([*exe, "explode"], capture_output=True)
    assert usage.returncode == 2
