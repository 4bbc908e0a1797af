import json
import subprocess
import sys

import numpy as np
import pytest

from spiralvortex.cli import EXIT_FAIL, EXIT_USAGE, main
from spiralvortex.io import read_csv

SMALL_SIM = {"vortex_profile": "bump", "t_start": 0.0, "eps_over_L13": 0.25, "n": 128, "box": 8.0,
             "min_cells": 8, "box_factor": 4.0, "sim_horizon": 0.04, "samples": 4}


def run(tmp_path, command, config=None, *extra):
    argv = [command, "--out", str(tmp_path / "out")]
    if config is not None:
        tmp_path.mkdir(parents=True, exist_ok=True)
        p = tmp_path / "config.json"
        p.write_text(json.dumps(config))
        argv += ["--config", str(p)]
    code = main(argv + list(extra))
    return code, tmp_path / "out"


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_spiral_default(tmp_path):
    code, out = run(tmp_path, "spiral")
    assert code == 0
    s = summary(out)
    assert s["tau"] == pytest.approx(13.3286, abs=1e-4)
    header, rows = read_csv(out / "trajectory.csv")
    assert header[0] == "t" and header[-1] == "L13"
    assert rows.shape[0] == 201


def test_spiral_equilateral(tmp_path):
    code, out = run(tmp_path, "spiral", {"masses": [1, 1, -0.5], "L12": 1.0})
    assert code == EXIT_FAIL
    report = json.loads((out / "constraints.json").read_text())
    text = json.dumps(report)
    assert "non_equilateral" in text and "ordering" in text
    assert (out / "failure.json").exists()


def test_spiral_missing_masses(tmp_path):
    code, _ = run(tmp_path, "spiral", {"L13": 1.0})
    assert code == EXIT_USAGE


def test_unknown_key(tmp_path):
    code, _ = run(tmp_path, "spiral", {"masses": [1, 1, -0.5], "colour": "red"})
    assert code == EXIT_USAGE


def test_bad_seed(tmp_path):
    assert main(["spiral", "--out", str(tmp_path), "--seed", str(2**64)]) == EXIT_USAGE


def test_failure_report_cleared(tmp_path):
    run(tmp_path, "spiral", {"masses": [1, 1, -0.5], "L12": 1.0})
    code, out = run(tmp_path, "spiral", {"masses": [1, 1, -0.5]})
    assert code == 0 and not (out / "failure.json").exists()


def test_linearize_deterministic(tmp_path):
    a, out_a = run(tmp_path / "a", "linearize", None, "--seed", "11")
    b, out_b = run(tmp_path / "b", "linearize", None, "--seed", "11")
    assert a == b == 0
    assert (out_a / "linearization.csv").read_bytes() == (out_b / "linearization.csv").read_bytes()
    sa, sb = summary(out_a), summary(out_b)
    sa.pop("config"), sb.pop("config")
    assert sa == sb


def test_profile(tmp_path):
    code, out = run(tmp_path, "profile")
    assert code == 0
    header, rows = read_csv(out / "profile.csv")
    assert header == ["r", "nu", "dnu", "U"]


def test_approx_rejects_single_point(tmp_path):
    code, _ = run(tmp_path, "approx", {"epsilons": [0.05], "t_over_T0": [2.0]})
    assert code == EXIT_USAGE


def test_approx_sweep(tmp_path):
    code, out = run(tmp_path, "approx")
    assert code == 0
    s = summary(out)
    slopes = [v for k, v in s["slopes"].items() if k.startswith("supE1_eps")]
    assert len(slopes) == 3
    for v in slopes:
        assert v["slope"] == pytest.approx(5, abs=0.3) and v["stderr"] >= 0
    _, rows = read_csv(out / "residuals.csv")
    assert np.all(np.abs(rows[:, 4]) <= 1e-8 * rows[:, 3])


def test_simulate_default_refuses_resolution(tmp_path):
    code, out = run(tmp_path, "simulate")
    assert code == EXIT_FAIL
    assert json.loads((out / "failure.json").read_text())["error"] == "ResolutionError"


def test_simulate_refuses_cfl(tmp_path):
    code, out = run(tmp_path, "simulate", {**SMALL_SIM, "dt": 10.0})
    assert code == EXIT_FAIL
    assert json.loads((out / "failure.json").read_text())["error"] == "CFLError"
    assert not (out / "diagnostics.csv").exists()


def test_simulate_resume_bitwise(tmp_path):
    code, full = run(tmp_path / "full", "simulate", SMALL_SIM)
    assert code in (0, EXIT_FAIL)
    header, _ = read_csv(full / "diagnostics.csv")
    assert header == ["t", "j", "circ", "cx", "cy", "dev", "support_radius", "mass_outside_3eps"]
    dt = summary(full)["dt"]
    half = {**SMALL_SIM, "sim_horizon": 0.02, "dt": dt}
    run(tmp_path / "half", "simulate", half)
    ck = tmp_path / "half" / "out" / "checkpoint"
    run(tmp_path / "rest", "simulate", {**SMALL_SIM, "resume": str(ck)})
    a = (full / "checkpoint.bin").read_bytes()
    b = (tmp_path / "rest" / "out" / "checkpoint.bin").read_bytes()
    assert a == b


def test_accept_subset(tmp_path, capsys):
    code, out = run(tmp_path, "accept", None, "--criteria", "2")
    assert code == 0
    assert "[PASS] criterion 2" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "spiralvortex.cli", "spiral", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert (tmp_path / "summary.json").exists()
