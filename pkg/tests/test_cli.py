import json
import subprocess
import sys

import pytest

from hardsphere.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VERIFY, main


def write(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


def run(tmp_path, sub, payload, out="out", seed=None):
    args = [sub, "--config", write(tmp_path, f"{sub}.json", payload), "--out", str(tmp_path / out)]
    if seed is not None:
        args += ["--seed", str(seed)]
    return main(args)


def test_instance_profiles(tmp_path):
    assert run(tmp_path, "instance", {"d": 1, "eps": 0.5, "N_list": [5, 10, 20]}) == EXIT_OK
    out = tmp_path / "out"
    for N in (5, 10, 20):
        lines = (out / f"profile_N{N}.csv").read_text().splitlines()
        assert lines[0] == "geodesic_angle,f_value"
        angle, value = map(float, lines[1].split(","))
        assert angle == 0.0 and value == pytest.approx(1.0, abs=1e-12)
    man = json.loads((out / "instance_manifest.json").read_text())
    assert set(man["files"]) == {"instance.json", "profile_N5.csv", "profile_N10.csv", "profile_N20.csv"}
    assert all(man["checks"].values())
    for key in ("config_hash", "version", "seed", "wall_clock_seconds"):
        assert key in man


def test_instance_with_class(tmp_path):
    assert run(tmp_path, "instance", {"N_list": [3], "B": 1.0, "class_eps": 1e-3}) == EXIT_OK
    payload = json.loads((tmp_path / "out" / "instance.json").read_text())
    assert payload["class"]["member_norm"] <= 1.0


def test_verify_default_and_perturbed(tmp_path):
    assert run(tmp_path, "verify", {}, out="ok") == EXIT_OK
    text = (tmp_path / "ok" / "verify_report.json").read_text()
    assert json.dumps(json.loads(text), indent=2, sort_keys=True) == text
    assert run(tmp_path, "verify", {"perturb_b": 1.01}, out="bad") == EXIT_VERIFY
    report = json.loads((tmp_path / "bad" / "verify_report.json").read_text())
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert "dirichlet_cross_route" in failed


def test_mig_csv(tmp_path):
    assert run(tmp_path, "mig", {"T_list": [64, 256], "candidates": 2048}) == EXIT_OK
    lines = (tmp_path / "out" / "mig.csv").read_text().splitlines()
    assert lines[0] == "T,greedy_gain,bound_minM,M_star,ratio_to_theory"
    assert len(lines) == 3


def test_regret_reproducible(tmp_path):
    cfg = {"T_list": [60], "trials": 2, "candidates": 128}
    assert run(tmp_path, "regret", cfg, out="a") == EXIT_OK
    assert run(tmp_path, "regret", cfg, out="b") == EXIT_OK
    a = (tmp_path / "a" / "regret.csv").read_bytes()
    assert a == (tmp_path / "b" / "regret.csv").read_bytes()
    assert a.splitlines()[0].startswith(b"T,trial,eps,members,worst_member,R_T")
    assert run(tmp_path, "regret", cfg, out="c", seed=9) == EXIT_OK
    assert a != (tmp_path / "c" / "regret.csv").read_bytes()


def test_certify_rows(tmp_path):
    assert run(tmp_path, "certify", {"T": 20, "pairs": [[0, 0]], "candidates": 64}) == EXIT_OK
    lines = (tmp_path / "out" / "certify.csv").read_text().splitlines()
    assert len(lines) == 2 and "premises not met" in lines[1]


def test_exit_codes(tmp_path):
    assert run(tmp_path, "mig", {"bogus": 1}) == EXIT_CONFIG
    assert main(["mig", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG
    # eps too large for any degree to meet the budget
    assert run(tmp_path, "certify", {"eps": 0.9, "B": 1.0}) == EXIT_NUMERIC
    # the noise level breaks the schedule's hypothesis
    assert run(tmp_path, "regret", {"sigma": 100.0, "T_list": [10]}) == EXIT_CONFIG


def test_console_script(tmp_path):
    cfg = write(tmp_path, "i.json", {"N_list": [2], "profile_points": 11})
    res = subprocess.run([sys.executable, "-m", "hardsphere.cli", "instance", "--config", cfg, "--out",
                          str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    res = subprocess.run([sys.executable, "-m", "hardsphere.cli", "nope", "--config", cfg],
                         capture_output=True, text=True)
    assert res.returncode == 2
