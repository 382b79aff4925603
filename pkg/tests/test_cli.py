"""Command-line harness: exit codes, report schema, determinism."""

import csv
import io
import json
import subprocess
import sys

import pytest

from toffsim.cli import main


def run_cli(argv, capsys):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


# -- exit code contract -----------------------------------------------------------

def test_unknown_subcommand_is_config_error(capsys):
    rc, _, err = run_cli(["frobnicate"], capsys)
    assert rc == 1
    assert "error" in err


def test_bad_flag_value_is_config_error(capsys):
    rc, _, err = run_cli(["estimate", "--format", "xml"], capsys)
    assert rc == 1
    assert "format" in err


def test_negative_seed_rejected(capsys):
    rc, _, err = run_cli(["estimate", "--seed", "-4"], capsys)
    assert rc == 1
    assert "seed" in err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.json", {"bogus": 1})
    rc, _, err = run_cli(["estimate", "--config", cfg], capsys)
    assert rc == 1
    assert "bogus" in err


def test_missing_config_file(tmp_path, capsys):
    rc, _, err = run_cli(["estimate", "--config", str(tmp_path / "nope.json")], capsys)
    assert rc == 1


def test_malformed_config_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    rc, _, err = run_cli(["estimate", "--config", str(path)], capsys)
    assert rc == 1


def test_trials_flag_rejected_for_estimate(capsys):
    rc, _, err = run_cli(["estimate", "--trials", "5"], capsys)
    assert rc == 1
    assert "trials" in err


def test_unitary_model_rejects_effective_mode(tmp_path, capsys):
    cfg = write_config(tmp_path, "nm.json", {"model": "unitary", "mode": "effective"})
    rc, _, err = run_cli(["noisy-meas", "--config", cfg, "--trials", "5"], capsys)
    assert rc == 1


def test_bad_corrupt_branch_value(capsys):
    rc, _, err = run_cli(["toffoli-verify", "--trials", "2",
                          "--corrupt-branch=+2,+1,+1"], capsys)
    assert rc == 1
    assert "branch" in err


# -- happy paths, one per subcommand ---------------------------------------------------

def test_toffoli_verify_passes_checks(capsys):
    rc, out, _ = run_cli(["toffoli-verify", "--trials", "3", "--check"], capsys)
    assert rc == 0
    report = json.loads(out)
    names = {c["name"] for c in report["checks"]}
    assert names == {"branch fidelity", "truth table"}
    assert all(c["passed"] for c in report["checks"])


def test_toffoli_verify_negative_control(capsys):
    rc, out, _ = run_cli(["toffoli-verify", "--trials", "2",
                          "--corrupt-branch=-1,+1,+1", "--check"], capsys)
    assert rc == 0  # detecting the sabotage is the passing outcome
    report = json.loads(out)
    (control,) = report["checks"]
    assert control["name"] == "negative control"
    assert control["passed"]
    assert "-1,+1,+1" in report["results"]["flagged_branches"]


def test_distill_passes_checks(tmp_path, capsys):
    cfg = write_config(tmp_path, "d.json", {"levels": 2, "alpha3": 0.5, "trials": 60})
    rc, out, _ = run_cli(["distill", "--config", cfg, "--check"], capsys)
    assert rc == 0
    report = json.loads(out)
    assert all(c["passed"] for c in report["checks"])
    assert report["parameters"]["trials"] == 60


def test_noisy_meas_passes_checks(capsys):
    rc, out, _ = run_cli(["noisy-meas", "--trials", "400", "--check"], capsys)
    assert rc == 0
    report = json.loads(out)
    assert report["parameters"]["model"] == "decoherent"
    assert all(c["passed"] for c in report["checks"])


def test_ensemble_passes_checks(tmp_path, capsys):
    cfg = write_config(tmp_path, "e.json",
                       {"n": 20, "levels": 3, "p": 0.02, "defect_fraction": 0.05,
                        "defect_p": 0.9, "trials": 60})
    rc, out, _ = run_cli(["ensemble", "--config", cfg, "--check"], capsys)
    assert rc == 0
    report = json.loads(out)
    assert all(c["passed"] for c in report["checks"])


def test_estimate_passes_checks(capsys):
    rc, out, _ = run_cli(["estimate", "--check"], capsys)
    assert rc == 0
    report = json.loads(out)
    names = {c["name"] for c in report["checks"]}
    assert names == {"single-level exponent", "two-level exponent"}


# -- check semantics ------------------------------------------------------------------------

def test_failed_check_exits_two_and_reports(tmp_path, capsys):
    # a hotter physical error overshoots the expected single-level window
    cfg = write_config(tmp_path, "hot.json", {"physical_error_log10": -3.5})
    rc, out, err = run_cli(["estimate", "--config", cfg, "--check"], capsys)
    assert rc == 2
    assert "check failed" in err
    report = json.loads(out)
    assert not all(c["passed"] for c in report["checks"])


def test_failed_check_without_flag_still_exits_zero(tmp_path, capsys):
    cfg = write_config(tmp_path, "hot.json", {"physical_error_log10": -3.5})
    rc, out, _ = run_cli(["estimate", "--config", cfg], capsys)
    assert rc == 0
    report = json.loads(out)
    assert not all(c["passed"] for c in report["checks"])


# -- report envelope --------------------------------------------------------------------------

def test_report_envelope_fields(capsys):
    rc, out, _ = run_cli(["estimate", "--seed", "7"], capsys)
    assert rc == 0
    report = json.loads(out)
    assert report["schema"] == "toffsim-report/1"
    assert report["command"] == "estimate"
    assert report["seed"] == 7
    assert set(report["versions"]) == {"toffsim", "numpy", "kernel_backend"}
    assert isinstance(report["wall_time_seconds"], float)
    assert isinstance(report["parameters"], dict)
    assert isinstance(report["results"], dict)
    assert isinstance(report["checks"], list)


def test_config_file_overrides_defaults(tmp_path, capsys):
    cfg = write_config(tmp_path, "t.json", {"tolerance": 1e-8})
    rc, out, _ = run_cli(["toffoli-verify", "--config", cfg, "--trials", "2"], capsys)
    assert rc == 0
    report = json.loads(out)
    assert report["parameters"]["tolerance"] == 1e-8
    assert report["parameters"]["trials"] == 2


# -- determinism -------------------------------------------------------------------------------

def strip_timing(path):
    report = json.loads(path.read_text())
    del report["wall_time_seconds"]
    return report


def test_json_reports_identical_up_to_timing(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        rc = main(["noisy-meas", "--trials", "200", "--seed", "11",
                   "--out", str(out)])
        assert rc == 0
    capsys.readouterr()
    assert strip_timing(a) == strip_timing(b)


def test_csv_reports_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        rc = main(["distill", "--trials", "40", "--seed", "3",
                   "--format", "csv", "--out", str(out)])
        assert rc == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_different_seed_changes_sampled_results(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["distill", "--trials", "40", "--seed", "1", "--out", str(a)]) == 0
    assert main(["distill", "--trials", "40", "--seed", "2", "--out", str(b)]) == 0
    capsys.readouterr()
    ra, rb = strip_timing(a), strip_timing(b)
    assert ra["results"] != rb["results"]


# -- CSV layouts ------------------------------------------------------------------------------

def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


def test_toffoli_csv_header(capsys):
    rc, out, _ = run_cli(["toffoli-verify", "--trials", "2", "--format", "csv"],
                         capsys)
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["branch", "min_fidelity", "mean_fidelity", "corrections"]
    assert len(rows) == 9  # one row per measurement branch


def test_distill_csv_header(capsys):
    rc, out, _ = run_cli(["distill", "--trials", "5", "--format", "csv"], capsys)
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["trial", "combine_attempts", "combine_successes",
                       "leaves_used"]
    assert len(rows) == 6


def test_noisy_meas_csv_header(capsys):
    rc, out, _ = run_cli(["noisy-meas", "--trials", "10", "--format", "csv"],
                         capsys)
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["trial", "n", "model", "reported", "true",
                       "alpha3_estimate"]
    assert len(rows) == 11


def test_ensemble_csv_headers_by_model(tmp_path, capsys):
    cfg = write_config(tmp_path, "dec.json",
                       {"n": 20, "levels": 2, "trials": 5})
    rc, out, _ = run_cli(["ensemble", "--config", cfg, "--format", "csv"], capsys)
    assert rc == 0
    assert read_csv(out)[0] == ["trial", "empirical_fidelity",
                                "log_contamination", "analytic_sampled"]

    cfg_u = write_config(tmp_path, "uni.json",
                         {"model": "unitary", "n": 30, "levels": 1,
                          "p": 0.01, "trials": 2000})
    rc, out, _ = run_cli(["ensemble", "--config", cfg_u, "--format", "csv"], capsys)
    assert rc == 0
    rows = read_csv(out)
    assert rows[0] == ["method", "value"]
    assert {r[0] for r in rows[1:]} >= {"monte_carlo", "series", "closed_form"}


def test_estimate_csv_golden_first_rows(capsys):
    rc, out, _ = run_cli(["estimate", "--format", "csv"], capsys)
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == ("strategy,target_log10,level,block_size,"
                        "failure_log10,gate_failure_log10")
    assert lines[1] == ("progressive,-9.0,1,1000,"
                        "-8.838826932936374,-6.178074899639857")


# -- console entry point ------------------------------------------------------------------------

def test_module_invocation_end_to_end(tmp_path):
    out = tmp_path / "report.json"
    proc = subprocess.run(
        [sys.executable, "-m", "toffsim.cli", "estimate", "--check",
         "--out", str(out)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    report = json.loads(out.read_text())
    assert report["schema"] == "toffsim-report/1"
