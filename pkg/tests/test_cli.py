import json
import subprocess
import sys

import pytest

from qcertify import cli
from qcertify.experiments import CSV_HEADER
from qcertify.measurement import MeasurementScheme, canonical_povm, dump_scheme


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


def test_demo_fooling_d4(capsys):
    code, out = run(capsys, "demo-fooling", "--d", "4")
    rep = json.loads(out)
    assert code == 0 and rep["format_version"] == 1 and rep["experiment"] == "demo-fooling"
    assert rep["summary"]["max_born_difference"] <= 1e-12
    assert abs(rep["summary"]["trace_norm"] - 1.5) <= 1e-10


def test_demo_fooling_mub_contrast(capsys):
    rep = json.loads(run(capsys, "demo-fooling", "--d", "2")[1])
    c = rep["summary"]["mub_contrast"]
    assert c["l2_gap_sq"] > 0 and abs(c["l2_gap_sq"] - c["l2_gap_formula"]) <= 1e-12


def test_spectrum_named_and_file(capsys, tmp_path):
    rep = json.loads(run(capsys, "spectrum", "--scheme", "canonical", "--d", "2")[1])
    assert rep["summary"]["zero_space_dim"] == 2
    path = tmp_path / "s.json"
    path.write_text(dump_scheme(MeasurementScheme.repeated(canonical_povm(3), 2)))
    rep = json.loads(run(capsys, "spectrum", "--scheme", str(path))[1])
    assert abs(rep["summary"]["trace"] - 3) <= 1e-9
    rep = json.loads(run(capsys, "spectrum", "--scheme", "mub", "--d", "3")[1])
    assert abs(rep["summary"]["trace"] - 3) <= 1e-9
    assert rep["summary"]["smallest_half_square_sum"] <= 2 + 1e-9


def test_spectrum_parse_error_has_location(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "dim": 2,\n  "copies": oops\n}')
    code, out = run(capsys, "spectrum", "--scheme", str(path))
    err = json.loads(out)["error"]
    assert code == 1 and err["type"] == "SchemeFormatError" and "line 3" in err["message"]


def test_bounds_canonical_adversarial_zero(capsys):
    rep = json.loads(run(capsys, "bounds", "--scheme", "canonical", "--d", "2", "--n", "2", "--eps", "0.004")[1])
    s = rep["summary"]
    assert abs(s["exact"]) <= 1e-10 and abs(s["decoupled_bound"]) <= 1e-10
    assert s["chain_exact_decoupled"] and s["chain_decoupled_analytic"]


def test_bounds_mixed_chain(capsys):
    rep = json.loads(run(capsys, "bounds", "--scheme", "hadamard", "--d", "2", "--n", "2", "--eps", "0.004",
                         "--ensemble", "gell-mann", "--ell", "2")[1])
    assert rep["summary"]["chain_exact_decoupled"] and rep["summary"]["chain_decoupled_analytic"]


def test_bounds_range_error(capsys):
    code, out = run(capsys, "bounds", "--scheme", "mub", "--d", "2", "--n", "500", "--eps", "0.004")
    assert code == 1 and json.loads(out)["error"]["type"] == "RangeError"


def test_bounds_infeasible_reported(capsys):
    code, out = run(capsys, "bounds", "--scheme", "mub", "--d", "5", "--n", "9", "--eps", "0.004",
                    "--mode", "monte-carlo", "--trials", "100")
    rep = json.loads(out)
    assert code == 0 and rep["summary"]["exact"] is None


def test_hard_instance(capsys):
    rep = json.loads(run(capsys, "hard-instance", "--d", "8", "--ell", "32", "--eps", "0.004", "--trials", "100",
                         "--scheme", "canonical")[1])
    assert rep["summary"]["valid_fraction"] >= 0.99
    assert rep["summary"]["opnorm_tail"]["max"] <= 10
    assert len(rep["records"]) == 100
    assert rep["summary"]["adversarial_smallest_half_square_sum"] <= 2 + 1e-9


def test_hard_instance_ell_contract(capsys):
    code, out = run(capsys, "hard-instance", "--d", "4", "--ell", "3", "--eps", "0.004")
    assert code == 1 and "ell" in json.loads(out)["error"]["message"]


def test_hard_instance_csv(capsys):
    code, out = run(capsys, "hard-instance", "--d", "4", "--ell", "8", "--eps", "0.004", "--trials", "3",
                    "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "trial,opnorm,tracenorm,ratio,valid" and len(lines) == 4


def test_power_curve_csv_header(capsys, tmp_path):
    out = tmp_path / "pc.csv"
    code, _ = run(capsys, "power-curve", "--d", "2", "--C", "1,2", "--trials", "20", "--format", "csv",
                  "--out", str(out))
    lines = out.read_text().splitlines()
    assert code == 0 and lines[0] == ",".join(CSV_HEADER) and len(lines) == 3
    row = dict(zip(CSV_HEADER, lines[1].split(",")))
    assert row["d"] == "2" and row["n"] == "24"
    assert float(row["type1_lo"]) <= float(row["type1"]) <= float(row["type1_hi"])


def test_power_curve_rejects_composite_d(capsys):
    code, out = run(capsys, "power-curve", "--d", "4", "--trials", "10")
    assert code == 1 and "prime" in json.loads(out)["error"]["message"]


def test_calibrate_emits_defaults(capsys):
    code, out = run(capsys, "calibrate", "--C", "2,8", "--trials", "100", "--emit-defaults")
    d = json.loads(out)
    assert code == 0 and set(d) == {"copies_constant", "threshold_constant", "calibration"}
    assert d["copies_constant"] in (2.0, 8.0)


def test_certify_flags_and_job_file(capsys, tmp_path):
    rep = json.loads(run(capsys, "certify", "--d", "3", "--rho", "zero", "--rho0", "mm", "--seed", "1")[1])
    assert rep["summary"]["decision"] == "NO"
    job = tmp_path / "job.json"
    job.write_text(json.dumps({"d": 2, "eps": 0.5, "rho": "mm", "rho0": "mm", "n": 50, "seed": 0}))
    rep = json.loads(run(capsys, "certify", "--job", str(job))[1])
    assert rep["records"][0]["n_used"] == 50


def test_usage_errors_are_json(capsys):
    code, out = run(capsys, "bogus")
    assert code == 2 and json.loads(out)["error"]["type"] == "UsageError"
    code, out = run(capsys, "demo-fooling")
    assert code == 2
    code, out = run(capsys, "certify")
    assert code == 2


def test_csv_unsupported_for_empty_records(capsys):
    code, out = run(capsys, "spectrum", "--scheme", "canonical", "--d", "2", "--format", "csv")
    assert code == 2


def test_timing_flag_adds_field(capsys):
    rep = json.loads(run(capsys, "demo-fooling", "--d", "2", "--timing")[1])
    assert rep["wall_clock_seconds"] >= 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qcertify", "demo-fooling", "--d", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["parameters"] == {"d": 2}
