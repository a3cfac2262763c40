import json
import math

import pytest

from hypopep.cli import main, parse_steps


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def grab(text, key):
    for line in text.splitlines():
        if line.startswith(key + " "):
            return line.split(" ", 1)[1]
    raise KeyError(key)


def test_parse_steps():
    assert parse_steps("1,0.5,0.75") == [1.0, 0.5, 0.75]
    assert parse_steps("0.1:0.1:1.5") == [round(0.1 * k, 12) for k in range(1, 16)]


def test_rate_command(capsys):
    rc, out, _ = run(capsys, "rate", "--kappa", "-1", "--L", "1", "--delta", "1",
                     "--steps", "1", "--kind", "opt")
    assert rc == 0
    assert abs(float(grab(out, "bound")) - 0.8) < 1e-15


def test_rate_convex_two_steps(capsys):
    rc, out, _ = run(capsys, "rate", "--kappa", "0", "--steps", "1,1", "--kind", "opt")
    assert rc == 0
    assert abs(float(grab(out, "bound")) - 0.4) < 1e-15


def test_rate_validation_exit_code(capsys):
    rc, _, err = run(capsys, "rate", "--kappa", "-1", "--steps", "1.9")
    assert rc == 2
    assert "StepAboveThreshold" in err


def test_optstep_command(capsys):
    rc, out, _ = run(capsys, "optstep", "--kappa", "-1")
    assert rc == 0
    assert abs(float(grab(out, "h_star")) - 2.0 / math.sqrt(3.0)) < 1e-10


def test_pep_command_matches_analytic(capsys, tmp_path):
    trip = tmp_path / "t.json"
    rc, out, _ = run(capsys, "pep", "--kappa", "-1", "--steps", "1", "--kind", "opt",
                     "--emit-triplets", str(trip))
    assert rc == 0
    assert abs(float(grab(out, "optimum")) - 0.8) < 1e-6
    assert float(grab(out, "rel_error")) < 1e-6
    data = json.loads(trip.read_text())
    assert len(data["triplets"]) == 3


def test_tightness_pass(capsys):
    rc, out, _ = run(capsys, "tightness", "--kappa", "-2", "--L", "2", "--delta", "2",
                     "--steps", "1,0.5,0.75", "--kind", "opt")
    assert rc == 0
    assert "PASS" in out


def test_worstcase_exports(capsys, tmp_path):
    csv_out = tmp_path / "w.csv"
    json_out = tmp_path / "w.json"
    rc, out, _ = run(capsys, "worstcase", "--kappa", "-1", "--steps", "1,0.5",
                     "--kind", "opt", "--csv-out", str(csv_out),
                     "--json-out", str(json_out), "--samples", "20")
    assert rc == 0
    assert len(csv_out.read_text().strip().splitlines()) == 21
    assert json.loads(json_out.read_text())["kind"] == "gap_to_optimal"


def test_sweep_row_count_and_determinism(capsys, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    for out in (out1, out2):
        rc, _, _ = run(capsys, "sweep", "--target", "rate", "--kappa", "-1,-0.5,0",
                       "--h", "0.1:0.1:1.5", "--N", "5", "--out", str(out))
        assert rc == 0
    text = out1.read_text()
    assert len(text.strip().splitlines()) == 46  # header + 3 * 15 rows
    assert text == out2.read_text()  # byte-identical


def test_sweep_per_point_errors(capsys, tmp_path):
    out = tmp_path / "e.csv"
    rc, _, _ = run(capsys, "sweep", "--target", "rate", "--kappa", "-1",
                   "--h", "1.0,1.9", "--N", "2", "--out", str(out))
    assert rc == 0
    rows = out.read_text().strip().splitlines()
    assert len(rows) == 3
    assert "StepAboveThreshold" in rows[2]


def test_steps_file(capsys, tmp_path):
    f = tmp_path / "steps.txt"
    f.write_text("1.0\n0.5\n")
    rc, out, _ = run(capsys, "rate", "--kappa", "-1", "--steps-file", str(f))
    assert rc == 0
    assert "p[1]" in out


def test_experiment_huber(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    rc, text, _ = run(capsys, "experiment", "--problem", "huber", "--rows", "12",
                      "--cols", "4", "--steps", "1.0", "--N", "10",
                      "--fstar-iters", "200", "--out", str(out))
    assert rc == 0
    assert float(grab(text, "min_grad_sq").split()[0]) >= 0.0
    assert len(out.read_text().strip().splitlines()) == 12


def test_fit_r_command(capsys):
    rc, out, _ = run(capsys, "fit-r", "--kappa", "-1", "--h", "1.8", "--N", "3:6")
    assert rc == 0
    assert float(grab(out, "r")) > 0.0
