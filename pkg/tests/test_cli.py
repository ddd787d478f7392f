import io
import json
import subprocess
import sys

import pytest

from lswe.cli import COMMANDS, run

BOWL = ["--surface", "q1^2/2+q2^2", "--dim", "2"]


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, err = call(*argv)
    assert code == 0, err
    doc = json.loads(out)
    assert doc["schema"] == "lswe/1"
    return doc


def test_huygens_example():
    doc = report("huygens", *BOWL, "--point", "1,1")
    r = doc["results"][0]
    assert r["condition1_residual"] == pytest.approx(1.06, abs=1e-12)
    assert r["condition2_nu"] == pytest.approx(-0.624, abs=1e-6)
    assert doc["config"]["surface"] == "q1^2/2+q2^2"


def test_verify_wave_example():
    doc = report("verify-wave", "--surface", "q1", "--dim", "1", "--profile", "poly:0,0,1",
                 "--samples", "100")
    assert doc["results"]["max_abs_residual"] < 1e-8
    assert doc["results"]["passed"] is True


def test_stationary_point_exit_code():
    code, out, err = call("gauge", "--surface", "q1^2", "--dim", "1", "--point", "0,0")
    assert code == 3 and out == ""
    e = json.loads(err)["error"]
    assert e["type"] == "StationaryPoint" and e["G"] == 0.0 and e["exit_code"] == 3


@pytest.mark.parametrize("argv", [
    ["gauge", "--surface", "q1 +", "--dim", "1", "--point", "1"],
    ["gauge", "--surface", "q3", "--dim", "1", "--point", "1"],
    ["gauge", "--dim", "1", "--point", "1"],
    ["gauge", "--surface", "q1", "--dim", "1", "--point", "1,2,3"],
    ["huygens", "--surface", "q1", "--dim", "1", "--point", "1", "--format", "csv"],
    ["nonsense"],
    ["split-check", *BOWL, "--point", "1,1,0", "--partition", "1,2"],
])
def test_validation_errors_exit_2(argv):
    code, out, err = call(*argv)
    assert code == 2 and out == ""
    assert json.loads(err)["error"]["exit_code"] == 2


def test_numerical_errors_exit_3():
    code, _, err = call("solve", "--surface", "q1", "--dim", "1", "--bounds", "0,1", "--cells", "10",
                        "--dnu", "0.5", "--nu-range", "0,1")
    assert code == 3 and json.loads(err)["error"]["type"] == "CFLViolation"
    code, _, err = call("connect", *BOWL, "--start", "1,1,0", "--end", "2,1,0.3", "--max-iters", "0")
    assert code == 3 and json.loads(err)["error"]["type"] == "NoConvergence"


COMMAND_ARGS = {
    "gauge": [*BOWL, "--point", "1,1"],
    "geometry": [*BOWL, "--point", "1,1"],
    "huygens": [*BOWL, "--point", "1,1"],
    "verify-wave": [*BOWL, "--samples", "20"],
    "split-check": [*BOWL, "--point", "1,1,0", "--field", "q3"],
    "geodesic": [*BOWL, "--start", "1,1,0", "--kind", "steepest", "--length", "0.1"],
    "connect": [*BOWL, "--start", "1,1,0", "--end", "1.2,1,0.1"],
    "distance": [*BOWL, "--start", "1,1,0", "--end", "1.2,1,0.1"],
    "elementary": [*BOWL, "--start", "1,1,0", "--end", "2,1,0"],
    "adjoint-check": ["--surface", "q1", "--dim", "1", "--base", "0,0", "--sample", "0.5,0",
                      "--path-step", "0.01"],
    "solve": ["--surface", "q1", "--dim", "1", "--bounds", "0,4", "--cells", "40",
              "--F", "gauss:2,0.2", "--D", "gauss:2,0.2"],
    "converge": ["--surface", "q1", "--dim", "1", "--bounds", "0,4", "--cells", "40",
                 "--F", "gauss:2,0.2", "--D", "gauss:2,0.2"],
    "plot-data": [*BOWL, "--bounds", "0.5,1", "--bounds", "0.5,1", "--cells", "2"],
}


@pytest.mark.parametrize("command", sorted(COMMAND_ARGS))
def test_every_command_runs_and_dry_runs(command):
    args = COMMAND_ARGS[command]
    doc = report(command, *args)
    assert doc["command"] == command and "results" in doc
    dry = report(command, *args, "--dry-run")
    assert dry["dry_run"] is True and "results" not in dry


def test_command_set():
    assert set(COMMANDS) == set(COMMAND_ARGS) == {
        "gauge", "geometry", "huygens", "verify-wave", "split-check", "geodesic", "connect",
        "distance", "elementary", "adjoint-check", "solve", "converge", "plot-data"}


def test_dry_run_still_validates():
    code, _, _ = call("gauge", *BOWL, "--point", "1,2,3,4", "--dry-run")
    assert code == 2


def test_results_follow_input_order():
    doc = report("gauge", *BOWL, "--point", "1,1", "--point", "2,0.5", "--point", "0.5,3")
    assert [r["point"] for r in doc["results"]] == [[1, 1], [2, 0.5], [0.5, 3]]
    assert doc["results"][0]["G"] == 5.0


def test_negative_numbers_need_equals_form():
    doc = report("gauge", *BOWL, "--point=-1,2")
    assert doc["results"][0]["gradient"] == [-1.0, 4.0]


def _strip(text):
    doc = json.loads(text)
    doc.pop("timestamp")
    return json.dumps(doc, sort_keys=True)


def test_deterministic_output_and_threads(monkeypatch):
    args = ["huygens", *BOWL, "--point", "1,1", "--point", "0.3,0.7", "--point", "2,-1"]
    _, a, _ = call(*args)
    _, b, _ = call(*args)
    monkeypatch.setenv("LSWE_THREADS", "3")
    _, c, _ = call(*args)
    assert _strip(a) == _strip(b) == _strip(c)
    monkeypatch.setenv("LSWE_THREADS", "zero")
    assert call(*args)[0] == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"surface": "q1^2/2+q2^2", "dim": 2, "point": ["1,1"]}))
    doc = report("huygens", "--config", str(cfg))
    assert doc["results"][0]["condition1_residual"] == pytest.approx(1.06)
    # command line wins over the file
    doc = report("huygens", "--config", str(cfg), "--point", "2,1")
    assert doc["results"][0]["point"] == [2.0, 1.0]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"surface": "q1", "dim": 1, "point": [1], "colour": "red"}))
    code, _, err = call("gauge", "--config", str(bad))
    assert code == 2 and "colour" in err
    code, _, _ = call("gauge", "--config", str(tmp_path / "missing.json"))
    assert code == 2


def test_csv_outputs(tmp_path):
    code, out, _ = call("geodesic", *BOWL, "--start", "1,1,0", "--kind", "steepest", "--length", "0.01",
                        "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "s,q1,q2,nu,qdot1,qdot2,nudot,D_residual"
    target = tmp_path / "snap.csv"
    code, out, _ = call("solve", "--surface", "q1", "--dim", "1", "--bounds", "0,4", "--cells", "8",
                        "--format", "csv", "--output", str(target))
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[3] == "q1,psi,analytic,error"


def test_unwritable_output():
    code, _, err = call("gauge", *BOWL, "--point", "1,1", "--output", "/nonexistent/dir/x.json")
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lswe", "gauge", "--surface", "q1", "--dim", "1",
                           "--point", "3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"][0]["G"] == 1.0
