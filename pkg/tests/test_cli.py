import csv
import io
import json

import numpy as np
import pytest

from qecchi import cli
from qecchi.sdp import SDPSolverError


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_chi_text(capsys):
    code, out, _ = run(["chi", "--channel", "RZ", "--strength", "0.1"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "# strength 0.1" and len(lines) == 5


def test_chi_json_is_a_valid_process_matrix(capsys):
    code, out, _ = run(["chi", "--channel", "ADC", "--strengths", "0.01,0.02", "--format", "json"], capsys)
    body = json.loads(out)
    assert code == 0 and body["schema"] == 1 and len(body["results"]) == 2
    chi = np.array(body["results"][0]["chi"])
    chi = chi[..., 0] + 1j * chi[..., 1]
    assert np.trace(chi).real == pytest.approx(2)
    assert chi[1, 2] == pytest.approx(-0.005j)


def test_logical_chi_csv(capsys):
    code, out, _ = run(["chi", "--channel", "DC", "--strength", "0.01", "--level", "logical", "--code", "bitflip3", "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 16 and list(rows[0]) == ["strength", "row", "col", "re", "im"]


def test_metrics_csv(capsys):
    code, out, _ = run(["metrics", "--channel", "DC", "--strength", "0.03", "--format", "csv"], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert float(row["avg_error_rate"]) == pytest.approx(0.02)
    assert float(row["diamond"]) == pytest.approx(0.03, rel=1e-7)


def test_approx_json(capsys):
    code, out, _ = run(["approx", "--channel", "RZ", "--strength", "0.01", "--approx", "PCw"], capsys)
    res = json.loads(out)["results"][0]
    assert code == 0 and res["variant"] == "PCw" and res["honest"]
    assert sum(w["weight"] for w in res["weights"]) == pytest.approx(1)


def test_threshold_csv(capsys):
    code, out, _ = run(["threshold", "--channel", "flip", "--code", "bitflip3"], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and row["status"] == "crossing"
    assert float(row["threshold_strength"]) == pytest.approx(0.5, abs=1e-6)


def test_sweep_is_thread_count_independent(capsys, monkeypatch):
    argv = ["sweep", "--channel", "RH", "--strengths", "0.01,0.02,0.05", "--metric", "error_rate", "--metric", "diamond"]
    _, serial, _ = run(argv, capsys)
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    _, threaded, _ = run(argv, capsys)
    assert serial == threaded
    assert serial.splitlines()[0] == "strength,error_rate,diamond"


def test_config_file_and_out(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    out = tmp_path / "out.csv"
    cfg.write_text(json.dumps({"command": "sweep", "channel": "DC", "strengths": [0.01, 0.02], "metrics": ["error_rate"], "out": str(out)}))
    code, printed, _ = run(["sweep", "--config", str(cfg)], capsys)
    assert code == 0 and printed == ""
    assert out.read_text().splitlines()[1].startswith("0.01,")


def test_custom_kraus_channel(capsys):
    s = np.sqrt(0.5)
    kraus = [[[[s, 0], [0, 0]], [[0, 0], [s, 0]]], [[[0, 0], [s, 0]], [[s, 0], [0, 0]]]]
    code, out, _ = run(["metrics", "--channel", json.dumps({"kraus": kraus}), "--format", "json"], capsys)
    assert code == 0 and json.loads(out)["results"][0]["avg_error_rate"] == pytest.approx(1 / 3)


def test_custom_code(capsys):
    spec = {"generators": ["ZZI", "IZZ"], "logical_x": "XXX", "logical_z": "ZZZ"}
    code, out, _ = run(["chi", "--channel", "flip", "--strength", "0.1", "--level", "logical", "--code", json.dumps(spec), "--format", "json"], capsys)
    chi = np.array(json.loads(out)["results"][0]["chi"])[..., 0]
    assert code == 0 and chi[1, 1] == pytest.approx(2 * (3 * 0.01 - 2 * 0.001))


@pytest.mark.parametrize(
    "argv",
    [
        ["chi", "--channel", "XYZ"],
        ["chi", "--channel", "ADC", "--strength", "-1"],
        ["chi", "--channel", "ADC", "--level", "logical"],
        ["approx", "--channel", "ADC"],
        ["threshold", "--channel", "ADC"],
        ["sweep", "--channel", "ADC", "--strengths", "0.2,0.1"],
        ["chi", "--channel", "{not json"],
        ["chi", "--channel", "ADC", "--strength", "0.1", "--strengths", "0.1,0.2"],
        ["chi", "--code", "surface17", "--level", "logical"],
        ["bogus"],
    ],
)
def test_invalid_input_exit_code(argv, capsys):
    code, out, _ = run(argv, capsys)
    assert code == 2 and out == ""


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "chi", "channel": "DC", "colour": "red"}))
    code, _, err = run(["chi", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in err


def test_bad_thread_count(monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    code, _, _ = run(["sweep", "--channel", "DC", "--strengths", "0.1,0.2"], capsys)
    assert code == 2


def test_solver_failure_exit_code(monkeypatch, capsys):
    def fail(*_args, **_kwargs):
        raise SDPSolverError("forced", 1.0)

    monkeypatch.setattr(cli, "metric_report", fail)
    code, _, err = run(["metrics", "--channel", "DC", "--strength", "0.1"], capsys)
    assert code == 3 and "forced" in err
