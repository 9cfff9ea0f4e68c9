import csv
import json
import math

import pytest

from taubnut.cli import main, make_config
from taubnut.report import emit_report, read_csv


def rows(path):
    meta, body = read_csv(path)
    return meta, body


def test_validate_exit_codes(capsys):
    assert main(["validate", "--params", "1,1,-2.1,1"]) == 1
    assert "c ≤ −2√d" in capsys.readouterr().out
    assert main(["validate", "--params", "1,1,2,1"]) == 0
    assert "standard Taub-NUT: True" in capsys.readouterr().out


def test_unknown_experiment_exit_one(capsys):
    assert_exit = None
    try:
        main(["bogus"])
    except SystemExit as exc:
        assert_exit = exc.code
    assert assert_exit == 1
    assert "usage" in capsys.readouterr().err


def test_invalid_params_rejected_before_dispatch(tmp_path):
    assert main(["curvature", "--params", "1,-1,0,1", "--out", str(tmp_path)]) == 1
    assert not (tmp_path / "curvature.csv").exists()


def test_numerical_failure_exit_two(tmp_path):
    code = main(["kernel-probe", "--threshold", "1e-12", "--grid", "0.1,1,16", "--out", str(tmp_path)])
    assert code == 2


def test_curvature_csv(tmp_path):
    assert main(["curvature", "--params", "1,1,2,1", "--r", "0.1:10:50", "--out", str(tmp_path)]) == 0
    path = tmp_path / "curvature.csv"
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# taubnut=") and "seed=0" in lines[0] and "params=1,1,2,1" in lines[0]
    header = next(csv.reader([lines[1]]))
    assert header[:2] == ["r", "kappa"] and header[-1] == "ricci_33" and len(header) == 18
    _, body = rows(path)
    assert len(body) == 50
    assert all(abs(float(r["kappa"])) < 1e-6 for r in body)


def test_symbol_scan_csv(tmp_path):
    assert main(["symbol-scan", "--d", "1", "--lambda", "-5:5:101", "--out", str(tmp_path)]) == 0
    _, body = rows(tmp_path / "symbol_scan.csv")
    assert len(body) == 101
    assert all(float(r["sigma_min"]) <= 1e-10 for r in body)
    wit = json.loads((tmp_path / "symbol_witnesses.json").read_text())
    assert wit["provenance"]["seed"] == 0
    assert all(not w["fully_elliptic"] for w in wit["witnesses"])


def test_standard_flag_and_config_precedence(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"standard": "2,1", "seed": 7, "lambda": [0.0, 1.0],
                                    "out": str(tmp_path / "a")}))
    cfg = make_config(["dvert", "--config", str(cfg_file), "--seed", "9"])
    assert cfg.params.as_tuple() == (2.0, 1.0, 1.0, 0.25)
    assert cfg.seed == 9 and cfg.lam == [0.0, 1.0]
    cfg = make_config(["dvert", "--config", str(cfg_file), "--params", "1,1,0,1"])
    assert cfg.params.as_tuple() == (1.0, 1.0, 0.0, 1.0)


def test_dvert_and_weighted(tmp_path, capsys):
    assert main(["dvert", "--d", "2", "--out", str(tmp_path)]) == 0
    assert "total kernel dimension" in capsys.readouterr().out
    _, body = rows(tmp_path / "dvert.csv")
    assert sum(int(r["kernel_dim"]) for r in body) == 4
    assert main(["weighted-scan", "--d", "1", "--out", str(tmp_path)]) == 0
    _, body = rows(tmp_path / "weighted_scan.csv")
    wit = [r for r in body if r["kind"] == "witness"]
    assert len(wit) == 48 and all(float(r["sigma_min"]) < 1e-12 for r in wit)
    ctrl = [r for r in body if r["kind"] == "control"]
    assert all(float(r["sigma_min"]) > 0.1 for r in ctrl)


def test_spectrum_and_kernel_probe(tmp_path):
    assert main(["spectrum", "--params", "1,1,0.5,2", "--grid", "0.1,1,32", "--modes", "1,-1",
                 "--out", str(tmp_path)]) == 0
    _, body = rows(tmp_path / "spectrum.csv")
    vals = sorted(float(r["eigenvalue"]) for r in body if r["n"] == "1")
    assert math.isclose(vals[0], -vals[-1], rel_tol=1e-8)
    assert main(["kernel-probe", "--grid", "0.1,1,16", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "kernel_probe.json").read_text())
    assert rep["heuristic"] is True and "provenance" in rep


def test_conformal_check_cli(tmp_path):
    assert main(["conformal-check", "--params", "1,1,0,1", "--out", str(tmp_path)]) == 0
    _, body = rows(tmp_path / "conformal_check.csv")
    assert {r["case"] for r in body} == {"below_window", "constant_h", "across_window"}
    assert all(float(r["defect"]) < 1e-6 for r in body)


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["curvature", "--params", "1,1,0,1", "--r", "0.2:5:12", "--out", str(a)])
    monkeypatch.setenv("TAUBNUT_THREADS", "4")
    main(["curvature", "--params", "1,1,0,1", "--r", "0.2:5:12", "--out", str(b)])
    assert (a / "curvature.csv").read_bytes() == (b / "curvature.csv").read_bytes()


def test_atomic_writes_leave_no_temporaries(tmp_path):
    main(["dvert", "--out", str(tmp_path)])
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]


def test_report_requires_artifacts(tmp_path):
    with pytest.raises(FileNotFoundError):
        emit_report(tmp_path)
