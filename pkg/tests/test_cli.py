import json

import numpy as np
import pytest

from finsler.cli import main
from finsler.modelio import load_field_csv


@pytest.fixture
def euclid_model(tmp_path):
    path = tmp_path / "euclid.json"
    path.write_text(json.dumps({
        "family": "riemannian", "dimension": 2,
        "chart": {"box": [[-5, 5], [-5, 5]]},
        "params": {"h": {"type": "constant", "value": [[1, 0], [0, 1]]}}}))
    return path


@pytest.fixture
def wind_model(tmp_path):
    path = tmp_path / "wind.json"
    path.write_text(json.dumps({
        "family": "zermelo", "dimension": 2,
        "chart": {"box": [[-2, 2], [-2, 2]]},
        "params": {"g": {"type": "constant", "value": [[1, 0], [0, 1]]},
                   "W": {"type": "constant", "value": [0.5, 0.0]}}}))
    return path


@pytest.fixture
def stationary_model(tmp_path):
    path = tmp_path / "sm.json"
    path.write_text(json.dumps({
        "family": "stationary", "dimension": 2,
        "chart": {"box": [[-2, 2], [-2, 2]]},
        "params": {"g0": {"type": "constant", "value": [[1, 0], [0, 1]]},
                   "omega": {"type": "constant", "value": [0.0, 0.0]}}}))
    return path


@pytest.fixture
def grid_file(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps({"box": [[-2, 2], [-2, 2]], "shape": [41, 41]}))
    return path


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_eval_command(capsys, euclid_model):
    code, payload = run_cli(capsys, ["eval", "--model", str(euclid_model),
                                     "--point", "0,0", "--vector", "3,4"])
    assert code == 0
    assert float(payload["F"]) == pytest.approx(5.0)
    assert payload["classification"] == "interior"


def test_tensor_command(capsys, wind_model):
    code, payload = run_cli(capsys, ["tensor", "--model", str(wind_model),
                                     "--point", "0,0", "--vector", "1,0"])
    assert code == 0
    assert payload["signature"] == [2, 0, 0]


def test_geodesic_csv_output(tmp_path, capsys, euclid_model):
    out = tmp_path / "geo.csv"
    code = main(["--out", str(out), "--format", "csv",
                 "geodesic", "--model", str(euclid_model),
                 "--from", "0,0", "--dir", "1,0", "--len", "2"])
    assert code == 0
    lines = out.read_text().splitlines()
    header = json.loads(lines[0][1:])
    assert float(header["length"]) == pytest.approx(2.0)
    last = [float(x) for x in lines[-1].split(",")]
    assert last[1] == pytest.approx(2.0)  # param, x0, x1, v0, v1


def test_shoot_command(capsys, euclid_model):
    code, payload = run_cli(capsys, ["shoot", "--model", str(euclid_model),
                                     "--from", "0,0", "--to", "1,1",
                                     "--restarts", "2"])
    assert code == 0
    assert payload["count"] >= 1
    assert float(payload["solutions"][0]["length"]) == pytest.approx(np.sqrt(2), rel=1e-6)


def test_field_command_roundtrip(tmp_path, capsys, wind_model, grid_file):
    out = tmp_path / "field.csv"
    code = main(["--out", str(out), "field", "--model", str(wind_model),
                 "--source", "0,0", "--grid", str(grid_file), "--direction", "fwd"])
    assert code == 0
    fld = load_field_csv(out)
    assert fld.value_at(np.array([1.0, 0.0])) == pytest.approx(1 / 1.5, rel=0.02)


def test_stationary_future_command(tmp_path, capsys, stationary_model, grid_file):
    code, payload = run_cli(capsys, ["stationary", "future",
                                     "--model", str(stationary_model),
                                     "--grid", str(grid_file),
                                     "--point", "0,0", "--t0", "1.0"])
    assert code == 0
    assert payload["nodes_inside"] > 0


def test_stationary_horizon_command(tmp_path, capsys, stationary_model, grid_file):
    region = tmp_path / "disk.json"
    region.write_text(json.dumps({"type": "ball", "center": [0, 0], "radius": 1.0}))
    code, payload = run_cli(capsys, ["stationary", "horizon",
                                     "--model", str(stationary_model),
                                     "--grid", str(grid_file),
                                     "--region", str(region)])
    assert code == 0
    assert float(payload["apex_value"]) == pytest.approx(1.0, abs=0.2)


def test_causal_commands(capsys, stationary_model, grid_file):
    code, build = run_cli(capsys, ["causal", "build", "--model", str(stationary_model),
                                   "--grid", str(grid_file), "--levels", "4",
                                   "--cells", "3"])
    assert code == 0 and build["nodes"] == 4 * 41 * 41
    code, reach = run_cli(capsys, ["causal", "reach", "--model", str(stationary_model),
                                   "--grid", str(grid_file), "--levels", "4",
                                   "--cells", "3", "--from", "0,20,20"])
    assert code == 0
    assert reach["J_nodes"] >= reach["I_nodes"]
    code, sep = run_cli(capsys, ["causal", "separation", "--model", str(stationary_model),
                                 "--grid", str(grid_file), "--levels", "4",
                                 "--cells", "3", "--from", "0,20,20", "--to", "3,20,20"])
    assert code == 0
    assert float(sep["separation"]) == pytest.approx(3 * float(sep["dt"]), rel=1e-9)


def test_suite_command_deterministic(tmp_path, euclid_model):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert main(["--seed", "7", "--out", str(out1), "suite", "homogeneity"]) == 0
    assert main(["--seed", "7", "--out", str(out2), "suite", "homogeneity"]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_global_flags_accepted_after_subcommand(tmp_path, euclid_model):
    out = tmp_path / "o.json"
    code = main(["eval", "--model", str(euclid_model), "--point", "0,0",
                 "--vector", "1,0", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["classification"] == "interior"


def test_suite_unknown_name_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["suite", "not-a-suite"])
    assert err.value.code == 2
    assert "invalid choice" in capsys.readouterr().err


def test_tol_override_unknown_key(capsys, euclid_model):
    code = main(["--tol-override", "no_such_tol=1", "suite", "homogeneity"])
    assert code == 1
    assert "unknown tolerance" in capsys.readouterr().err


def test_exit_code_counts_failures(capsys):
    # an absurd override forces homogeneity failures; exit code = count
    code = main(["--tol-override", "homogeneity_rel=0", "suite", "homogeneity"])
    assert code > 0
