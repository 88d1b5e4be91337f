import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from gasflux.cli import main
from gasflux.core import data_path
from gasflux.io import (RunManifest, config_hash, load_state, read_pressures_csv, save_state,
                        sha256_file, write_ensemble, write_trajectory)
from gasflux.solver import simulate


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


@pytest.fixture(scope="module")
def short_run(network, shipped):
    return simulate(network, shipped(1).with_(horizon=2 * 3600.0))


def test_trajectory_files(short_run, tmp_path):
    pres, lp = write_trajectory(short_run, tmp_path)
    assert header(pres) == ["time_s", "node_id", "pressure_Pa"]
    assert header(lp)[-1] == "linepack_kg_total" and header(lp)[1] == "linepack_kg_pipe_1"
    t, ids, p = read_pressures_csv(pres)
    assert np.array_equal(t, short_run.times) and ids == short_run.node_ids
    assert np.array_equal(p, short_run.pressures)  # repr floats round-trip exactly


def test_state_round_trip(short_run, tmp_path):
    st = short_run.final_state
    path = save_state(st, tmp_path / "s.npz")
    back = load_state(path)
    assert back.t == st.t and back.flux_time == st.flux_time
    for name in ("rho", "phi", "rho_node", "p_node"):
        assert np.array_equal(getattr(back, name), getattr(st, name))
    assert back.layout.network.node_ids == st.layout.network.node_ids


def test_manifest_checksums(short_run, tmp_path):
    paths = write_trajectory(short_run, tmp_path)
    m = RunManifest.build(tmp_path, "run", {"a": 1}, [0], 1.0, paths)
    m.write(tmp_path)
    back = RunManifest.read(tmp_path / "manifest.json")
    assert back == m and back.mismatches(tmp_path) == []
    assert back.files["pressures.csv"] == sha256_file(tmp_path / "pressures.csv")
    assert back.config_hash == config_hash({"a": 1})
    (tmp_path / "linepack.csv").write_text("tampered\n")
    assert back.mismatches(tmp_path) == ["linepack.csv"]


# --- CLI ----------------------------------------------------------------------------

def test_cli_run(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "--scenario", "scenario1", "--horizon-h", "1", "--out", str(out)]) == 0
    for f in ("pressures.csv", "linepack.csv", "crossings.csv", "run_summary.json", "manifest.json"):
        assert (out / f).exists()
    m = RunManifest.read(out / "manifest.json")
    assert m.mismatches(out) == [] and m.seeds == [0]
    assert "scenario1" in capsys.readouterr().out


def test_cli_horizon_zero(tmp_path):
    out = tmp_path / "z"
    assert main(["run", "--scenario", "scenario1", "--horizon-h", "0", "--out", str(out)]) == 0
    t, _, _ = read_pressures_csv(out / "pressures.csv")
    assert t.tolist() == [0.0]


def test_cli_missing_network(tmp_path, capsys):
    code = main(["run", "--network", str(tmp_path / "nope.json"), "--scenario", "scenario1",
                 "--out", str(tmp_path / "o")])
    assert code == 1
    assert "nope.json" in capsys.readouterr().err


def test_cli_missing_scenario(tmp_path, capsys):
    assert main(["run", "--scenario", "no_such_scenario", "--out", str(tmp_path)]) == 1
    assert "no_such_scenario" in capsys.readouterr().err


def test_cli_invalid_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"cfl": 3.0}')
    assert main(["run", "--scenario", "scenario1", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_cli_numerical_failure_exit_code(tmp_path, capsys):
    # pipes a tenth of the real bore cannot carry the nominal load at any pressure
    data = json.loads(data_path("israel_11node.json").read_text())
    for p in data["pipes"]:
        p["diameter"] = p["diameter"] / 10
    net = tmp_path / "thin.json"
    net.write_text(json.dumps(data))
    assert main(["run", "--network", str(net), "--scenario", "scenario1", "--horizon-h", "1",
                 "--out", str(tmp_path / "o")]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_cli_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--scenario", "scenario1", "--horizon-h", "0",
                 "--out", str(blocker / "sub")]) == 3


def test_cli_ensemble_matches_run(tmp_path):
    assert main(["ensemble", "--scenario", "scenario2", "--horizon-h", "2", "--replicas", "1",
                 "--seed", "4", "--out", str(tmp_path / "e")]) == 0
    assert main(["run", "--scenario", "scenario2", "--horizon-h", "2", "--seed", "4",
                 "--out", str(tmp_path / "r")]) == 0
    _, ids, p = read_pressures_csv(tmp_path / "r" / "pressures.csv")
    with open(tmp_path / "e" / "quantiles" / "pressure_node_5.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    med = np.array([float(r["median_Pa"]) for r in rows])
    assert np.array_equal(med, p[:, ids.index(5)])


def test_ensemble_output_independent_of_workers(tmp_path):
    args = ["ensemble", "--scenario", "scenario3", "--horizon-h", "40", "--replicas", "3"]
    assert main(args + ["--workers", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--workers", "2", "--out", str(tmp_path / "b")]) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    files.append("ensemble_summary.json")
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
    summary = json.loads((tmp_path / "a" / "ensemble_summary.json").read_text())
    assert summary["n_replicas"] == 3 and summary["seeds"] == [0, 1, 2]


def test_cli_init_steady(tmp_path):
    assert main(["init-steady", "--scenario", "scenario1", "--out", str(tmp_path)]) == 0
    st = load_state(tmp_path / "initial_state.npz")
    assert st.t == 0.0


def test_cli_ingest_power(tmp_path):
    (tmp_path / "p.csv").write_text("timestamp,unit_id,power_MW\n0,A,100\n1800,A,50\n")
    (tmp_path / "u.csv").write_text("unit_id,node_id,capacity_MW\nA,3,100\n")
    out = tmp_path / "g.csv"
    assert main(["ingest-power", "--power", str(tmp_path / "p.csv"), "--units",
                 str(tmp_path / "u.csv"), "--out", str(out)]) == 0
    assert header(out) == ["time_s", "node_id", "withdrawal_kg_s"]
    assert main(["ingest-power", "--power", str(tmp_path / "x.csv"), "--units",
                 str(tmp_path / "u.csv"), "--out", str(out)]) == 1


def test_cli_verify_quick(capsys):
    assert main(["verify", "--quick"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 4


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "gasflux", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "ensemble" in res.stdout
