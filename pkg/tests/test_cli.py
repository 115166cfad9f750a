import json

import numpy as np
import pytest

from pairdyn.cli import main
from pairdyn.payoffs import GameParams, build_game, load_payoff_file, payoff_from_document
from pairdyn.replicator import ReplicatorSystem


def run_cli(capsys, *args):
    with pytest.raises(SystemExit) as info:
        main(list(args))
    out = capsys.readouterr()
    return info.value.code, out.out, out.err


def test_rhs_neutral_pgg_and_vertex(capsys):
    code, out, _ = run_cli(capsys, "rhs", "--game", "pgg", "--r", "5", "--x", "0.3,0.7", "--json")
    assert code == 0
    assert np.max(np.abs(json.loads(out)["rhs"])) < 1e-12
    code, out, _ = run_cli(capsys, "rhs", "--x", "0,1,0", "--json")
    assert json.loads(out)["rhs"] == [0.0, 0.0, 0.0]


def test_rhs_json_matches_library(capsys):
    x = [0.2, 0.5, 0.3]
    for game, path in (("peer", "linear"), ("pool", "general")):
        code, out, _ = run_cli(capsys, "rhs", "--game", game, "--beta", "2.5", "--rule", "db", "--x", "0.2,0.5,0.3", "--json")
        doc = json.loads(out)
        lib = ReplicatorSystem(build_game(game, GameParams(3.0, 1.0, 0.7, 2.5), 4), "db").rhs(np.array(x))
        assert doc["rhs"] == lib.tolist()
        assert doc["path"] == path


def test_thresholds_output(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "thresholds", "--r", "2", "--out", str(tmp_path))
    assert code == 0
    assert "beta0      = 3/17 + (3/17)*alpha" in out
    doc = json.loads((tmp_path / "thresholds.json").read_text())["thresholds"]
    assert doc["beta0"]["intercept"] == pytest.approx(3 / 17)
    code, out, _ = run_cli(capsys, "thresholds", "--game", "pool", "--r", "2", "--out", str(tmp_path))
    assert "beta0      = 81/134" in out
    assert "beta_star  = 3/2 + (5/2)*alpha" in out


@pytest.mark.parametrize(
    "args",
    [
        ["rhs", "--x", "0.5,0.6,0.1"],
        ["rhs", "--x", "0.5,0.5"],
        ["rhs", "--k", "2", "--x", "0.2,0.3,0.5"],
        ["thresholds", "--r", "6"],
        ["integrate", "--x0", "a,b,c"],
    ],
)
def test_invalid_input_exit_code(capsys, args, tmp_path):
    code, _, _ = run_cli(capsys, *args, *(["--out", str(tmp_path)] if args[0] != "rhs" else []))
    assert code == 2


def test_numerical_failure_exit_code(capsys, tmp_path):
    pay = tmp_path / "huge.json"
    pay.write_text(json.dumps({"name": "huge", "n": 2, "k": 3, "linear": {"b": [[1e300, 0], [0, 0]], "c": [0, 0]}}))
    code, _, err = run_cli(capsys, "integrate", "--payoff-file", str(pay), "--x0", "0.5,0.5", "--out", str(tmp_path))
    assert code == 3
    assert "numerical failure" in err


def test_io_failure_exit_code(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _, err = run_cli(capsys, "integrate", "--x0", "0.3,0.3,0.4", "--t-max", "1", "--out", str(blocker / "sub"))
    assert code == 4
    code, _, _ = run_cli(capsys, "rhs", "--payoff-file", str(tmp_path / "missing.json"), "--x", "1,0")
    assert code == 4


def test_integrate_outputs_and_manifest(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "integrate", "--x0", "0.4,0.4,0.2", "--t-max", "50", "--out", str(tmp_path))
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"trajectory.csv", "trajectory.json", "trajectory.svg", "manifest.json"} <= names
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "integrate"
    assert set(man["outputs"]) == {"trajectory.csv", "trajectory.json", "trajectory.svg"}
    assert man["parameters"]["x0"] == [0.4, 0.4, 0.2]
    assert payoff_from_document(man["payoff"]).n == 3


def test_format_selection(capsys, tmp_path):
    run_cli(capsys, "equilibria", "--beta", "0.7", "--format", "json", "--out", str(tmp_path))
    assert {p.name for p in tmp_path.iterdir()} == {"equilibria.json", "manifest.json"}
    eqs = json.loads((tmp_path / "equilibria.json").read_text())
    assert {e["kind"] for e in eqs} >= {"vertex", "edge"}


def test_simulate_is_deterministic_and_replayable(capsys, tmp_path):
    args = ["simulate", "--N", "300", "--steps", "5", "--replicas", "3", "--seed", "7", "--jobs", "1"]
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli(capsys, *args, "--out", str(a))
    run_cli(capsys, *args, "--out", str(b))
    for name in ("simulation.csv", "simulation.json", "simulation.svg"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    code, _, _ = run_cli(capsys, "replay", str(a / "manifest.json"), "--out", str(c))
    assert code == 0
    assert (c / "simulation.csv").read_bytes() == (a / "simulation.csv").read_bytes()


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('game = "pool"\nbeta = 2.5\n\n[rhs]\nrule = "db"\n')
    code, out, _ = run_cli(capsys, "--config", str(cfg), "rhs", "--x", "0.2,0.5,0.3", "--json")
    assert code == 0
    lib = ReplicatorSystem(build_game("pool", GameParams(3.0, 1.0, 0.7, 2.5), 4), "db").rhs(np.array([0.2, 0.5, 0.3]))
    assert json.loads(out)["rhs"] == lib.tolist()
    # flags override the file
    code, out, _ = run_cli(capsys, "--config", str(cfg), "rhs", "--x", "0.2,0.5,0.3", "--rule", "pc", "--json")
    assert json.loads(out)["rule"] == "pc"


@pytest.mark.parametrize("text", ['bogus = 1\n', '[rhs]\nbogus = 1\n', '[nosuch]\nx = 1\n'])
def test_config_unknown_keys_rejected(capsys, tmp_path, text):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(text)
    code, _, _ = run_cli(capsys, "--config", str(cfg), "rhs", "--x", "0,1,0")
    assert code == 2


@pytest.mark.parametrize("game", ["peer", "pool"])
def test_payoff_export_round_trip(capsys, tmp_path, game):
    code, _, _ = run_cli(capsys, "payoff", "export", "--game", game, "--beta", "1.5", "--out", str(tmp_path))
    assert code == 0
    model = load_payoff_file(tmp_path / "payoff.json")
    ref = build_game(game, GameParams(3.0, 1.0, 0.7, 1.5), 4)
    np.testing.assert_array_equal(model.table, ref.table)
    code, out, _ = run_cli(capsys, "rhs", "--payoff-file", str(tmp_path / "payoff.json"), "--x", "0.2,0.5,0.3", "--json")
    assert json.loads(out)["rhs"] == pytest.approx(ReplicatorSystem(ref).rhs(np.array([0.2, 0.5, 0.3])).tolist(), abs=1e-13)


def test_payoff_export_csv(capsys, tmp_path):
    run_cli(capsys, "payoff", "export", "--game", "pgg", "--k", "3", "--as", "csv", "--out", str(tmp_path))
    lines = (tmp_path / "payoff.csv").read_text().splitlines()
    assert lines[0] == "strategy,(3 0),(2 1),(1 2),(0 3)"
    assert len(lines) == 3


def test_output_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PAIRDYN_OUT", str(tmp_path / "env"))
    code, _, _ = run_cli(capsys, "thresholds", "--r", "2")
    assert code == 0
    assert (tmp_path / "env" / "thresholds.json").exists()


def test_games_list_and_version(capsys):
    code, out, _ = run_cli(capsys, "games", "list")
    assert code == 0
    assert "peer" in out and "pool" in out and "pgg" in out
    code, out, _ = run_cli(capsys, "--version")
    assert code == 0 and "pairdyn" in out


def test_phase_command(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "phase", "--r", "2", "--alpha", "0,0.5", "--beta", "0:2:1", "--jobs", "1", "--out", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "phase.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 3
