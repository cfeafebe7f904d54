import json
import socket

import pytest

from teletact.cli import main
from teletact.sessions import SessionConfig, run_loopback
from teletact.policies import BendRamp


def write_config(tmp_path, name, **overrides):
    raw = {"role": "robot", "scene": "soft_bottle", "duration_s": 0.5,
           "accept_timeout_s": 0.2, **overrides}
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


def test_experiment_stiffness_cli(tmp_path, capsys):
    code = main(["experiment", "stiffness", "--seed", "1",
                 "--out", str(tmp_path / "results")])
    out = capsys.readouterr().out
    assert code == 0
    assert "stiffness_curves: slopes_strictly_increasing: PASS" in out
    assert (tmp_path / "results" / "summary.json").exists()
    assert (tmp_path / "results" / "stiffness_curves.csv").exists()


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(SystemExit) as err:
        main(["robot", "--config", str(bad)])
    assert err.value.code == 2


def test_cli_missing_config_file(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["robot", "--config", str(tmp_path / "nope.json")])
    assert err.value.code == 2


def test_cli_network_error_exit_code(tmp_path, capsys):
    dead = socket.socket()
    dead.bind(("127.0.0.1", 0))
    port = dead.getsockname()[1]
    dead.close()
    cfg = write_config(tmp_path, "op.json", role="operator", port=port)
    code = main(["operator", "--config", str(cfg)])
    assert code == 3


def test_cli_robot_idle_run(tmp_path, capsys):
    cfg = write_config(tmp_path, "robot.json", port=0)
    code = main(["robot", "--config", str(cfg)])
    out = capsys.readouterr().out
    assert code == 0
    report = json.loads(out)
    assert report["errors"] == ["no client connected"]


def test_cli_replay(tmp_path, capsys):
    cfg = SessionConfig(duration_s=0.5, scene="soft_bottle",
                        log_path=str(tmp_path / "session.log"))
    run_loopback(cfg, BendRamp(max_bend=0.5, duration=0.4))
    code = main(["replay",
                 "--log", str(tmp_path / "session.log.operator"),
                 str(tmp_path / "session.log.robot")])
    out = capsys.readouterr().out
    assert code == 0
    report = json.loads(out)
    assert report["records"] > 100
    assert report["retargeting_fidelity"]["max_pos_err_m"] < 1e-9


def test_cli_replay_missing_log(tmp_path):
    code = main(["replay", "--log", str(tmp_path / "ghost.log")])
    assert code == 2


def test_cli_rejects_unknown_experiment():
    with pytest.raises(SystemExit):
        main(["experiment", "levitation"])
