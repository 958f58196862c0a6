import math

import numpy as np
import pytest

from mfbcs import cli, verification
from mfbcs.cli import TRAJECTORY_HEADER, parse_config, run
from mfbcs.errors import ConfigError


def test_parse_minimal_defaults():
    cfg = parse_config("command: flow\ngamma: 2\n")
    assert cfg.command == "flow"
    assert cfg.params.gamma == 2.0
    assert cfg.params.mu == 0.0
    assert cfg.flow_cfg.step_size == 1e-3
    assert cfg.flow_cfg.rtol == 1e-9
    assert cfg.seed == 0


def test_parse_rejects_negative_gamma():
    with pytest.raises(ConfigError, match="gamma >= 0"):
        parse_config("command: flow\ngamma: -2\n")


def test_parse_rejects_unknown_key():
    with pytest.raises(ConfigError, match="delta"):
        parse_config("command: flow\ndelta: 2\n")
    with pytest.raises(ConfigError, match="times.pace"):
        parse_config("command: flow\ntimes: {start: 0, stop: 1, pace: 2}\n")


def test_parse_reports_yaml_position():
    with pytest.raises(ConfigError, match="line"):
        parse_config("command: flow\ngamma: [unclosed\n")


def test_parse_times_and_sites():
    cfg = parse_config(
        "command: converge\ntimes: {start: 0, stop: 1, step: 0.5}\nsites: [2, 3]\n"
    )
    assert cfg.times == (0.0, 0.5, 1.0)
    assert cfg.sites == (2, 3)
    with pytest.raises(ConfigError, match="sites"):
        parse_config("command: converge\nsites: [9]\n")
    with pytest.raises(ConfigError, match="step"):
        parse_config("command: flow\ntimes: {step: -1}\n")


def test_parse_command_conflict():
    with pytest.raises(ConfigError, match="conflicts"):
        parse_config("command: gap\n", command="flow")
    cfg = parse_config("gamma: 1\n", command="gap")
    assert cfg.command == "gap"
    with pytest.raises(ConfigError, match="command"):
        parse_config("gamma: 1\n")


def test_parse_mixture_and_states():
    text = """
command: flow
mixture:
  - {weight: 0.5, state: {kind: pair, angle: 0.3}}
  - {weight: 0.5, state: {kind: random, seed: 4}}
"""
    cfg = parse_config(text)
    assert len(cfg.mixture) == 2
    with pytest.raises(ConfigError, match="kind"):
        parse_config("command: flow\ninitial: {kind: banana}\n")


def _flow_config(out):
    return parse_config(
        f"""
command: flow
gamma: 2.0
initial: {{kind: pair, angle: {math.pi / 6.0}}}
times: {{start: 0, stop: 1, step: 0.5}}
out: {out}
"""
    )


def test_flow_golden_header_and_determinism(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    run(_flow_config(out1))
    run(_flow_config(out2))
    text1 = out1.read_text()
    assert text1.splitlines()[0] == TRAJECTORY_HEADER
    assert text1 == out2.read_text()
    meta1 = (tmp_path / "a.csv.meta.yaml").read_text()
    assert meta1 == (tmp_path / "b.csv.meta.yaml").read_text()
    assert "config_digest" in meta1
    # gamma=0 flow: z column equals the closed-form rotation
    cfg = parse_config(
        f"command: flow\nmu: 0.4\ninitial: {{kind: pair, angle: 0.5}}\n"
        f"times: {{start: 0, stop: 1, step: 1.0}}\nout: {tmp_path/'c.csv'}\n"
    )
    run(cfg)
    rows = (tmp_path / "c.csv").read_text().splitlines()[1:]
    z0 = complex(*[float(v) for v in rows[0].split(",")[4:6]])
    z1 = complex(*[float(v) for v in rows[1].split(",")[4:6]])
    assert abs(z1 - z0 * np.exp(2j * 0.4)) < 1e-8


def test_flow_golden_row_vacuum(tmp_path):
    # vacuum at zero couplings: every column exactly 0.0 (golden literal)
    out = tmp_path / "vac.csv"
    cfg = parse_config(
        f"command: flow\ninitial: {{kind: vacuum}}\n"
        f"times: {{start: 0, stop: 1, step: 1.0}}\nout: {out}\n"
    )
    run(cfg)
    lines = out.read_text().splitlines()
    assert lines[0] == TRAJECTORY_HEADER
    assert lines[1] == "0.0," + ",".join(["0.0"] * 11)


def test_converge_command(tmp_path):
    out = tmp_path / "conv.csv"
    cfg = parse_config(
        f"""
command: converge
gamma: 2.0
sites: [2, 3]
times: {{start: 1.0, stop: 1.0, step: 1.0}}
out: {out}
threads: 2
"""
    )
    table = run(cfg)
    assert table.header == ["N", "t", "observable", "finite", "flow", "deviation"]
    devs = {}
    for row in table.rows:
        devs.setdefault(row[0], 0.0)
        devs[row[0]] = max(devs[row[0]], row[5])
    assert devs[3] < devs[2]
    # thread fan-out is order-stable: identical rows either way
    serial = run(parse_config(
        f"""
command: converge
gamma: 2.0
sites: [2, 3]
times: {{start: 1.0, stop: 1.0, step: 1.0}}
out: {out}
threads: 1
"""
    ))
    assert serial.rows == table.rows


def test_simulate_command(tmp_path):
    out = tmp_path / "sim.csv"
    cfg = parse_config(
        f"command: simulate\ngamma: 1.0\nsites: [2]\n"
        f"times: {{start: 0, stop: 0.4, step: 0.2}}\nout: {out}\n"
    )
    table = run(cfg)
    assert table.metadata["backend"] == "spectral"
    assert len(table.rows) == 3


def test_simulate_six_sites_krylov(tmp_path):
    out = tmp_path / "six.csv"
    cfg = parse_config(
        f"command: simulate\ngamma: 2.0\nsites: [6]\n"
        f"initial: {{kind: pair, angle: 0.5}}\n"
        f"times: {{start: 0, stop: 0.1, step: 0.1}}\nout: {out}\n"
    )
    table = run(cfg)
    assert table.metadata["backend"] == "krylov"
    assert abs(table.rows[0][4] - np.cos(0.5) * np.sin(0.5)) < 1e-12


def test_gap_and_scan_commands(tmp_path):
    gap_cfg = parse_config(f"command: gap\ngamma: 8.0\nout: {tmp_path/'g.csv'}\n")
    table = run(gap_cfg)
    assert abs(table.rows[0][0] - 0.47875201203863437) < 1e-8
    scan_cfg = parse_config(
        f"""
command: scan
beta: 1.0
scan:
  gamma: [2.0, 8.0]
  mu: {{start: 0.0, stop: 0.5, num: 2}}
out: {tmp_path/'s.csv'}
"""
    )
    table = run(scan_cfg)
    assert len(table.rows) == 4
    by_point = {(r[0], r[3]): r[7] for r in table.rows}  # (mu, gamma) -> superconducting
    assert not by_point[(0.0, 2.0)]
    assert by_point[(0.0, 8.0)]


def test_rotor_command(tmp_path):
    cfg = parse_config(
        f"command: rotor\ngamma: 1.5\nstates: 2\n"
        f"times: {{start: 0, stop: 2, step: 1.0}}\nout: {tmp_path/'r.csv'}\n"
    )
    table = run(cfg)
    assert max(row[2] for row in table.rows) < 1e-6


def test_liouville_command(tmp_path):
    cfg = parse_config(
        f"command: liouville\ngamma: 1.0\nmu: 0.3\nstates: 1\n"
        f"times: {{start: 0.0, stop: 0.5, step: 0.5}}\nout: {tmp_path/'l.csv'}\n"
    )
    table = run(cfg)
    assert max(row[5] for row in table.rows) < 1e-5


def test_main_exit_codes(tmp_path, monkeypatch, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("gamma: -1\n")
    assert cli.main(["gap", "--config", str(bad)]) == 1

    # capacity: a 6-site mixed product state is beyond the dense backend
    big = tmp_path / "big.yaml"
    big.write_text("sites: [6]\ninitial: {kind: mixed}\n")
    monkeypatch.chdir(tmp_path)
    assert cli.main(["simulate", "--config", str(big)]) == 2

    assert cli.main(["gap", "--config", str(tmp_path / "missing.yaml")]) == 1

    ok = tmp_path / "ok.yaml"
    ok.write_text("gamma: 2.0\n")
    assert cli.main(["gap", "--config", str(ok), "--out", str(tmp_path / "o.csv")]) == 0


def test_verify_exit_code_wiring(tmp_path, monkeypatch):
    fail = verification.CheckResult(
        name="stub", passed=False, max_violation=1.0, threshold=0.0, runtime_s=0.0
    )
    monkeypatch.setattr(verification, "run_all", lambda seed: [fail])
    monkeypatch.chdir(tmp_path)
    assert cli.main(["verify", "--out", str(tmp_path / "v.csv")]) == 4
    ok = verification.CheckResult(
        name="stub", passed=True, max_violation=0.0, threshold=0.0, runtime_s=0.0
    )
    monkeypatch.setattr(verification, "run_all", lambda seed: [ok])
    assert cli.main(["verify", "--out", str(tmp_path / "v.csv")]) == 0


def test_cli_seed_override(tmp_path):
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text("command: gap\ngamma: 2.0\n")
    out = tmp_path / "out.csv"
    assert cli.main(["gap", "--config", str(cfg_path), "--out", str(out), "--seed", "7"]) == 0
    meta = (tmp_path / "out.csv.meta.yaml").read_text()
    assert "seed: 7" in meta
