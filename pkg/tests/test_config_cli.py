"""Config parsing round-trips and CLI exit codes / artifact determinism."""

import json

import numpy as np
import pytest

from spme.cli import main
from spme.config import (
    ConfigError,
    build_model,
    build_noise,
    build_operator,
    parse_config,
    parse_initial,
    serialize_config,
)

BASE = """
operator.n_modes = 8
operator.grid_size = 64
model.psi = odd_power
noise.profile = diagonal_power
noise.c = 0.2
noise.a = 1.0
noise.seed = 5
sim.dt = 0.001
sim.t_end = 0.2
sim.record_every = 20
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_and_serialize_round_trip():
    cfg = parse_config(BASE)
    assert cfg["operator.n_modes"] == 8
    assert cfg["sim.dt"] == 0.001
    assert "model.r" in cfg.applied_defaults
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again.values == cfg.values


def test_all_errors_reported_together():
    bad = "operator.n_modes = 0\nmodel.r = 1.0\nmystery.key = 3\nnot a line\n"
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    msgs = err.value.errors
    assert len(msgs) == 4
    assert any("r must exceed 1" in m for m in msgs)
    assert any("unknown key" in m for m in msgs)
    assert any("expected" in m for m in msgs)


def test_dt_exceeding_t_end_rejected():
    with pytest.raises(ConfigError):
        parse_config(BASE + "sim.dt = 1.0\n")


def test_parse_initial_labels():
    assert parse_initial("e1") == ("e1", 1.0)
    assert parse_initial("zero") == ("zero", 1.0)
    assert parse_initial("10*e1") == ("e1", 10.0)


def test_builders(tmp_path):
    cfg = parse_config(BASE)
    op = build_operator(cfg)
    assert op.n_modes == 8 and op.grid_size == 64
    mdl = build_model(cfg)
    assert mdl.r == 3.0 and mdl.psi_kind == "odd_power"
    nz = build_noise(cfg)
    assert nz.master_seed == 5
    assert build_noise(cfg, seed_override=9).master_seed == 9


def test_verify_subcommand(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "verify.csv").read_text().splitlines()
    assert rows[0] == "eta,sigma,theta,delta,kappa,c,c1,c2,trace_q,gate"
    fields = rows[1].split(",")
    assert abs(float(fields[0]) - 0.25) < 1e-3  # eta
    assert fields[-1] == "pass"
    meta = json.loads((out / "verify_meta.json").read_text())
    assert meta["gate"] == "pass"


def test_verify_gate_failure_exit_2(tmp_path):
    cfg = write(tmp_path, BASE + "model.phi = scaled_identity\nmodel.beta = 0.5\n")
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 2
    assert (out / "verify.csv").read_text().splitlines()[1].endswith("fail")


def test_verify_monotonicity_failure_exit_2(tmp_path):
    cfg = write(tmp_path, BASE + "model.gamma = -1.0\n")
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 2


def test_simulate_subcommand_and_determinism(tmp_path):
    cfg = write(tmp_path, BASE)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
    csv1 = (out1 / "simulate.csv").read_bytes()
    assert csv1 == (out2 / "simulate.csv").read_bytes()
    rows = csv1.decode().splitlines()
    assert rows[0] == "t,h_norm,l2_norm,lrp1_power"
    assert len(rows) == 2 + 10  # header + t=0 + 10 records


def test_seed_override_changes_output(tmp_path):
    cfg = write(tmp_path, BASE)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", cfg, "--out", str(out1)])
    main(["simulate", "--config", cfg, "--seed", "77", "--out", str(out2)])
    assert (out1 / "simulate.csv").read_bytes() != (out2 / "simulate.csv").read_bytes()


def test_simulate_blow_up_exit_4(tmp_path):
    text = BASE + "sim.scheme = explicit_em\nsim.dt = 0.005\nsim.initial_scale = 5.0\nsim.gate_override = true\n"
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 4
    meta = json.loads((out / "simulate_meta.json").read_text())
    assert meta["blown_up"] is True
    assert meta["blow_up_time"] is not None


def test_couple_subcommand(tmp_path):
    text = BASE + "sim.initial_y = e1\nsim.initial_y_scale = -1.0\n"
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["couple", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "couple.csv").read_text().splitlines()
    assert rows[0] == "t,dist_h,bound_poly,bound_exp"
    first = rows[1].split(",")
    assert float(first[1]) == pytest.approx(2.0 / np.pi, rel=1e-12)
    meta = json.loads((out / "couple_meta.json").read_text())
    assert meta["bound_violated"] is False


def test_ergodic_subcommand(tmp_path):
    text = BASE + (
        "sim.t_end = 1.0\nensemble.n_traj = 24\nensemble.burn_in = 0.3\n"
        "ensemble.initials = zero,e1\nensemble.functionals = tanh_h_norm\n"
    )
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["ergodic", "--config", cfg, "--out", str(out)]) == 0
    rows = (out / "ergodic.csv").read_text().splitlines()
    assert rows[0] == "t,functional,initial,ptf_estimate,std_err,mixing_gap"
    meta = json.loads((out / "ergodic_meta.json").read_text())
    assert meta["fit_kind"] == "power"
    assert set(meta["uniqueness_diagnostic"]) == {"tanh_h_norm"}


def test_report_subcommand(tmp_path):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "out"
    main(["simulate", "--config", cfg, "--out", str(out)])
    assert main(["report", "--out", str(out)]) == 0
    index = json.loads((out / "index.json").read_text())
    names = [a["name"] for a in index["artifacts"]]
    assert "simulate.csv" in names
    for a in index["artifacts"]:
        assert len(a["sha256"]) == 64 and a["bytes"] > 0
    assert (out / "summary.txt").read_text()


def test_config_error_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, "model.r = 0.5\n")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "r must exceed 1" in capsys.readouterr().err
