"""Time stepping: drift values, schemes, dissipation, coupling, blow-up."""

import numpy as np
import pytest

from spme.basis import OperatorSpec
from spme.bounds import BoundParams, contraction_bound
from spme.model import AssumptionError, Nonlinearity, certify_constants
from spme.noise import NoiseSpec, NoiseStream, trace
from spme.solver import (
    GalerkinState,
    SimConfig,
    coupled_simulate,
    drift,
    initial_coeffs,
    run_batch,
    simulate,
    step,
)

CUBIC = Nonlinearity(r=3.0, psi_kind="odd_power")
LINEAR = Nonlinearity(r=3.0, psi_kind="linear_plus_odd_power", alpha=1.0, gamma=0.0)
QUIET = NoiseSpec(profile="zero")


def make_config(**kw):
    kw.setdefault("operator", OperatorSpec(n_modes=16, grid_size=128))
    kw.setdefault("model", CUBIC)
    kw.setdefault("noise", QUIET)
    kw.setdefault("dt", 1e-4)
    kw.setdefault("t_end", 0.1)
    return SimConfig(**kw)


def test_drift_test_vector():
    op = OperatorSpec(n_modes=16, grid_size=512)
    a = np.zeros(16)
    a[0] = 1.0
    b = drift(a, CUBIC, op)
    expected = np.zeros(16)
    expected[0] = -3.0 * np.pi**2 / 2.0
    expected[2] = 9.0 * np.pi**2 / 2.0
    assert np.max(np.abs(b - expected)) < 1e-8


def test_explicit_linear_step():
    op = OperatorSpec(n_modes=4, grid_size=64)
    a = np.zeros(4)
    a[0] = 1.0
    state = step(GalerkinState(t=0.0, coeffs=a), 0.001, 0.0, "explicit_em", LINEAR, op)
    assert state.coeffs[0] == pytest.approx(1.0 - np.pi**2 * 0.001, rel=1e-12)
    assert state.t == pytest.approx(0.001)


def test_tamed_vs_explicit_second_order_agreement():
    # on a linear problem the taming correction is O(dt^2) per step
    op = OperatorSpec(n_modes=4, grid_size=64)
    a = np.zeros(4)
    a[0] = 1.0
    diffs = []
    for dt in (1e-3, 5e-4):
        ex = step(GalerkinState(0.0, a.copy()), dt, 0.0, "explicit_em", LINEAR, op)
        tm = step(GalerkinState(0.0, a.copy()), dt, 0.0, "tamed_em", LINEAR, op)
        diffs.append(np.max(np.abs(ex.coeffs - tm.coeffs)))
    assert diffs[0] < 1e-3
    assert diffs[0] / diffs[1] == pytest.approx(4.0, rel=0.1)


def test_h_norm_strictly_decreasing_quiet_cubic():
    cfg = make_config(t_end=0.5, record_every=50, gate_override=True)
    rec = simulate(cfg)
    assert not rec.blown_up
    assert np.all(np.diff(rec.h_norms) < 0.0)


def test_linear_heat_decay():
    op = OperatorSpec(n_modes=4, grid_size=64)
    cfg = make_config(
        operator=op, model=LINEAR, dt=1e-5, t_end=0.1,
        scheme="explicit_em", record_every=1000, gate_override=True,
    )
    rec = simulate(cfg)
    exact = (1.0 / np.pi) * np.exp(-np.pi**2 * 0.1)
    assert rec.h_norms[-1] == pytest.approx(exact, rel=1e-3)


def test_gate_enforced_unless_overridden():
    cfg = make_config(model=LINEAR)  # eta = 0 fails the gate
    with pytest.raises(AssumptionError):
        simulate(cfg)
    rec = simulate(make_config(model=LINEAR, gate_override=True))
    assert not rec.blown_up


def test_initial_presets():
    cfg = make_config()
    assert initial_coeffs(cfg, "zero", 1.0).sum() == 0.0
    e1 = initial_coeffs(cfg, "e1", 2.5)
    assert e1[0] == 2.5 and not np.any(e1[1:])
    explicit = initial_coeffs(cfg, [0.5, -0.5], 2.0)
    assert np.allclose(explicit[:2], [1.0, -1.0]) and not np.any(explicit[2:])
    band = initial_coeffs(cfg, "band", 1.0)
    assert np.array_equal(band, initial_coeffs(cfg, "band", 1.0))
    with pytest.raises(ValueError):
        initial_coeffs(cfg, "bump", 1.0)


def test_explicit_blow_up_flagged():
    # cubic drift at coarse dt trips the stability guard
    cfg = make_config(scheme="explicit_em", dt=5e-3, t_end=0.05,
                      initial_scale=5.0, gate_override=True)
    rec = simulate(cfg)
    assert rec.blown_up
    assert rec.blow_up_time is not None and rec.blow_up_time <= 0.05
    assert rec.blow_up_reason is not None
    assert np.isnan(rec.h_norms[-1])


def test_batch_matches_single_runs():
    nz = NoiseSpec(profile="diagonal_power", c=0.2, a=1.0, master_seed=9)
    cfg = make_config(noise=nz, t_end=0.05, record_every=100, gate_override=True)
    n = cfg.operator.n_modes
    a0 = np.zeros((2, n))
    a0[:, 0] = 1.0
    batch = run_batch(cfg, [NoiseStream(nz, 0), NoiseStream(nz, 1)], a0)
    single0 = run_batch(cfg, [NoiseStream(nz, 0)], a0[:1])
    single1 = run_batch(cfg, [NoiseStream(nz, 1)], a0[1:])
    assert np.array_equal(batch.h_norms[:, 0], single0.h_norms[:, 0])
    assert np.array_equal(batch.h_norms[:, 1], single1.h_norms[:, 0])
    assert not np.array_equal(batch.h_norms[:, 0], batch.h_norms[:, 1])


def test_snapshots_recorded():
    cfg = make_config(t_end=0.02, record_every=10, gate_override=True,
                      snapshot_times=(0.01, 0.02))
    rec = simulate(cfg)
    assert set(rec.snapshots) == {0.01, 0.02}
    assert rec.snapshots[0.02].shape == (16,)
    assert np.array_equal(rec.snapshots[0.02], rec.final_coeffs)


def test_coupled_distance_monotone_and_bounded():
    nz = NoiseSpec(profile="diagonal_power", c=0.2, a=1.0, master_seed=3)
    op = OperatorSpec(n_modes=16, grid_size=128)
    cfg = SimConfig(operator=op, model=CUBIC, noise=nz, dt=1e-4, t_end=0.1,
                    record_every=1)
    x0 = np.zeros(16)
    x0[0] = 1.0
    rx, ry, dist = coupled_simulate(cfg, initial_x=x0, initial_y=-x0,
                                    stream=NoiseStream(nz))
    assert dist[0] == pytest.approx(2.0 / np.pi)
    assert np.all(np.diff(dist) <= 1e-9 * (1.0 + dist[:-1]))
    k, _ = certify_constants(CUBIC, op.eigenvalue(1), trace(nz, op))
    p = BoundParams(r=3.0, eta=k.eta, theta=k.theta, lambda_1=op.eigenvalue(1))
    assert dist[-1] <= contraction_bound(2.0 / np.pi, 0.1, p) * 1.1


def test_config_validation():
    with pytest.raises(ValueError):
        make_config(dt=0.2)  # dt > t_end
    with pytest.raises(ValueError):
        make_config(scheme="heun")
    with pytest.raises(ValueError):
        make_config(operator=OperatorSpec(n_modes=16, grid_size=64))  # aliasing
