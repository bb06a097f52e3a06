import math
import subprocess
import sys

import numpy as np
import pytest

from swmoment import cli
from swmoment.friction import (
    MuI,
    NewtonianManning,
    NewtonianSlip,
    SavageHutter,
    SlipBottom,
)
from swmoment.sim import (
    SimConfig,
    Snapshot,
    build_model,
    config_from_mapping,
    config_to_mapping,
    emit_profile,
    front_position,
    preset,
    read_config_file,
    run,
    write_snapshot,
)

PI4 = math.pi / 4


def test_preset_dam_break_defaults():
    cfg = preset(1)
    assert cfg.N == 2 and cfg.J == 1000
    assert cfg.mode == "semi_implicit" and cfg.cfl == 0.05
    assert cfg.theta == PI4 and cfg.eps == pytest.approx(0.01, rel=1e-15)
    assert cfg.snapshot_times == (0.4, 0.6, 1.0)
    assert cfg.ic == {"kind": "block", "h": 0.08, "x_lo": 0.3, "x_hi": 0.5}
    model = build_model(cfg)
    assert isinstance(model, NewtonianSlip)
    assert model.nu == pytest.approx(0.0011898692691058871, rel=1e-14)
    assert model.lam == pytest.approx(1e-4, rel=1e-14)


def test_preset_bottom_friction_variants():
    slip = build_model(preset(2))
    assert isinstance(slip, NewtonianSlip)
    assert slip.lam == pytest.approx(1.5e-3, rel=1e-14)
    manning = build_model(preset(2, law="manning"))
    assert isinstance(manning, NewtonianManning)
    assert manning.n2 == pytest.approx(0.81373918003272109, rel=1e-14)
    assert build_model(preset(2, law="slip", Lambda=0.0005)).lam == pytest.approx(
        5e-4, rel=1e-14)
    with pytest.raises(ValueError):
        preset(2, law="tidal")


def test_preset_granular_defaults():
    cfg = preset(3)
    assert cfg.mode == "explicit"
    model = build_model(cfg)
    assert isinstance(model, SavageHutter)
    assert model.delta == pytest.approx(math.radians(15.0), rel=1e-15)
    assert model.phi_int == pytest.approx(math.radians(20.0), rel=1e-15)
    steeper = build_model(preset(3, delta_deg=18.0))
    assert steeper.delta == pytest.approx(math.radians(18.0), rel=1e-15)


def test_preset_rheology_defaults():
    cfg = preset(4)
    assert cfg.N == 3 and cfg.mode == "explicit" and cfg.cfl == 0.01
    assert cfg.rho == 1550.0 and cfg.rho_s == 2500.0 and cfg.quad_points == 8
    model = build_model(cfg)
    assert isinstance(model, MuI)
    assert model.mu_s == 0.48 and model.mu_2 == 0.73
    assert model.c_I == pytest.approx(2.6390311051245129, rel=1e-14)
    assert model.quad_points == 8
    assert isinstance(model.bottom_law, SlipBottom)
    assert model.bottom_law.nu0 == pytest.approx(9.2118911156584804e-5, rel=1e-14)
    assert model.bottom_law.lam == pytest.approx(1e-3, rel=1e-14)


def test_preset_unknown_id_rejected():
    with pytest.raises(ValueError):
        preset(5)
    with pytest.raises(ValueError):
        preset(0)


def test_preset_overrides_pass_through():
    cfg = preset(1, J=200, theta=math.pi / 8, mode="explicit", snapshot_times=(0.5,))
    assert cfg.J == 200 and cfg.theta == math.pi / 8
    assert cfg.mode == "explicit" and cfg.snapshot_times == (0.5,)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(J=2)
    with pytest.raises(ValueError):
        SimConfig(N=0)
    with pytest.raises(ValueError):
        SimConfig(theta=math.pi / 2)
    with pytest.raises(ValueError):
        SimConfig(snapshot_times=())
    with pytest.raises(ValueError):
        SimConfig(snapshot_times=(0.6, 0.4))
    with pytest.raises(ValueError):
        SimConfig(snapshot_times=(0.4, 0.4))
    with pytest.raises(ValueError):
        SimConfig(snapshot_times=(-0.1, 0.4))


def test_run_zero_snapshot_echoes_initial_state():
    cfg = preset(1, J=40, snapshot_times=(0.0,))
    res = run(cfg)
    assert len(res.snapshots) == 1
    snap = res.snapshots[0]
    assert snap.time == 0.0
    inside = (snap.x >= 0.3) & (snap.x <= 0.5)
    np.testing.assert_array_equal(snap.h, np.where(inside, 0.08, 0.0))
    assert np.all(snap.u_m == 0.0) and np.all(snap.alpha == 0.0)
    assert len(res.diagnostics["time"]) == 0


def test_run_uniform_equilibrium_is_stationary():
    # no inclination and zero velocity: transport and source both vanish
    cfg = SimConfig(N=2, J=16, theta=0.0, friction="newtonian_slip",
                    friction_params={"Lambda": 1e-4 * 0.1, "eta": 0.01},
                    ic={"kind": "uniform", "h": 0.05}, snapshot_times=(0.05,))
    res = run(cfg)
    snap = res.snapshots[-1]
    np.testing.assert_allclose(snap.h, 0.05, rtol=0.0, atol=1e-12)
    np.testing.assert_allclose(snap.u_m, 0.0, rtol=0.0, atol=1e-12)
    np.testing.assert_allclose(snap.alpha, 0.0, rtol=0.0, atol=1e-12)


def test_run_lands_exactly_on_snapshot_times():
    times = (0.013, 0.0171)
    cfg = preset(1, J=40, snapshot_times=times)
    res = run(cfg)
    assert [s.time for s in res.snapshots] == list(times)
    recorded = res.diagnostics["time"]
    for t in times:
        assert np.any(recorded == t)


def test_run_diagnostics_series():
    cfg = preset(1, J=60, snapshot_times=(0.05,))
    res = run(cfg)
    d = res.diagnostics
    n = len(d["time"])
    assert n >= 1
    for key in ("dt", "mass", "max_speed", "dry_cells", "sh_violations",
                "newton_iters", "clamped_mass"):
        assert len(d[key]) == n
    assert np.all(d["dt"] > 0.0) and np.all(np.isfinite(d["mass"]))
    mass0 = 0.08 * (0.5 - 0.3)
    assert np.max(np.abs(d["mass"] - mass0)) / mass0 < 1e-8


def test_run_is_deterministic():
    cfg = preset(1, J=32, snapshot_times=(0.05,))
    a = run(cfg).snapshots[-1]
    b = run(cfg).snapshots[-1]
    assert np.array_equal(a.h, b.h)
    assert np.array_equal(a.u_m, b.u_m)
    assert np.array_equal(a.alpha, b.alpha)


def test_run_abort_reports_time_and_cell():
    cfg = preset(1, J=20, newton_max_iter=0, snapshot_times=(0.01,))
    with pytest.raises(RuntimeError, match=r"aborted at t=.*cell"):
        run(cfg)


def test_run_step_budget_guard():
    cfg = preset(1, J=40, max_steps=2, snapshot_times=(1.0,))
    with pytest.raises(RuntimeError, match="exceeded"):
        run(cfg)


def _short_run(**overrides):
    cfg = preset(1, J=12, snapshot_times=(0.02,), **overrides)
    return run(cfg).snapshots[-1]


def test_write_snapshot_layout(tmp_path):
    snap = _short_run(N=1)
    path = tmp_path / "snap.csv"
    write_snapshot(snap, str(path))
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "x,h,u_m,alpha_1,u_bottom,h_s"
    assert len(lines) == 1 + 12
    assert all(len(line.split(",")) == 6 for line in lines[1:])
    wide = _short_run(N=3)
    write_snapshot(wide, str(path))
    header = path.read_text().split("\n", 1)[0]
    assert header.split(",") == ["x", "h", "u_m", "alpha_1", "alpha_2", "alpha_3",
                                 "u_bottom", "h_s"]


def test_write_snapshot_rerun_is_byte_identical(tmp_path):
    snap = _short_run()
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_snapshot(snap, str(p1))
    write_snapshot(snap, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_write_snapshot_bad_path_reports_path(tmp_path):
    snap = _short_run()
    missing = tmp_path / "no_such_dir" / "snap.csv"
    with pytest.raises(OSError, match="no_such_dir"):
        write_snapshot(snap, str(missing))


def test_profile_constant_when_moments_vanish(basis2):
    cfg = SimConfig(N=2, J=8, theta=0.0,
                    friction_params={"Lambda": 1e-5, "eta": 0.01},
                    ic={"kind": "uniform", "h": 0.05, "u_m": 0.3},
                    snapshot_times=(0.0,))
    snap = run(cfg).snapshots[0]
    rows = emit_profile(snap, basis2, resolution=7)
    assert rows.shape == (8 * 7, 3)
    np.testing.assert_allclose(rows[:, 2], 0.3, rtol=0.0, atol=1e-15)


def test_profile_bottom_row_matches_bottom_velocity(basis2):
    snap = _short_run()
    res = 5
    rows = emit_profile(snap, basis2, resolution=res)
    bottom = rows[rows[:, 1] == 0.0]
    assert len(bottom) == len(snap.x)
    np.testing.assert_allclose(bottom[:, 2], snap.u_bottom, rtol=0.0, atol=1e-14)


def test_profile_shear_sign_follows_first_moment(basis1):
    # u(zeta) = u_m + alpha_1 (1 - 2 zeta): negative alpha_1 shears forward
    cfg = SimConfig(N=1, J=6, theta=0.0,
                    friction_params={"Lambda": 1e-5, "eta": 0.01},
                    ic={"kind": "uniform", "h": 0.05, "u_m": 0.2, "alpha": (-0.1,)},
                    snapshot_times=(0.0,))
    snap = run(cfg).snapshots[0]
    rows = emit_profile(snap, basis1, resolution=9)
    u = rows[:, 2].reshape(6, 9)
    assert np.all(np.diff(u, axis=1) > 0.0)


def test_profile_resolution_validated(basis2):
    snap = _short_run()
    with pytest.raises(ValueError):
        emit_profile(snap, None, resolution=1)
    with pytest.raises(ValueError):
        emit_profile(snap, None, resolution=0)


def test_profile_file_output(tmp_path, basis2):
    snap = _short_run()
    path = tmp_path / "field.csv"
    rows = emit_profile(snap, basis2, resolution=4, path=str(path))
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "x,zeta,u"
    assert len(lines) == 1 + rows.shape[0]


def test_front_position_threshold():
    x = np.array([0.1, 0.2, 0.3, 0.4])
    zeros = np.zeros(4)
    snap = Snapshot(time=0.0, x=x, h=np.array([0.05, 2e-5, 5e-6, 0.0]),
                    u_m=zeros, alpha=np.zeros((4, 1)), u_bottom=zeros, h_s=zeros)
    # 5e-6 sits below 10*h_min and must not register as flow
    assert front_position(snap, h_min=1e-6) == 0.2
    dry = Snapshot(time=0.0, x=x, h=np.full(4, 1e-6), u_m=zeros,
                   alpha=np.zeros((4, 1)), u_bottom=zeros, h_s=zeros)
    assert front_position(dry, h_min=1e-6) == -math.inf


@pytest.mark.parametrize("example,kwargs", [
    (1, {}),
    (2, {"law": "manning"}),
    (3, {"delta_deg": 18.0}),
    (4, {"bathymetry": "runoff"}),
])
def test_config_mapping_round_trip(example, kwargs):
    cfg = preset(example, **kwargs)
    assert config_from_mapping(config_to_mapping(cfg)) == cfg


def test_config_round_trip_through_file(tmp_path):
    cfg = preset(2, law="manning", J=64, snapshot_times=(0.1, 0.25))
    path = tmp_path / "run.ini"
    text = []
    for section, kv in config_to_mapping(cfg).items():
        text.append(f"[{section}]")
        text.extend(f"{k} = {v}" for k, v in kv.items())
    path.write_text("\n".join(text) + "\n")
    assert config_from_mapping(read_config_file(str(path))) == cfg


def test_read_config_file_missing():
    with pytest.raises(FileNotFoundError):
        read_config_file("/no/such/config.ini")


def test_cli_preset_run_writes_outputs(tmp_path, capsys):
    rc = cli.main(["--preset", "1", "--out", str(tmp_path),
                   "--override", "grid.j=24",
                   "--override", "output.times=0.01"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "front position" in out
    assert (tmp_path / "snapshot_t0.01.csv").exists()
    assert (tmp_path / "summary.txt").exists()


def test_cli_config_file_with_profile(tmp_path, capsys):
    path = tmp_path / "run.ini"
    path.write_text(
        "[grid]\nj = 16\n"
        "[output]\ntimes = 0.01\nprofile_resolution = 5\n"
    )
    rc = cli.main(["--preset", "1", "--config", str(path), "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "profile_t0.01.csv").exists()


def test_cli_requires_preset_or_config():
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_cli_reports_bad_inputs(tmp_path, capsys):
    assert cli.main(["--preset", "1", "--override", "nonsense"]) == 1
    assert "error:" in capsys.readouterr().err
    assert cli.main(["--preset", "1", "--override", "grid.j=banana"]) == 1
    assert cli.main(["--config", str(tmp_path / "missing.ini")]) == 1


def test_cli_module_invocation(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "swmoment.cli", "--preset", "1",
         "--out", str(tmp_path), "--override", "grid.j=16",
         "--override", "output.times=0.005"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "completed" in proc.stdout
