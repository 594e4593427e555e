import math

import numpy as np
import pytest

from contactflow.errors import CompatibilityError, ConfigError
from contactflow.evolution import (
    DIAGNOSTIC_KEYS,
    FlowConfig,
    calibrated_a,
    compatible_start,
    run,
    step_mcf,
    step_willmore,
    with_calibration,
)
from contactflow.linearization import assemble
from contactflow.perturbed_geometry import HeightField, evaluate


def _perturbed(cmap):
    return HeightField(cmap.surface.spec.initial_height(), cmap)


@pytest.mark.parametrize("kwargs,match", [
    (dict(b=-1.0), "b > 0"),
    (dict(kind="heat"), "must be one of"),
    (dict(dt=0.0), "dt"),
    (dict(T=-1.0), "T"),
    (dict(a=math.nan), "finite"),
    (dict(cadence=0), "cadence"),
])
def test_config_validation(kwargs, match):
    with pytest.raises(ConfigError, match=match):
        FlowConfig(**kwargs).validate()


def test_hemisphere_calibration_is_one(make_chart):
    assert calibrated_a("mcf", make_chart("spherical-cap", 64), 1.0) == pytest.approx(1.0, abs=1e-2)


def test_stationary_cap_single_step(make_chart):
    cmap = make_chart("spherical-cap", 32)
    cfg = with_calibration(FlowConfig(kind="mcf", dt=1e-3, T=1e-3), cmap)
    system = assemble("mcf", cmap=cmap, a=cfg.a, b=cfg.b)
    rho = step_mcf(HeightField.zeros(cmap), system, cfg)
    assert np.abs(rho.values).max() <= 1e-8
    assert rho.time == pytest.approx(1e-3)


def test_zero_final_time_records_only_start(make_chart):
    cmap = make_chart("spherical-cap", 32)
    traj = run(with_calibration(FlowConfig(T=0.0), cmap), HeightField.zeros(cmap))
    assert len(traj.times) == 1
    assert traj.times[0] == 0.0
    assert set(traj.diagnostics) == set(DIAGNOSTIC_KEYS)


def test_cadence_and_final_sample(make_chart):
    cmap = make_chart("perturbed-cap", 32, amplitude=0.02)
    cfg = with_calibration(FlowConfig(dt=1e-3, T=0.007, cadence=3), cmap)
    traj = run(cfg, _perturbed(cmap))
    assert traj.times == pytest.approx([0.0, 0.003, 0.006, 0.007])
    assert traj.rejections == 0


def test_mcf_decreases_energy_and_keeps_volume(make_chart):
    cmap = make_chart("perturbed-cap", 32, amplitude=0.05)
    traj = run(with_calibration(FlowConfig(dt=1e-3, T=0.02), cmap), _perturbed(cmap))
    e, vol = traj.column("energy"), traj.column("volume")
    assert np.all(np.diff(e) < 0)
    assert abs(vol[-1] - vol[0]) / vol[0] < 1e-4


def test_incompatible_willmore_start_is_rejected(make_chart):
    cmap = make_chart("spherical-cap", 32)
    cfg = FlowConfig(kind="willmore", dt=1e-3, T=1e-3)
    with pytest.raises(CompatibilityError, match="H = 0"):
        run(cfg, HeightField.zeros(cmap))


def test_compatible_start_enforces_zero_boundary_curvature(make_chart):
    cmap = make_chart("flat-disk", 32, amplitude=0.02)
    rho = compatible_start(_perturbed(cmap), tol=5e-2)
    q = evaluate(rho)
    assert np.abs(q.mean_curvature[cmap.boundary_row]).max() < 1e-10
    assert np.allclose(rho.values[-1], _perturbed(cmap).values[-1], atol=1e-15)


def test_flat_disk_willmore_step_stays_flat(make_chart):
    cmap = make_chart("flat-disk", 32)
    cfg = with_calibration(FlowConfig(kind="willmore", dt=1e-3, T=1e-3), cmap)
    system = assemble("willmore", cmap=cmap, a=cfg.a, b=cfg.b)
    rho0 = HeightField.zeros(cmap)
    rho = step_willmore(rho0.with_values(rho0.values, ghost=np.zeros(cmap.grid.n_u)), system, cfg)
    assert np.abs(rho.values).max() < 1e-12


def test_step_kind_mismatch(make_chart):
    cmap = make_chart("spherical-cap", 32)
    system = assemble("mcf", cmap=cmap, a=1.0, b=1.0)
    with pytest.raises(ConfigError):
        step_willmore(HeightField.zeros(cmap), system, FlowConfig(kind="willmore"))


def test_runs_are_deterministic(make_chart):
    cmap = make_chart("perturbed-cap", 32, amplitude=0.02)
    cfg = with_calibration(FlowConfig(dt=1e-3, T=0.005), cmap)
    a = run(cfg, _perturbed(cmap))
    b = run(cfg, _perturbed(cmap))
    assert np.array_equal(a.final.values, b.final.values)
    assert a.diagnostics == b.diagnostics


def test_unbalanced_hemisphere_contact_line_follows_residual(make_chart):
    cmap = make_chart("spherical-cap", 32)
    cfg = FlowConfig(kind="mcf", a=0.0, b=1.0, dt=1e-4, T=1e-4)
    q = evaluate(HeightField.zeros(cmap))
    residual = cfg.a + cfg.b * q.geodesic_curvature + q.cos_alpha
    rho = step_mcf(HeightField.zeros(cmap), assemble("mcf", cmap=cmap, a=cfg.a, b=cfg.b), cfg)
    assert np.all(np.sign(rho.values[-1]) == np.sign(residual))


def test_stationary_cap_residual_column(make_chart):
    cmap = make_chart("spherical-cap", 32)
    traj = run(with_calibration(FlowConfig(dt=1e-3, T=0.01), cmap), HeightField.zeros(cmap))
    assert traj.column("stationarity_residual").max() <= 1e-8
    assert np.ptp(traj.column("volume")) <= 1e-12
