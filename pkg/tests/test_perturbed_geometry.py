import math

import numpy as np
import pytest

from contactflow.errors import TubeViolationError
from contactflow.perturbed_geometry import (
    HeightField,
    InfeasibleVariationError,
    evaluate,
    first_variation_capillary,
    first_variation_check,
    max_stationarity_residual,
    normal_velocity,
    random_feasible_field,
)


@pytest.mark.parametrize("preset", ["spherical-cap", "flat-disk"])
def test_zero_height_reproduces_exact_values(make_chart, preset):
    cmap = make_chart(preset, 128)
    ex = cmap.surface.exact
    q = evaluate(HeightField.zeros(cmap))
    assert q.volume == pytest.approx(ex["volume"], rel=1e-3)
    assert q.wetted_area == pytest.approx(ex["wetted_area"], rel=1e-3)
    assert q.boundary_length == pytest.approx(ex["boundary_length"], rel=1e-3)
    assert np.allclose(q.cos_alpha, ex["cos_alpha"], atol=1e-10)


def test_flat_disk_volume_value(make_chart):
    q = evaluate(HeightField.zeros(make_chart("flat-disk", 128)))
    assert q.volume == pytest.approx(1.094, abs=1e-3)


def test_hemisphere_is_stationary_for_calibrated_tension(make_chart):
    q = evaluate(HeightField.zeros(make_chart("spherical-cap", 64)))
    a = float(np.mean(-q.geodesic_curvature - q.cos_alpha))
    assert a == pytest.approx(1.0, abs=1e-2)
    assert max_stationarity_residual(q, "mcf", a, 1.0) < 1e-8


def test_tube_check(make_chart):
    cmap = make_chart("spherical-cap", 32)
    rho = HeightField(np.full((cmap.grid.n_v, cmap.grid.n_u), cmap.eps0), cmap)
    with pytest.raises(TubeViolationError):
        rho.check_tube()


def test_shape_is_checked(make_chart):
    with pytest.raises(ValueError):
        HeightField(np.zeros((3, 3)), make_chart("spherical-cap", 32))


def test_normal_velocity_at_reference_is_height_rate(make_chart):
    cmap = make_chart("spherical-cap", 32)
    rho = HeightField.zeros(cmap)
    rate = np.random.default_rng(1).normal(size=(cmap.grid.n_v, cmap.grid.n_u))
    V, v = normal_velocity(rho, rate)
    assert np.allclose(V, rate, atol=1e-12)
    assert np.allclose(v, rate[-1], atol=1e-12)


def test_normal_field_is_infeasible_on_obtuse_cap(make_chart):
    cmap = make_chart("spherical-cap", 32, alpha=2 * math.pi / 3)
    rho = HeightField.zeros(cmap)
    zeta = np.broadcast_to([0.0, 0.0, 1.0], (cmap.grid.n_v, cmap.grid.n_u, 3))
    with pytest.raises(InfeasibleVariationError):
        first_variation_capillary(rho, zeta, 0.3, 1.0)


def test_random_fields_are_feasible(make_chart):
    cmap = make_chart("perturbed-cap", 64, amplitude=0.02)
    rho = HeightField(cmap.surface.spec.initial_height(), cmap)
    zeta = random_feasible_field(rho, np.random.default_rng(3))
    q = evaluate(rho)
    assert np.abs(np.einsum("ki,ki->k", zeta[cmap.boundary_row], q.wall_normal)).max() < 1e-12


def test_capillary_variation_matches_difference_quotient(make_chart):
    cmap = make_chart("perturbed-cap", 128, amplitude=0.02)
    rho = HeightField(cmap.surface.spec.initial_height(), cmap)
    chk = first_variation_check(rho, random_feasible_field(rho, np.random.default_rng(7)),
                                "capillary", a=0.3, b=1.0)
    assert 1.8 <= chk.slope <= 2.2
    assert chk.relative_mismatch < 1e-3


def test_closed_form_energies_and_volumes(make_chart):
    disk = evaluate(HeightField.zeros(make_chart("flat-disk", 128)))
    assert disk.energy("capillary", 0.0, 0.0) == pytest.approx(math.pi, rel=1e-3)
    assert abs(disk.bending) < 1e-20
    hemi = evaluate(HeightField.zeros(make_chart("spherical-cap", 128)))
    assert hemi.bending == pytest.approx(2 * math.pi, rel=1e-3)
    assert hemi.volume == pytest.approx(2 * math.pi / 3, rel=1e-3)
    obtuse = evaluate(HeightField.zeros(make_chart("spherical-cap", 128, alpha=2 * math.pi / 3)))
    h = 1.0 + math.cos(2 * math.pi / 3)
    assert obtuse.volume == pytest.approx(math.pi * h * h * (3.0 - h) / 3.0, rel=1e-3)
    kappa = np.linalg.norm(obtuse.curvature_vector, axis=1)
    assert np.allclose(kappa, 2 / math.sqrt(3), rtol=1e-3)


def test_unit_rate_gives_unit_velocity(make_chart):
    cmap = make_chart("spherical-cap", 32, alpha=2 * math.pi / 3)
    V, v = normal_velocity(HeightField.zeros(cmap), np.ones((cmap.grid.n_v, cmap.grid.n_u)))
    assert np.allclose(V, 1.0, atol=1e-12)
    assert np.allclose(v, 1 / math.sin(2 * math.pi / 3), atol=1e-12)
