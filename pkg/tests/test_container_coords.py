import math

import numpy as np
import pytest

from contactflow.container_coords import cross_relation_check, dw_psi_at_zero, solve_offset
from contactflow.containers import Ball, HalfSpace
from contactflow.errors import TubeViolationError


def _dot(x, y):
    return np.einsum("ki,ki->k", x, y)


def test_hemisphere_offset_needs_no_tangential_shift(make_chart):
    cmap = make_chart("spherical-cap", 32)
    dw = dw_psi_at_zero(cmap)[cmap.boundary_row]
    assert np.abs(_dot(dw, cmap.surface.frames.conormal)).max() < 1e-12
    assert abs(solve_offset(cmap, 0, 0.05)) < 1e-12


def test_obtuse_cap_offset_slope(make_chart):
    cmap = make_chart("spherical-cap", 32, alpha=2 * math.pi / 3)
    fr = cmap.surface.frames
    dw = dw_psi_at_zero(cmap)[cmap.boundary_row]
    assert np.allclose(_dot(dw, fr.conormal), 1 / math.sqrt(3), atol=1e-12)
    assert np.allclose(_dot(dw, fr.normal), 1.0, atol=1e-12)


@pytest.mark.parametrize("preset", ["spherical-cap", "flat-disk", "perturbed-cap"])
def test_offset_points_stay_on_wall(make_chart, preset):
    cmap = make_chart(preset, 32)
    w = 0.5 * cmap.eps0 * np.cos(cmap.grid.theta)
    rho = np.zeros((cmap.grid.n_v + 1, cmap.grid.n_u))
    rho[cmap.boundary_row] = w
    pos = cmap.positions(rho)[cmap.boundary_row]
    lv = cmap.container.value(pos) / np.linalg.norm(cmap.container.gradient(pos), axis=-1)
    assert np.abs(lv).max() < 1e-12


def test_offset_outside_tube_is_rejected(make_chart):
    cmap = make_chart("spherical-cap", 32)
    with pytest.raises(TubeViolationError):
        cmap.offset(np.full(cmap.grid.n_u, 2 * cmap.eps0))


def test_dw_is_tangent_to_wall(make_chart):
    cmap = make_chart("flat-disk", 32)
    fr = cmap.surface.frames
    dw = dw_psi_at_zero(cmap)[cmap.boundary_row]
    assert np.abs(_dot(dw, fr.wall_normal)).max() < 1e-12
    assert np.allclose(_dot(dw, fr.wall_conormal), 1 / fr.sin_alpha, atol=1e-12)


def test_cross_identities_small(make_chart):
    res = cross_relation_check(make_chart("spherical-cap", 64))
    assert set(res) == {"iv", "v", "vi", "vii", "viii"}
    assert max(res[k] for k in ("iv", "v", "vi")) < 1e-9


def test_container_level_sets():
    hs = HalfSpace(height=0.0)
    p = np.array([[0.0, 0.0, 1.0]])
    assert hs.value(p)[0] < 0
    assert np.allclose(hs.normal(p)[0], [0.0, 0.0, -1.0])
    ball = Ball(radius=2.0, center=(0.0, 0.0, 0.0))
    q = np.array([[2.0, 0.0, 0.0]])
    assert ball.value(q)[0] == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(ball.normal(q)[0], [1.0, 0.0, 0.0])


def test_offset_sweep_stays_on_wall_and_is_odd_to_leading_order(make_chart):
    cmap = make_chart("spherical-cap", 32, alpha=2 * math.pi / 3)
    b = cmap.boundary_row
    for frac in np.linspace(-0.9, 0.9, 7):
        w = np.full(cmap.grid.n_u, frac * cmap.eps0)
        t = cmap.offset(w)
        p = cmap.base[b] + w[:, None] * cmap.normal[b] + t[:, None] * cmap.tangent[b]
        assert np.abs(cmap.container.value(p)).max() < 1e-10
    # a planar wall makes the offset exactly linear; a curved wall shows the w^2 term
    assert abs(solve_offset(cmap, 0, 1e-2) + solve_offset(cmap, 0, -1e-2)) < 1e-14
    disk = make_chart("flat-disk", 32)
    odd = [abs(solve_offset(disk, 0, w) + solve_offset(disk, 0, -w)) for w in (1e-2, 5e-3)]
    assert 3.5 < odd[0] / odd[1] < 4.5
