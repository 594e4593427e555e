import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactflow._backend import BACKEND
from contactflow import _kernels_py
from contactflow.errors import AngleAssumptionError, ConfigError
from contactflow.surface_core import (
    ChartSpec,
    ParameterGrid,
    build_reference_surface,
    field_derivatives,
    laplace_beltrami,
    smoothstep_cutoff,
)


def test_grid_layout_puts_last_row_on_contact_curve():
    g = ParameterGrid(16, 8)
    assert g.s[-1] == pytest.approx(1.0, abs=1e-15)
    assert g.s[0] == pytest.approx(0.5 * g.ds)
    assert g.quadrature_rows().sum() == pytest.approx(1.0)


@pytest.mark.parametrize("n_u,n_v", [(4, 16), (16, 4), (15, 16)])
def test_grid_rejects_bad_sizes(n_u, n_v):
    with pytest.raises(ConfigError):
        ParameterGrid(n_u, n_v)


@pytest.mark.parametrize("alpha", [0.0, math.pi, -0.3])
def test_cap_angle_outside_range_is_rejected(alpha):
    with pytest.raises(AngleAssumptionError, match="0 < alpha < pi"):
        ChartSpec(preset="spherical-cap", alpha=alpha).validate()


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown preset"):
        ChartSpec(preset="torus").validate()


@given(st.floats(min_value=-1.0, max_value=2.0), st.floats(min_value=0.05, max_value=1.0))
@settings(max_examples=60, deadline=None)
def test_cutoff_is_bounded_and_monotone(v, width):
    c = float(smoothstep_cutoff(v, width))
    assert 0.0 <= c <= 1.0
    assert float(smoothstep_cutoff(v + 1e-3, width)) <= c + 1e-15


def test_cutoff_endpoints():
    assert smoothstep_cutoff(0.0, 0.3) == 1.0
    assert smoothstep_cutoff(0.3, 0.3) == 0.0


@pytest.mark.parametrize("alpha", [math.pi / 4, math.pi / 2, 2 * math.pi / 3])
def test_cap_curvatures_match_sphere(make_chart, alpha):
    surf = make_chart("spherical-cap", 64, alpha=alpha).surface
    assert np.abs(surf.mean_curvature + 2.0).max() < 1e-2
    assert np.abs(surf.gauss_curvature - 1.0).max() < 1e-2
    assert surf.area == pytest.approx(surf.exact["area"], rel=1e-2)


def test_cap_mean_curvature_converges_at_second_order(make_chart):
    surfs = [make_chart("spherical-cap", n).surface for n in (64, 128)]
    for err in (lambda s: np.abs(s.mean_curvature + 2.0).max(),
                lambda s: abs(s.area - 2 * math.pi),
                lambda s: abs(s.frames.length - 2 * math.pi)):
        assert math.log2(err(surfs[0]) / err(surfs[1])) > 1.8


def test_hemisphere_frames(make_chart):
    fr = make_chart("spherical-cap", 64).surface.frames
    assert np.abs(fr.cos_alpha).max() < 1e-12
    assert np.abs(fr.geodesic_curvature + 1.0).max() < 1e-2
    assert fr.length == pytest.approx(2 * math.pi, rel=1e-2)


def test_flat_disk_contact_data(make_chart):
    surf = make_chart("flat-disk", 64).surface
    ex = surf.exact
    assert np.abs(surf.mean_curvature).max() < 1e-10
    assert np.allclose(surf.nodes[..., 2], 0.5)
    assert np.allclose(surf.frames.cos_alpha, ex["cos_alpha"], atol=1e-12)
    assert ex["cos_alpha"] == pytest.approx(-1 / math.sqrt(5))


def test_laplace_of_coordinate_is_mean_curvature_vector(make_chart):
    surf = make_chart("spherical-cap", 128).surface
    z = surf.nodes[..., 2]
    lap = laplace_beltrami(surf, z)
    expected = surf.mean_curvature * surf.normal[..., 2]
    assert np.abs(lap - expected)[:-4].max() < 5e-3


def test_field_derivatives_second_order():
    errs = []
    for n in (32, 64):
        g = ParameterGrid(n, n // 2)
        s = g.s_rows(g.n_v + 1)[:, None]
        f = np.sin(2 * s) * np.cos(g.theta)[None, :]
        fs = field_derivatives(f, g)[0]
        errs.append(np.abs(fs - 2 * np.cos(2 * s[:-1]) * np.cos(g.theta))[2:].max())
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_kernel_backends_agree():
    if BACKEND != "cython":
        pytest.skip("compiled extension not built")
    from contactflow import _kernels

    rng = np.random.default_rng(0)
    f = rng.normal(size=(20, 16, 3))
    a = _kernels_py.grid_derivatives(f, 0.1, 0.2)
    b = _kernels.grid_derivatives(f, 0.1, 0.2)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=0, atol=1e-12)


def test_tabulated_chart_needs_container():
    spec = ChartSpec(preset="spherical-cap", n_u=16, n_v=8)
    pos = build_reference_surface(spec).nodes
    with pytest.raises(ConfigError, match="explicit container"):
        build_reference_surface(ChartSpec(n_u=16, n_v=8, positions=pos))


_ENERGY_SNIPPET = """
from contactflow import BACKEND
from contactflow.container_coords import build_curvilinear_map
from contactflow.perturbed_geometry import HeightField, evaluate
from contactflow.surface_core import ChartSpec, build_reference_surface
spec = ChartSpec(preset="perturbed-cap", n_u=32, n_v=16)
cmap = build_curvilinear_map(build_reference_surface(spec))
q = evaluate(HeightField(spec.initial_height(), cmap))
print(BACKEND, repr(q.energy("willmore", 0.3, 1.0)))
"""


def test_python_fallback_matches_default_backend():
    import os
    import subprocess
    import sys

    vals = {}
    for forced in ("python", ""):
        env = dict(os.environ, CONTACTFLOW_BACKEND=forced)
        out = subprocess.run([sys.executable, "-c", _ENERGY_SNIPPET], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        vals[out[0]] = float(out[1])
    assert "python" in vals
    ref = vals["python"]
    assert all(abs(v - ref) <= 1e-12 * abs(ref) for v in vals.values())


def test_frames_are_unit_and_gradient_is_tangent(make_chart):
    from contactflow.surface_core import surface_gradient

    surf = make_chart("spherical-cap", 64, alpha=2 * math.pi / 3).surface
    fr = surf.frames
    for vec in (fr.tau, fr.conormal, fr.normal, fr.wall_normal, fr.wall_conormal):
        assert np.abs(np.linalg.norm(vec, axis=1) - 1.0).max() < 1e-10
    field = np.cos(surf.nodes[..., 0]) * surf.nodes[..., 1]
    grad = surface_gradient(surf, field)
    assert np.abs(np.einsum("ijk,ijk->ij", grad, surf.normal)).max() < 1e-10
    assert np.abs(laplace_beltrami(surf, np.full(field.shape, 3.0))).max() < 1e-10
