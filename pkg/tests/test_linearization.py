import math

import numpy as np
import pytest

from contactflow.errors import ConfigError
from contactflow.flows import colored_jacobian, dependency_pattern, greedy_coloring
from contactflow.linearization import (
    LEMMA_IDS,
    assemble,
    fd_verify,
    linearized_quantity,
    reference_operators,
    smooth_variation,
)
from contactflow.perturbed_geometry import HeightField
from contactflow.surface_core import smoothstep_cutoff


def _bump(grid, shift):
    s = grid.s[:, None]
    x, y = s * np.cos(grid.theta)[None], s * np.sin(grid.theta)[None]
    r = np.hypot(x - shift, y)
    return smoothstep_cutoff(r - 0.1, 0.4) * (1.0 + x * y)


def test_weighted_laplacian_symmetric_up_to_second_order(make_chart):
    asym = []
    for n in (64, 128, 256):
        cmap = make_chart("flat-disk", n)
        ops = reference_operators(cmap)
        lap = (ops.laplace @ ops.extend).tocsr()
        f, g = _bump(cmap.grid, 0.2).ravel(), _bump(cmap.grid, -0.1).ravel()
        w = ops.weights.ravel()
        asym.append(abs(g @ (w * (lap @ f)) - f @ (w * (lap @ g))))
    assert asym[-1] < 1e-4
    assert math.log2(asym[0] / asym[1]) > 1.8
    assert math.log2(asym[1] / asym[2]) > 1.9


def test_flat_disk_zeroth_order_vanishes(make_chart):
    ops = reference_operators(make_chart("flat-disk", 32))
    assert np.abs(ops.sigma2).max() < 1e-12


def test_hemisphere_zeroth_order_is_two(make_chart):
    ops = reference_operators(make_chart("spherical-cap", 64))
    assert np.abs(ops.sigma2 - 2.0).max() < 1e-2


def test_assemble_rejects_nonpositive_tension(make_chart):
    with pytest.raises(ConfigError, match="b > 0"):
        assemble("mcf", cmap=make_chart("spherical-cap", 32), b=-1.0)


def test_assemble_needs_map():
    with pytest.raises(ConfigError):
        assemble("mcf")


@pytest.mark.parametrize("kind", ["mcf", "willmore"])
def test_assembled_blocks_have_expected_shapes(make_chart, kind):
    cmap = make_chart("spherical-cap", 32)
    sys = assemble(kind, cmap=cmap, a=1.0, b=1.0)
    g = cmap.grid
    rows = g.n_v if kind == "mcf" else g.n_v + 1
    assert sys.size == rows * g.n_u
    assert sys.jacobian.shape == (sys.size, sys.size)
    assert np.all(np.isfinite(sys.jacobian.data))


def test_colored_jacobian_is_exact_for_quadratics():
    n = 12
    pattern = dependency_pattern(2, 6, radius=1)
    colors = greedy_coloring(pattern)
    rng = np.random.default_rng(5)
    A = pattern.toarray() * rng.normal(size=(n, n))
    x0 = rng.normal(size=n)

    def fun(x):
        return A @ x + 0.5 * (A @ x) ** 2

    jac = colored_jacobian(fun, x0, pattern, colors).toarray()
    exact = (1.0 + A @ x0)[:, None] * A
    assert np.abs(jac - exact).max() < 1e-8


def test_coloring_separates_structurally_overlapping_columns():
    pattern = dependency_pattern(4, 8)
    colors = greedy_coloring(pattern)
    dense = pattern.toarray()
    for k in range(colors.max() + 1):
        cols = dense[:, colors == k]
        assert cols.sum(axis=1).max() <= 1


def test_unknown_lemma_rejected(make_chart):
    with pytest.raises(ConfigError, match="unknown linearization id"):
        fd_verify("nope", smooth_variation, make_chart("spherical-cap", 32))


@pytest.mark.parametrize("lemma", LEMMA_IDS)
def test_each_linearization_on_obtuse_cap(make_chart, lemma):
    rep = fd_verify(lemma, smooth_variation, make_chart("spherical-cap", 64, alpha=2 * math.pi / 3), refine=1)
    assert rep.passed(), rep


def test_linearized_velocity_is_exact(make_chart):
    cmap = make_chart("spherical-cap", 32)
    rho = HeightField(smooth_variation(cmap.grid.s, cmap.grid.theta), cmap)
    lin = np.asarray(linearized_quantity("normal_velocity", rho, cmap))
    assert np.allclose(lin, rho.values, atol=1e-14)


def test_average_curvature_of_constant_rate_on_hemisphere(make_chart):
    cmap = make_chart("spherical-cap", 64)
    ones = HeightField(np.ones((cmap.grid.n_v, cmap.grid.n_u)), cmap)
    assert float(linearized_quantity("mean_curvature_average", ones, cmap)) == pytest.approx(2.0, abs=1e-2)
