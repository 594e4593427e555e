import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactflow.errors import ConfigError
from contactflow.symbol_analysis import (
    DegenerateSampleError,
    SymbolScanConfig,
    degenerate_residual,
    ellipticity_check,
    ls_infinity_residual,
    ls_residual_mcf,
    ls_residual_willmore,
    ls_scan,
    rational_unit_vectors,
    willmore_arg_ranges_hold,
)

HALF_PI = math.pi / 2


def test_mcf_frozen_values():
    assert ls_residual_mcf(1.0, 0.0, HALF_PI, 1.0) == pytest.approx(2.0, abs=1e-15)
    assert ls_residual_mcf(0.0, 1.0, HALF_PI, 1.0) == pytest.approx(2.0, abs=1e-15)


def test_willmore_frozen_values():
    res = ls_residual_willmore(1.0, 1j, HALF_PI, 1.0)
    assert complex(res.L) == pytest.approx(-0.025710757792744385 - 0.239890132428484j, abs=1e-12)
    assert complex(res.R) == pytest.approx(1 + 1j, abs=1e-15)
    assert float(res.gap) == pytest.approx(1.609164410228268, abs=1e-12)
    assert bool(willmore_arg_ranges_hold(res, np.array([1j]))[0])


def test_willmore_left_side_independent_of_root_choice():
    lam = np.array([1j, 2 - 1j, 0.3 + 5j])
    a = ls_residual_willmore(0.7, lam, 1.0, 1.0)
    b = ls_residual_willmore(0.7, lam, 1.0, 1.0, flip_root=True)
    assert np.allclose(a.L, b.L, atol=1e-14)


def test_degenerate_and_infinity_residuals():
    assert degenerate_residual(2.0, HALF_PI, 0.5) == pytest.approx(2.0)
    assert ls_infinity_residual(1j, HALF_PI, 1.0) == pytest.approx(math.sqrt(2))


def test_invalid_samples():
    with pytest.raises(ConfigError):
        ls_residual_mcf(0.0, 0.0, HALF_PI, 1.0)
    with pytest.raises(ConfigError):
        ls_residual_mcf(1.0, -1.0, HALF_PI, 1.0)
    with pytest.raises(DegenerateSampleError):
        ls_residual_willmore(1.0, 0.0, HALF_PI, 1.0)


def test_rational_directions_are_exact_unit_vectors():
    for x, y in rational_unit_vectors(40):
        assert x * x + y * y == 1


@pytest.mark.parametrize("kind", ["mcf", "willmore"])
def test_ellipticity(kind):
    rep = ellipticity_check(kind)
    assert rep.passed and rep.directions == 64


@given(xi=st.one_of(st.just(0.0), st.floats(1e-3, 1e3)), re=st.floats(0.0, 1e3),
       im=st.one_of(st.just(0.0), st.floats(1e-3, 1e3), st.floats(-1e3, -1e-3)),
       alpha=st.floats(0.05, math.pi - 0.05), b=st.floats(0.05, 20.0))
@settings(max_examples=200, deadline=None)
def test_mcf_residual_has_positive_real_part(xi, re, im, alpha, b):
    lam = complex(re, im)
    if abs(xi) + abs(lam) < 1e-3:
        return
    assert ls_residual_mcf(xi, lam, alpha, b).real > 0


@pytest.mark.parametrize("coefficients", ["stated", "derived"])
def test_small_scans_pass(coefficients):
    cfg = SymbolScanConfig(alphas=(math.pi / 3,), b=1.0, xi_count=8, radial_count=8, angle_count=9,
                           coefficients=coefficients)
    for kind in ("mcf", "willmore"):
        cert = ls_scan(kind, cfg)
        assert cert.passed
        assert cert.lines()[-1] == "certificate: PASS"


@pytest.mark.parametrize("kwargs", [dict(alphas=()), dict(alphas=(0.0,)), dict(b=0.0),
                                    dict(xi_range=(1.0, 0.5)), dict(coefficients="other")])
def test_scan_config_validation(kwargs):
    with pytest.raises(ConfigError):
        ls_scan("mcf", SymbolScanConfig(**kwargs))
