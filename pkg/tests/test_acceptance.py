"""Acceptance criteria A1-A8.

Each test appends one ``A<k> PASS|FAIL ...`` line that is printed in the
terminal summary of the pytest run.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, chart
from contactflow.container_coords import cross_relation_check, dw_psi_at_zero
from contactflow.evolution import FlowConfig, calibrated_a, run
from contactflow.linearization import LEMMA_IDS, fd_verify, smooth_variation
from contactflow.perturbed_geometry import (
    HeightField,
    first_variation_check,
    random_feasible_field,
)
from contactflow.scenario_cli import RunConfig, config_text, parse_config_text
from contactflow.symbol_analysis import SymbolScanConfig, ellipticity_check, ls_scan

ROUNDOFF = 1e-9
_runs = {}


def record(label, ok, detail):
    ACCEPTANCE_LINES.append(f"{label} {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def _dot(x, y):
    return np.einsum("ki,ki->k", x, y)


# ---------------------------------------------------------------------------


def test_A1_frame_and_angle_identities():
    t0 = time.perf_counter()
    presets = [("flat-disk", math.pi / 2), ("spherical-cap", math.pi / 2), ("spherical-cap", 2 * math.pi / 3)]
    worst_pointwise = 0.0
    orders_ok = True
    worst_order = math.inf
    for preset, alpha in presets:
        residuals = []
        for n_u in (64, 128, 256):
            cmap = chart(preset, n_u, alpha=alpha)
            fr = cmap.surface.frames
            b = cmap.grid.boundary_row
            dw = dw_psi_at_zero(cmap)[b]
            if n_u == 128:
                cot = fr.cos_alpha / fr.sin_alpha
                checks = [
                    _dot(fr.normal, fr.wall_normal) - fr.cos_alpha,
                    _dot(fr.wall_normal, fr.conormal) - fr.sin_alpha,
                    _dot(fr.wall_conormal, fr.conormal) + fr.cos_alpha,
                    _dot(dw, fr.tau),
                    _dot(dw, fr.conormal) + cot,
                    _dot(dw, fr.normal) - 1.0,
                    _dot(dw, fr.wall_normal),
                    _dot(dw, fr.wall_conormal) - 1.0 / fr.sin_alpha,
                ]
                worst_pointwise = max(worst_pointwise, max(float(np.abs(c).max()) for c in checks))
            residuals.append(cross_relation_check(cmap))
        for key in residuals[0]:
            seq = [r[key] for r in residuals]
            if max(seq) <= ROUNDOFF:
                continue
            order = min(math.log2(seq[i] / seq[i + 1]) for i in range(2))
            worst_order = min(worst_order, order)
            orders_ok = orders_ok and order >= 2.0
    elapsed = time.perf_counter() - t0
    ok = worst_pointwise <= 1e-8 and orders_ok and elapsed < 10.0
    record("A1", ok, f"pointwise max {worst_pointwise:.2e}; cross-identity min order "
                     f"{worst_order:.2f} (others at round-off); {elapsed:.1f}s")
    assert ok


A2_PRESETS = [("spherical-cap", math.pi / 2), ("spherical-cap", 2 * math.pi / 3),
              ("spherical-cap", math.pi / 4), ("flat-disk", math.pi / 2)]


def test_A2_linearization_oracle():
    t0 = time.perf_counter()
    failures = []
    slopes = []
    exact_err = 0.0
    for preset, alpha in A2_PRESETS:
        cmap = chart(preset, 64, alpha=alpha)
        for lemma in LEMMA_IDS:
            rep = fd_verify(lemma, smooth_variation, cmap, eps=(1e-2, 5e-3, 2.5e-3), refine=2)
            if rep.exact:
                exact_err = max(exact_err, max(rep.errors))
            else:
                slopes.append(rep.slope)
            if not rep.passed():
                failures.append(f"{preset}/{alpha:.3f}/{lemma}")
    elapsed = time.perf_counter() - t0
    ok = not failures and exact_err <= 1e-12 and elapsed < 60.0
    record("A2", ok, f"{len(A2_PRESETS) * len(LEMMA_IDS)} checks, slopes in "
                     f"[{min(slopes):.3f}, {max(slopes):.3f}], velocity ids exact to {exact_err:.1e}; "
                     f"failures {failures or 'none'}; {elapsed:.1f}s")
    assert ok


def test_A3_symbol_certificates():
    t0 = time.perf_counter()
    ell = {k: ellipticity_check(k) for k in ("mcf", "willmore")}
    ell_ok = all(r.passed for r in ell.values())
    alphas = (math.pi / 6, math.pi / 4, math.pi / 2, 3 * math.pi / 4, 5 * math.pi / 6)
    failed = []
    for kind in ("mcf", "willmore"):
        for b in (0.1, 1.0, 10.0):
            for coeffs in ("stated", "derived"):
                cert = ls_scan(kind, SymbolScanConfig(alphas=alphas, b=b, floor=1e-3, coefficients=coeffs))
                if not cert.passed:
                    failed.append(f"{kind}/b={b}/{coeffs}")
    elapsed = time.perf_counter() - t0
    ok = ell_ok and not failed and elapsed < 30.0
    record("A3", ok, f"ellipticity spectra {{1}} with deviation 0: {ell_ok}; "
                     f"LS scans failed: {failed or 'none'}; {elapsed:.1f}s")
    assert ok


def _perturbed_cap_run(dt):
    key = ("mcf", dt)
    if key not in _runs:
        cmap = chart("perturbed-cap", 128, amplitude=0.02)
        a = calibrated_a("mcf", cmap, 1.0)
        rho0 = HeightField(cmap.surface.spec.initial_height(), cmap)
        _runs[key] = run(FlowConfig(kind="mcf", a=a, b=1.0, dt=dt, T=0.1), rho0)
    return _runs[key]


def test_A4_volume_conservation():
    t0 = time.perf_counter()
    drifts = []
    for dt in (1e-3, 5e-4):
        vol = _perturbed_cap_run(dt).column("volume")
        drifts.append(abs(vol[-1] - vol[0]) / abs(vol[0]))
    ratio = drifts[0] / drifts[1]
    elapsed = time.perf_counter() - t0
    ok = drifts[0] <= 1e-3 and 2.0 * 0.7 <= ratio <= 2.0 * 1.3 and elapsed < 120.0
    record("A4", ok, f"relative drift {drifts[0]:.2e} (dt=1e-3), {drifts[1]:.2e} (dt=5e-4), "
                     f"ratio {ratio:.2f}; {elapsed:.1f}s")
    assert ok


def _stationary_a(cmap, kind, b=1.0):
    fr = cmap.surface.frames
    if kind == "mcf":
        return float(np.mean(-b * fr.geodesic_curvature - fr.cos_alpha))
    return float(np.mean(-b * fr.geodesic_curvature))


def test_A5_stationary_fixed_points():
    details = []
    ok = True
    for label, preset, kind, T in (("cap/mcf", "spherical-cap", "mcf", 1.0),
                                   ("disk/willmore", "flat-disk", "willmore", 0.5)):
        t0 = time.perf_counter()
        cmap = chart(preset, 128)
        cfg = FlowConfig(kind=kind, a=_stationary_a(cmap, kind), b=1.0, dt=1e-3, T=T, cadence=100)
        traj = run(cfg, HeightField.zeros(cmap))
        peak = max(float(np.abs(h.values).max()) for h in traj.heights)
        elapsed = time.perf_counter() - t0
        ok = ok and peak <= 1e-6 and elapsed < 120.0
        details.append(f"{label} max|rho| {peak:.1e} in {elapsed:.1f}s")
    record("A5", ok, "; ".join(details))
    assert ok


def _perturbed_disk_willmore():
    if "willmore" not in _runs:
        cmap = chart("flat-disk", 128, amplitude=0.02)
        rho0 = HeightField(cmap.surface.spec.initial_height(), cmap)
        cfg = FlowConfig(kind="willmore", a=_stationary_a(cmap, "willmore"), b=1.0, dt=1e-3, T=0.5)
        _runs["willmore"] = run(cfg, rho0)
    return _runs["willmore"]


def test_A6_energy_dissipation():
    rises = {}
    for label, traj in (("mcf", _perturbed_cap_run(1e-3)), ("mcf dt/2", _perturbed_cap_run(5e-4)),
                        ("willmore", _perturbed_disk_willmore())):
        e = traj.column("energy")
        rises[label] = float(np.max(np.diff(e)))
    ok = all(r <= 1e-8 for r in rises.values())
    record("A6", ok, "largest per-step energy change: "
           + ", ".join(f"{k} {v:.2e}" for k, v in rises.items()))
    assert ok


def test_A7_first_variations():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20261016)
    cases = (("capillary", "perturbed-cap"), ("willmore", "perturbed-cap"), ("willmore", "flat-disk"))
    worst_rel, slopes, ok = 0.0, [], True
    for kind, preset in cases:
        cmap = chart(preset, 256, amplitude=0.02)
        rho = HeightField(cmap.surface.spec.initial_height(), cmap)
        for _ in range(5):
            chk = first_variation_check(rho, random_feasible_field(rho, rng), kind, a=0.3, b=1.0)
            worst_rel = max(worst_rel, chk.relative_mismatch)
            slopes.append(chk.slope)
            ok = ok and chk.passed()
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    record("A7", ok, f"15 fields, slopes in [{min(slopes):.3f}, {max(slopes):.3f}], "
                     f"max relative mismatch {worst_rel:.1e}; {elapsed:.1f}s")
    assert ok


def _simulate(config_path, out_dir):
    cmd = [sys.executable, "-m", "contactflow.scenario_cli", "simulate", "--config", config_path,
           "--out", out_dir]
    subprocess.run(cmd, check=True, capture_output=True, text=True)


def test_A8_determinism_and_round_trip(tmp_path):
    cfg_path = tmp_path / "run.ini"
    cfg_path.write_text("[surface]\npreset = perturbed-cap\nn_u = 32\nn_v = 16\n"
                        "[flow]\nkind = mcf\ndt = 1e-3\nT = 0.01\n[output]\nsnapshot_every = 5\n")
    first = tmp_path / "first"
    _simulate(str(cfg_path), str(first))
    outs = []
    for name in ("second", "third"):
        out = tmp_path / name
        _simulate(str(first / "manifest.ini"), str(out))
        outs.append(out)
    files = sorted(os.listdir(first))
    identical = all((first / f).read_bytes() == (o / f).read_bytes() for o in outs for f in files)
    identical = identical and all(sorted(os.listdir(o)) == files for o in outs)

    configs = [RunConfig().validate(),
               parse_config_text("[surface]\npreset = flat-disk\nalpha = 2*pi/3\n[flow]\nkind = willmore\n"
                                 "a = 0.1\nb = 0.25\n[container]\nkind = ball\nradius = 1.25\n"),
               parse_config_text("[flow]\ndt = 1/3\ncorrect = false\n")]
    round_trip = all(parse_config_text(config_text(c)) == c for c in configs)
    ok = identical and round_trip
    record("A8", ok, f"{len(files)} output files byte-identical across 3 runs: {identical}; "
                     f"config round-trip identity: {round_trip}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
