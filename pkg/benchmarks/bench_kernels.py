"""Compare the compiled grid kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 64 128 256] [--repeat 5]

For each grid size it times the three kernels on a spherical-cap chart,
checks that both implementations agree, and times one full nonlinear
evaluation of the surface under each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from contactflow import _kernels_py
from contactflow.surface_core import ParameterGrid, field_derivatives
from contactflow.presets import SphericalCap

try:
    from contactflow import _kernels as compiled
except ImportError:
    compiled = None


def kernel_inputs(n_u):
    grid = ParameterGrid(n_u, n_u // 2)
    cap = SphericalCap(alpha=2.0)
    pos = cap.positions(grid.s_rows(grid.n_v + 1), grid.theta)
    derivs = field_derivatives(pos, grid)
    fields = _kernels_py.surface_fields(*derivs, 1.0)
    f = np.ascontiguousarray(pos[..., 2:3] ** 2)
    scal = [d[..., 0] for d in _kernels_py.grid_derivatives(f, grid.ds, grid.dtheta)]
    lap_args = [fields[k] for k in ("gss", "gst", "gtt", "cs", "ct")] + scal
    return grid, pos, derivs, lap_args


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def eval_time(backend, n_u, repeat):
    code = (
        "import timeit\n"
        "from contactflow.surface_core import ChartSpec, build_reference_surface\n"
        "from contactflow.container_coords import build_curvilinear_map\n"
        "from contactflow.perturbed_geometry import HeightField, evaluate\n"
        f"spec = ChartSpec(preset='perturbed-cap', n_u={n_u}, n_v={n_u // 2})\n"
        "cmap = build_curvilinear_map(build_reference_surface(spec))\n"
        "rho = HeightField(spec.initial_height(), cmap)\n"
        f"print(min(timeit.repeat(lambda: evaluate(rho), number=1, repeat={repeat})))\n"
    )
    env = dict(os.environ, CONTACTFLOW_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernels are not built; only the numpy timings are shown")
    print(f"{'kernel':18s} {'n_u':>5s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s} {'max diff':>10s}")
    for n_u in args.sizes:
        grid, pos, derivs, lap_args = kernel_inputs(n_u)
        cases = {
            "grid_derivatives": lambda m: m.grid_derivatives(pos, grid.ds, grid.dtheta),
            "surface_fields": lambda m: m.surface_fields(*derivs, 1.0),
            "laplace_apply": lambda m: m.laplace_apply(*lap_args),
        }
        for name, call in cases.items():
            t_py = best(lambda: call(_kernels_py), args.repeat)
            if compiled is None:
                print(f"{name:18s} {n_u:5d} {1e3 * t_py:10.3f}")
                continue
            t_c = best(lambda: call(compiled), args.repeat)
            a, b = call(_kernels_py), call(compiled)
            if isinstance(a, dict):
                diff = max(float(np.max(np.abs(np.asarray(a[k]) - np.asarray(b[k])))) for k in a)
            elif isinstance(a, tuple):
                diff = max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
            else:
                diff = float(np.max(np.abs(a - b)))
            print(f"{name:18s} {n_u:5d} {1e3 * t_py:10.3f} {1e3 * t_c:10.3f} {t_py / t_c:8.2f} {diff:10.2e}")
    print()
    print(f"{'evaluate()':18s} {'n_u':>5s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for n_u in args.sizes:
        t_py = eval_time("python", n_u, args.repeat)
        if compiled is None:
            print(f"{'evaluate':18s} {n_u:5d} {1e3 * t_py:10.3f}")
            continue
        t_c = eval_time("cython", n_u, args.repeat)
        print(f"{'evaluate':18s} {n_u:5d} {1e3 * t_py:10.3f} {1e3 * t_c:10.3f} {t_py / t_c:8.2f}")


if __name__ == "__main__":
    main()
