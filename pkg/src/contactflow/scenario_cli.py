"""Command-line entry points, configuration files and output writers.

Configuration files are INI files with the sections ``[surface]``,
``[container]``, ``[flow]`` and ``[output]``; run ``contactflow --help`` for
every key and its default.  Numeric values may be written as plain numbers
or as small arithmetic expressions in ``pi`` (``2*pi/3``).
"""

import argparse
import ast
import configparser
import io
import math
import operator
import os
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from ._backend import BACKEND
from .errors import ConfigError, ContactFlowError, OutputError
from .evolution import DIAGNOSTIC_KEYS, FlowConfig, calibrated_a, run
from .perturbed_geometry import HeightField, evaluate, max_stationarity_residual
from .surface_core import PRESET_NAMES, ChartSpec

CONTAINER_KINDS = ("auto", "half-space", "ball")

# ---------------------------------------------------------------------------
# values
# ---------------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def parse_number(text):
    """Float from a literal or an arithmetic expression in ``pi``."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"not a number: {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ValueError(f"not a number: {text!r}")

    try:
        return float(ev(tree))
    except ZeroDivisionError as exc:
        raise ValueError(f"division by zero in {text!r}") from exc


def _parse_int(text):
    value = parse_number(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_float(text):
    return None if text.strip().lower() in ("", "none", "default") else parse_number(text)


def _parse_a(text):
    return "calibrated" if text.strip().lower() == "calibrated" else parse_number(text)


def _parse_center(text):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ValueError(f"center needs three coordinates, got {text!r}")
    return tuple(parse_number(p) for p in parts)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if value is None:
        return "none"
    return str(value)


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

# section -> key -> (parser, default, help)
SCHEMA = {
    "surface": {
        "preset": (str, "spherical-cap", f"one of {', '.join(PRESET_NAMES)}"),
        "n_u": (_parse_int, 128, "grid columns around the contact curve (even, >= 8)"),
        "n_v": (_parse_int, 64, "grid rows from the pole to the contact curve (>= 8)"),
        "radius": (parse_number, 1.0, "sphere radius (caps) or disk radius (flat disk)"),
        "alpha": (parse_number, math.pi / 2, "contact angle of the cap, 0 < alpha < pi"),
        "height": (parse_number, 0.5, "height of the flat disk above the ball centre"),
        "perturbation_amplitude": (_parse_optional_float, None,
                                   "amplitude of the initial bump (none: 0.02 for perturbed-cap, else 0)"),
        "perturbation_mode": (_parse_int, 3, "angular mode of the initial bump"),
        "perturbation_phase": (parse_number, 0.0, "phase of the initial bump (overridden by --seed)"),
    },
    "container": {
        "kind": (str, "auto", "auto (the preset's own wall), half-space or ball"),
        "height": (parse_number, 0.0, "half-space: height of the wall plane"),
        "radius": (parse_number, 1.0, "ball: radius"),
        "center": (_parse_center, (0.0, 0.0, 0.0), "ball: centre as three numbers"),
    },
    "flow": {
        "kind": (str, "mcf", "mcf (volume preserving) or willmore"),
        "a": (_parse_a, "calibrated", "wall tension, or 'calibrated' to balance the start surface"),
        "b": (parse_number, 1.0, "line tension, b > 0"),
        "dt": (parse_number, 1e-3, "time step"),
        "T": (parse_number, 0.1, "final time"),
        "picard_sweeps": (_parse_int, 1, "extra fixed-point sweeps per step"),
        "picard_tol": (parse_number, 1e-12, "relative increment that ends the sweeps early"),
        "tube_safety": (parse_number, 0.9, "fraction of the admissible tube heights may use"),
        "cadence": (_parse_int, 1, "record diagnostics every this many steps"),
        "max_halvings": (_parse_int, 5, "step-size halvings tried before giving up"),
        "correct": (_parse_bool, True, "subtract the reference-surface discretization defect"),
        "compatibility_tol": (parse_number, 5e-2, "willmore: allowed |H| on the contact curve at t=0"),
    },
    "output": {
        "diagnostics": (str, "diagnostics.csv", "name of the diagnostics table"),
        "mesh_prefix": (str, "surface", "prefix of the OBJ snapshots"),
        "snapshot_every": (_parse_int, 0, "write a mesh every this many samples (0: first and last)"),
    },
}

MANIFEST_SECTION = "manifest"


@dataclass(frozen=True)
class ContainerSpec:
    kind: str = "auto"
    height: float = 0.0
    radius: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)

    def build(self):
        from .containers import make_container

        if self.kind == "auto":
            return None
        if self.kind == "half-space":
            return make_container("half-space", height=self.height)
        return make_container("ball", radius=self.radius, center=self.center)


@dataclass(frozen=True)
class OutputSpec:
    diagnostics: str = "diagnostics.csv"
    mesh_prefix: str = "surface"
    snapshot_every: int = 0


@dataclass(frozen=True)
class RunConfig:
    surface: ChartSpec = field(default_factory=ChartSpec)
    container: ContainerSpec = field(default_factory=ContainerSpec)
    flow: FlowConfig = field(default_factory=FlowConfig)
    a_mode: str = "calibrated"
    output: OutputSpec = field(default_factory=OutputSpec)

    def validate(self):
        self.surface.validate()
        if self.container.kind not in CONTAINER_KINDS:
            raise ConfigError(f"container.kind: must be one of {CONTAINER_KINDS}")
        if self.container.kind == "ball" and not self.container.radius > 0:
            raise ConfigError("container.radius: must be > 0")
        self.flow.validate()
        if self.output.snapshot_every < 0:
            raise ConfigError("output.snapshot_every: must be >= 0")
        for name in (self.output.diagnostics, self.output.mesh_prefix):
            if not name or os.sep in name:
                raise ConfigError(f"output: {name!r} must be a plain file name")
        return self


def _section_values(cfg):
    s, c, f, o = cfg.surface, cfg.container, cfg.flow, cfg.output
    return {
        "surface": {k: getattr(s, k) for k in SCHEMA["surface"]},
        "container": {k: getattr(c, k) for k in SCHEMA["container"]},
        "flow": {**{k: getattr(f, k) for k in SCHEMA["flow"] if k != "a"},
                 "a": cfg.a_mode if cfg.a_mode == "calibrated" else f.a},
        "output": {k: getattr(o, k) for k in SCHEMA["output"]},
    }


def config_text(cfg, extra=None):
    """Resolved configuration as INI text; ``extra`` adds a manifest section."""
    lines = []
    values = _section_values(cfg)
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(values[section][key])}")
        lines.append("")
    if extra:
        lines.append(f"[{MANIFEST_SECTION}]")
        for key, val in extra.items():
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)


def parse_config_text(text, source="<config>"):
    """Parse INI text into a validated :class:`RunConfig`."""
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section == MANIFEST_SECTION:
            continue
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]; expected {list(SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(
                    f"{source}: unknown key {key!r} in [{section}]; allowed: {sorted(SCHEMA[section])}"
                )
            conv = SCHEMA[section][key][0]
            try:
                values[(section, key)] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: [{section}] {key}: {exc}") from exc

    def get(section, key):
        return values.get((section, key), SCHEMA[section][key][1])

    alpha = get("surface", "alpha")
    if not 0.0 < alpha < math.pi:
        raise ConfigError(f"alpha: angle assumption 0 < alpha < pi violated (alpha = {alpha!r})")
    b = get("flow", "b")
    if not b > 0:
        raise ConfigError(f"b: line tension must satisfy b > 0 (b = {b!r})")
    surface = ChartSpec(**{k: get("surface", k) for k in SCHEMA["surface"]})
    container = ContainerSpec(**{k: get("container", k) for k in SCHEMA["container"]})
    a = get("flow", "a")
    a_mode = "calibrated" if a == "calibrated" else "fixed"
    flow = FlowConfig(a=0.0 if a_mode == "calibrated" else a,
                      **{k: get("flow", k) for k in SCHEMA["flow"] if k != "a"})
    output = OutputSpec(**{k: get("output", k) for k in SCHEMA["output"]})
    return RunConfig(surface, container, flow, a_mode, output).validate()


def parse_config(path):
    """Read and validate a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def schema_help():
    out = ["configuration keys (defaults in brackets):"]
    for section, keys in SCHEMA.items():
        out.append(f"  [{section}]")
        for key, (_, default, doc) in keys.items():
            out.append(f"    {key} [{_fmt(default)}]: {doc}")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# building and writing
# ---------------------------------------------------------------------------


def build_map(cfg):
    from .container_coords import build_curvilinear_map
    from .surface_core import build_reference_surface

    surface = build_reference_surface(cfg.surface, container=cfg.container.build())
    return build_curvilinear_map(surface)


def resolve_a(cfg, cmap):
    if cfg.a_mode == "calibrated":
        return calibrated_a(cfg.flow.kind, cmap, cfg.flow.b, cfg.flow.correct)
    return cfg.flow.a


def diagnostics_csv(traj):
    buf = io.StringIO()
    buf.write(",".join(DIAGNOSTIC_KEYS) + "\n")
    cols = [traj.diagnostics[k] for k in DIAGNOSTIC_KEYS]
    for row in zip(*cols):
        cells = [str(int(v)) if k == "picard_iters" else f"{float(v):.17g}"
                 for k, v in zip(DIAGNOSTIC_KEYS, row)]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def mesh_vertices(rho):
    """Node positions in grid-major order followed by one pole vertex.

    The pole value is the axisymmetric part of the first two rings
    extrapolated quadratically in ``s`` to ``s = 0``.
    """
    cmap = rho.map
    g = cmap.grid
    pos = cmap.positions(rho.extended(), check_tube=False)[: g.n_v]
    surface = cmap.surface
    if surface.preset is not None:
        base = surface.preset.positions(np.array([0.0]), np.array([0.0]))[0, 0]
    else:
        base = surface.nodes[0].mean(axis=0)
    normal = evaluate(HeightField.zeros(cmap), correct=False, check_tube=False).normal[0].mean(axis=0)
    normal /= np.linalg.norm(normal)
    vals = rho.values
    pole_height = (9.0 * vals[0].mean() - vals[1].mean()) / 8.0
    pole = base + pole_height * normal
    return np.concatenate([pos.reshape(-1, 3), pole[None]], axis=0)


def mesh_faces(grid, orientation=1):
    """Triangles of the structured grid, 0-based, pole fan included."""
    nu, nv = grid.n_u, grid.n_v
    pole = nu * nv
    faces = []
    for j in range(nu):
        faces.append((pole, j, (j + 1) % nu))
    for r in range(nv - 1):
        for j in range(nu):
            a, b = r * nu + j, r * nu + (j + 1) % nu
            c, d = a + nu, b + nu
            faces.append((a, c, d))
            faces.append((a, d, b))
    faces = np.asarray(faces, dtype=np.int64)
    return faces if orientation > 0 else faces[:, ::-1]


def snapshot_obj(rho):
    g = rho.map.grid
    verts = mesh_vertices(rho)
    faces = mesh_faces(g, rho.map.surface.orientation)
    out = io.StringIO()
    out.write("# contactflow surface snapshot\n")
    out.write(f"# t = {float(rho.time):.17g}\n")
    out.write(f"# grid n_u = {g.n_u}, n_v = {g.n_v}; last vertex is the pole\n")
    out.write(f"# vertices = {len(verts)}, faces = {len(faces)}\n")
    for v in verts:
        out.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
    for f in faces + 1:
        out.write(f"f {f[0]} {f[1]} {f[2]}\n")
    return out.getvalue()


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def emit_diagnostics(traj, path):
    if not traj.times:
        raise OutputError("empty trajectory")
    _write(path, diagnostics_csv(traj))


def emit_snapshot(rho, path):
    _write(path, snapshot_obj(rho))


def manifest_extra(cfg, a_value, seed=None):
    extra = {
        "version": __version__,
        "backend": BACKEND,
        "preset": cfg.surface.preset,
        "grid": f"{cfg.surface.n_u}x{cfg.surface.n_v}",
        "a_resolved": repr(float(a_value)) if a_value is not None else "pending",
    }
    if seed is not None:
        extra["seed"] = str(seed)
    return extra


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _load(args):
    cfg = parse_config(args.config) if args.config else RunConfig().validate()
    if getattr(args, "preset", None):
        cfg = replace(cfg, surface=replace(cfg.surface, preset=args.preset))
    if getattr(args, "seed", None) is not None:
        phase = float(np.random.default_rng(args.seed).uniform(0.0, 2.0 * math.pi))
        cfg = replace(cfg, surface=replace(cfg.surface, perturbation_phase=phase))
    return cfg.validate()


def cmd_simulate(args):
    cfg = _load(args)
    out = args.out
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    manifest_path = os.path.join(out, "manifest.ini")
    _write(manifest_path, config_text(cfg, manifest_extra(cfg, None, args.seed)))
    cmap = build_map(cfg)
    a = resolve_a(cfg, cmap)
    _write(manifest_path, config_text(cfg, manifest_extra(cfg, a, args.seed)))
    flow = replace(cfg.flow, a=a)
    rho0 = HeightField(cfg.surface.initial_height(), cmap, 0.0)
    traj = run(flow, rho0)
    emit_diagnostics(traj, os.path.join(out, cfg.output.diagnostics))
    every = cfg.output.snapshot_every
    last = len(traj.heights) - 1
    for i, rho in enumerate(traj.heights):
        if i in (0, last) or (every and i % every == 0):
            emit_snapshot(rho, os.path.join(out, f"{cfg.output.mesh_prefix}_{i:05d}.obj"))
    print(f"wrote {len(traj.times)} samples to {out}")
    return 0


def cmd_linearize_check(args):
    from .linearization import LEMMA_IDS, fd_verify, smooth_variation

    cfg = _load(args)
    cmap = build_map(cfg)
    lemmas = args.lemma or list(LEMMA_IDS)
    buf = io.StringIO()
    buf.write("lemma,eps,error,slope\n")
    failed = []
    for lemma in lemmas:
        if lemma not in LEMMA_IDS:
            raise ConfigError(f"unknown linearization id {lemma!r}; expected one of {LEMMA_IDS}")
        rep = fd_verify(lemma, smooth_variation, cmap, refine=args.refine)
        for lem, eps, err, slope in rep.rows():
            buf.write(f"{lem},{eps:.17g},{err:.17g},{slope:.17g}\n")
        status = "PASS" if rep.passed() else "FAIL"
        if status == "FAIL":
            failed.append(lemma)
        print(f"{status} {lemma}", file=sys.stderr)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "linearization.csv"), buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 1 if failed else 0


def cmd_symbol_check(args):
    from .symbol_analysis import SymbolScanConfig, ellipticity_check, ls_scan

    kinds = ("mcf", "willmore") if args.flow == "both" else (args.flow,)
    ok = True
    for kind in kinds:
        ell = ellipticity_check(kind)
        print(f"{'PASS' if ell.passed else 'FAIL'} ellipticity {kind}: spectrum "
              f"{{{', '.join(str(v) for v in sorted(ell.spectrum))}}} max deviation {ell.max_deviation}")
        ok = ok and ell.passed
        for b in args.b:
            cert = ls_scan(kind, SymbolScanConfig(b=b, coefficients=args.coefficients))
            for line in cert.lines():
                print(line)
            ok = ok and cert.passed
    return 0 if ok else 1


def cmd_energy_report(args):
    cfg = _load(args)
    cmap = build_map(cfg)
    rho = HeightField(cfg.surface.initial_height(), cmap, 0.0)
    q = evaluate(rho, correct=cfg.flow.correct)
    b = cfg.flow.b
    print(f"preset: {cfg.surface.preset}  grid: {cfg.surface.n_u}x{cfg.surface.n_v}")
    for kind, energy_kind in (("mcf", "capillary"), ("willmore", "willmore")):
        a = (calibrated_a(kind, cmap, b, cfg.flow.correct) if cfg.a_mode == "calibrated"
             else cfg.flow.a)
        print(f"{kind}: a = {a:.17g}  energy = {q.energy(energy_kind, a, b):.17g}  "
              f"stationarity_residual = {max_stationarity_residual(q, kind, a, b):.17g}")
    print(f"volume = {q.volume:.17g}")
    print(f"area = {q.area:.17g}")
    print(f"boundary_length = {q.boundary_length:.17g}")
    print(f"mean_H = {q.mean_H:.17g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="contactflow",
        description="Capillary and bending flows of surfaces with a moving contact line.",
        epilog=schema_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--config", metavar="PATH", help="configuration file (INI)")
        p.add_argument("--preset", metavar="NAME", choices=PRESET_NAMES, help="override [surface] preset")
        p.add_argument("--seed", metavar="N", type=int, help="draw the perturbation phase from this seed")
        p.add_argument("--out", metavar="DIR", default=out_default, help="output directory")

    p = sub.add_parser("simulate", help="run a flow and write diagnostics and meshes",
                       epilog=schema_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p, "out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("linearize-check", help="finite-difference check of every linearization")
    common(p)
    p.add_argument("--lemma", action="append", help="linearization id (repeatable; default all)")
    p.add_argument("--refine", type=int, default=2, help="grid refinements for the error estimate")
    p.set_defaults(func=cmd_linearize_check)

    p = sub.add_parser("symbol-check", help="ellipticity and complementing-condition scans")
    p.add_argument("--flow", choices=("mcf", "willmore", "both"), default="both")
    p.add_argument("--b", type=float, action="append", help="line tension (repeatable; default 0.1 1 10)")
    p.add_argument("--coefficients", choices=("stated", "derived"), default="stated")
    p.set_defaults(func=cmd_symbol_check)

    p = sub.add_parser("energy-report", help="energies, volume and residuals without stepping")
    common(p)
    p.set_defaults(func=cmd_energy_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "b", None) is None and args.command == "symbol-check":
        args.b = [0.1, 1.0, 10.0]
    try:
        return args.func(args)
    except ContactFlowError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
