"""Discrete differential geometry of the reference surface.

The surface is described by a single polar chart: the periodic angle
``theta`` runs around the contact curve and the radial coordinate ``s`` runs
from the pole (``s = 0``) to the contact curve (``s = 1``).  The public
boundary-to-interior coordinate is ``v = 1 - s``.

Nodes sit at ``s_j = (j + 1/2) ds`` with ``ds = 1/(n_v - 1/2)``, so the pole
is never a node and row ``n_v - 1`` lies exactly on the contact curve.
Stencils that reach below row 0 use row 0 rotated by half a turn.  Rows past
the contact curve are ghost rows: they hold the chart's smooth extension and
make every stencil centered.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ._backend import kernels
from .errors import AngleAssumptionError, ConfigError, DegenerateMetricError
from .presets import fourier_bump, make_preset

PRESET_NAMES = ("flat-disk", "spherical-cap", "perturbed-cap")

SMOOTHSTEP_COEFFS = (126.0, -420.0, 540.0, -315.0, 70.0)


# ---------------------------------------------------------------------------
# grid and stencils
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParameterGrid:
    """Node layout of the polar chart (``n_v`` physical rows, ``n_u`` columns)."""

    n_u: int
    n_v: int

    def __post_init__(self):
        if self.n_u < 8 or self.n_v < 8:
            raise ConfigError("grid sizes must be at least 8 in each direction")
        if self.n_u % 2:
            raise ConfigError("n_u must be even so stencils can cross the pole")

    @property
    def ds(self):
        return 1.0 / (self.n_v - 0.5)

    @property
    def dtheta(self):
        return 2.0 * math.pi / self.n_u

    @property
    def boundary_row(self):
        return self.n_v - 1

    def s_rows(self, count=None):
        count = self.n_v if count is None else count
        return (np.arange(count) + 0.5) * self.ds

    @property
    def s(self):
        return self.s_rows()

    @property
    def v(self):
        return 1.0 - self.s

    @property
    def theta(self):
        return np.arange(self.n_u) * self.dtheta

    @property
    def size(self):
        return self.n_u * self.n_v

    def quadrature_rows(self):
        """Row weights in ``s``: midpoint cells, half cell on the contact curve."""
        c = np.full(self.n_v, self.ds)
        c[-1] = 0.5 * self.ds
        return c


def smoothstep_cutoff(v, width):
    """C^4 cutoff: 1 for ``v <= 0``, 0 for ``v >= width``."""
    x = np.clip(np.asarray(v, dtype=float) / width, 0.0, 1.0)
    poly = np.zeros_like(x)
    for c in reversed(SMOOTHSTEP_COEFFS):
        poly = poly * x + c
    return 1.0 - x ** 5 * poly


def extend_ghost(f):
    """Append one row by cubic extrapolation (realizes one-sided stencils)."""
    f = np.asarray(f, dtype=float)
    ghost = 4.0 * f[-1] - 6.0 * f[-2] + 4.0 * f[-3] - f[-4]
    return np.concatenate([f, ghost[None]], axis=0)


def field_derivatives(f, grid):
    """Derivatives of a scalar or vector field given on ``m + 1`` rows.

    Returns ``(f_s, f_t, f_ss, f_st, f_tt)`` on the first ``m`` rows.
    """
    f = np.asarray(f, dtype=float)
    scalar = f.ndim == 2
    arr = f[..., None] if scalar else f
    out = kernels.grid_derivatives(np.ascontiguousarray(arr), grid.ds, grid.dtheta)
    if scalar:
        return tuple(o[..., 0] for o in out)
    return tuple(out)


def derivative_matrices(rows_in, grid):
    """Sparse versions of :func:`field_derivatives` for scalar fields.

    Maps a field on ``rows_in`` rows (flattened row-major) to derivatives on
    ``rows_in - 1`` rows.  Returns a dict keyed by ``s, t, ss, st, tt``.
    """
    n = grid.n_u
    m = rows_in - 1
    half = n // 2
    ds, dt = grid.ds, grid.dtheta
    ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    out_idx = ii * n + jj
    below_row = np.where(ii == 0, 0, ii - 1)
    below_shift = np.where(ii == 0, half, 0)

    def node(r, c):
        return r * n + (c % n)

    entries = {k: ([], [], []) for k in ("s", "t", "ss", "st", "tt")}

    def add(key, cols, vals):
        r, cidx, v = entries[key]
        r.append(out_idx)
        cidx.append(cols)
        v.append(np.broadcast_to(vals, out_idx.shape))

    up = node(ii + 1, jj)
    mid = node(ii, jj)
    down = node(below_row, jj + below_shift)
    add("s", up, 1.0 / (2 * ds))
    add("s", down, -1.0 / (2 * ds))
    add("ss", up, 1.0 / ds ** 2)
    add("ss", mid, -2.0 / ds ** 2)
    add("ss", down, 1.0 / ds ** 2)
    add("t", node(ii, jj + 1), 1.0 / (2 * dt))
    add("t", node(ii, jj - 1), -1.0 / (2 * dt))
    add("tt", node(ii, jj + 1), 1.0 / dt ** 2)
    add("tt", mid, -2.0 / dt ** 2)
    add("tt", node(ii, jj - 1), 1.0 / dt ** 2)
    w = 1.0 / (4 * ds * dt)
    add("st", node(ii + 1, jj + 1), w)
    add("st", node(ii + 1, jj - 1), -w)
    add("st", node(below_row, jj + below_shift + 1), -w)
    add("st", node(below_row, jj + below_shift - 1), w)
    shape = (m * n, rows_in * n)
    mats = {}
    for key, (r, c, v) in entries.items():
        mats[key] = sp.csr_matrix(
            (np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=shape
        )
    return mats


def ghost_extension_matrix(grid):
    """Sparse map from ``n_v`` rows to ``n_v + 1`` rows (cubic ghost row)."""
    n, nv = grid.n_u, grid.n_v
    eye = sp.identity(nv * n, format="csr")
    cols = np.arange(n)
    b = nv - 1
    rows, cidx, vals = [], [], []
    for k, wgt in enumerate((4.0, -6.0, 4.0, -1.0)):
        rows.append(cols)
        cidx.append((b - k) * n + cols)
        vals.append(np.full(n, wgt))
    ghost = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cidx))),
        shape=(n, nv * n),
    )
    return sp.vstack([eye, ghost], format="csr")


# ---------------------------------------------------------------------------
# chart description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChartSpec:
    """What surface to build and on which grid.

    ``preset`` selects an analytic parametrization; alternatively
    ``positions`` supplies tabulated node positions of shape
    ``(n_v, n_u, 3)`` (rows from the pole outward, last row on the contact
    curve), in which case ``orientation`` must say whether the chart normal
    ``X_s x X_theta`` points out of the enclosed region (+1) or into it (-1).
    The boundary edge is always ``v = 0`` and the angle is always periodic.
    """

    preset: str = "spherical-cap"
    n_u: int = 128
    n_v: int = 64
    radius: float = 1.0
    alpha: float = math.pi / 2
    height: float = 0.5
    positions: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    orientation: int = 1
    periodic_u: bool = True
    boundary_edge: str = "v=0"
    perturbation_amplitude: Optional[float] = None
    perturbation_mode: int = 3
    perturbation_phase: float = 0.0

    def validate(self):
        if self.positions is None and self.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {PRESET_NAMES}")
        if not self.periodic_u:
            raise ConfigError("the angular chart direction must be periodic")
        if self.boundary_edge != "v=0":
            raise ConfigError("the contact curve must be the v=0 edge")
        if self.preset in ("spherical-cap", "perturbed-cap") and not 0.0 < self.alpha < math.pi:
            raise AngleAssumptionError("alpha: angle assumption 0 < alpha < pi violated")
        if self.positions is not None:
            pos = np.asarray(self.positions)
            if pos.shape != (self.n_v, self.n_u, 3):
                raise ConfigError("tabulated positions must have shape (n_v, n_u, 3)")
            if self.orientation not in (1, -1):
                raise ConfigError("orientation must be +1 or -1")
        ParameterGrid(self.n_u, self.n_v)
        return self

    @property
    def grid(self):
        return ParameterGrid(self.n_u, self.n_v)

    def make_preset(self):
        if self.positions is not None:
            return None
        return make_preset(self.preset, radius=self.radius, alpha=self.alpha, height=self.height)

    def resolved_amplitude(self):
        if self.perturbation_amplitude is not None:
            return float(self.perturbation_amplitude)
        return 0.02 if self.preset == "perturbed-cap" else 0.0

    def initial_height(self):
        """Initial height field implied by the perturbation settings."""
        g = self.grid
        return fourier_bump(
            g.s, g.theta, self.resolved_amplitude(), self.perturbation_mode, self.perturbation_phase
        )


# ---------------------------------------------------------------------------
# geometry of a gridded surface
# ---------------------------------------------------------------------------


@dataclass
class SurfaceGeometry:
    """Pointwise geometry on ``m`` rows computed from positions on ``m+1`` rows."""

    positions: np.ndarray
    xs: np.ndarray
    xt: np.ndarray
    xss: np.ndarray
    xst: np.ndarray
    xtt: np.ndarray
    fields: dict

    def __getattr__(self, name):
        fields = self.__dict__.get("fields")
        if fields is not None and name in fields:
            return fields[name]
        raise AttributeError(name)

    @property
    def rows(self):
        return self.xs.shape[0]

    @property
    def sigma2(self):
        return self.fields["H"] ** 2 - 2.0 * self.fields["K"]

    def laplace(self, f_ext, grid):
        """Laplace-Beltrami of a scalar given on ``rows + 1`` rows."""
        fs, ft, fss, fst, ftt = field_derivatives(f_ext, grid)
        f = self.fields
        return kernels.laplace_apply(
            f["gss"], f["gst"], f["gtt"], f["cs"], f["ct"], fs, ft, fss, fst, ftt
        )

    def gradient(self, f_ext, grid):
        """Surface gradient (ambient vector) of a scalar on ``rows + 1`` rows."""
        fs, ft, _, _, _ = field_derivatives(f_ext, grid)
        return self.gradient_from(fs, ft)

    def gradient_from(self, fs, ft):
        f = self.fields
        cs = f["gss"] * fs + f["gst"] * ft
        ct = f["gst"] * fs + f["gtt"] * ft
        return cs[..., None] * self.xs + ct[..., None] * self.xt

    def tangent_coefficients(self, vec):
        """Chart components ``(c_s, c_t)`` of the tangential part of ``vec``."""
        f = self.fields
        a = np.einsum("...k,...k->...", vec, self.xs)
        b = np.einsum("...k,...k->...", vec, self.xt)
        return f["gss"] * a + f["gst"] * b, f["gst"] * a + f["gtt"] * b

    def second_form(self, vec):
        """``II(v, v)`` for a tangent vector field ``vec`` (w.r.t. the normal)."""
        cs, ct = self.tangent_coefficients(vec)
        f = self.fields
        return f["b11"] * cs * cs + 2.0 * f["b12"] * cs * ct + f["b22"] * ct * ct


def surface_geometry(positions, grid, orientation, check=True):
    """Geometry on all but the last row of ``positions`` (shape (m+1, n, 3))."""
    xs, xt, xss, xst, xtt = field_derivatives(positions, grid)
    fields = kernels.surface_fields(xs, xt, xss, xst, xtt, float(orientation))
    if check:
        det = fields["det"]
        bad = ~(det > 0.0) | ~np.isfinite(det)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise DegenerateMetricError(
                f"first fundamental form not positive definite at node (row={r}, col={c})"
            )
    return SurfaceGeometry(positions, xs, xt, xss, xst, xtt, fields)


# ---------------------------------------------------------------------------
# contact-curve frames
# ---------------------------------------------------------------------------


@dataclass
class BoundaryFrames:
    """Orthonormal frames and curvature data along the contact curve."""

    points: np.ndarray
    tau: np.ndarray
    conormal: np.ndarray
    normal: np.ndarray
    wall_normal: np.ndarray
    wall_conormal: np.ndarray
    cos_alpha: np.ndarray
    sin_alpha: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    curvature_vector: np.ndarray
    normal_curvature: np.ndarray
    geodesic_curvature: np.ndarray
    speed: np.ndarray
    arclength: np.ndarray
    length: float
    surface_second_form: np.ndarray
    wall_second_form: np.ndarray
    wall_normal_twist: np.ndarray
    tau_wall_conormal_slope: np.ndarray


def ring_curvature(points, grid):
    """Tangent speed and curvature vector of a closed gridded curve."""
    dt = grid.dtheta
    right = np.roll(points, -1, axis=0)
    left = np.roll(points, 1, axis=0)
    c1 = (right - left) / (2.0 * dt)
    c2 = (right - 2.0 * points + left) / dt ** 2
    speed = np.linalg.norm(c1, axis=-1)
    tan = c1 / speed[:, None]
    kvec = (c2 - np.einsum("ki,ki->k", c2, tan)[:, None] * tan) / speed[:, None] ** 2
    return speed, tan, kvec


def contact_frames(points, normal, container, grid, chart_outward=None, strict=True):
    """Frames on the contact curve from the surface normal and the wall.

    The frames are built algebraically from the surface normal and the wall
    normal, so the angle relations hold to round-off whatever the grid.
    """
    nd = container.normal(points)
    cross = np.cross(nd, normal)
    sin_a = np.linalg.norm(cross, axis=-1)
    if strict and (sin_a < 1e-12).any():
        raise AngleAssumptionError("contact angle reaches 0 or pi on the contact curve")
    tau = cross / sin_a[:, None]
    conormal = np.cross(normal, tau)
    wall_conormal = np.cross(tau, nd)
    cos_a = np.einsum("ki,ki->k", normal, nd)
    if chart_outward is not None and strict:
        if (np.einsum("ki,ki->k", conormal, chart_outward) <= 0).any():
            raise AngleAssumptionError(
                "surface normal, wall normal and chart orientation are inconsistent"
            )
    alpha = np.arctan2(sin_a, cos_a)
    speed, _, kvec = ring_curvature(points, grid)
    kappa_d = np.einsum("ki,ki->k", kvec, nd)
    kappa_bd = np.einsum("ki,ki->k", kvec, wall_conormal)
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (speed + np.roll(speed, -1)) * grid.dtheta)])
    length = float(arc[-1])
    wall_ii = container.second_form(points, wall_conormal, wall_conormal)
    twist = container.normal_derivative(points, tau, wall_conormal)
    dcon = (np.roll(wall_conormal, -1, axis=0) - np.roll(wall_conormal, 1, axis=0)) / (
        2.0 * grid.dtheta * speed[:, None]
    )
    # arclength derivative taken in the direction of tau
    along = np.sign(np.einsum("ki,ki->k", np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0), tau))
    slope = along * np.einsum("ki,ki->k", tau, dcon)
    return dict(
        points=points, tau=tau, conormal=conormal, normal=normal, wall_normal=nd,
        wall_conormal=wall_conormal, cos_alpha=cos_a, sin_alpha=sin_a, alpha=alpha,
        beta=0.5 * math.pi - alpha, gamma=math.pi - alpha, curvature_vector=kvec,
        normal_curvature=kappa_d, geodesic_curvature=kappa_bd, speed=speed,
        arclength=arc[:-1], length=length, wall_second_form=wall_ii,
        wall_normal_twist=twist, tau_wall_conormal_slope=slope,
    )


# ---------------------------------------------------------------------------
# reference surface
# ---------------------------------------------------------------------------


@dataclass
class ReferenceSurface:
    """The fixed surface that height fields are measured from.

    ``positions`` holds ``n_v + 2`` rows (two ghost rows); ``geometry``
    covers ``n_v + 1`` rows (one ghost row).  Field accessors return the
    ``n_v`` physical rows.
    """

    spec: ChartSpec
    grid: ParameterGrid
    container: object
    preset: object
    orientation: int
    positions: np.ndarray
    geometry: SurfaceGeometry
    frames: BoundaryFrames
    weights: np.ndarray
    exact: Optional[dict]

    def _phys(self, name):
        return self.geometry.fields[name][: self.grid.n_v]

    @property
    def nodes(self):
        return self.positions[: self.grid.n_v]

    @property
    def normal(self):
        return self._phys("normal")

    @property
    def mean_curvature(self):
        return self._phys("H")

    @property
    def gauss_curvature(self):
        return self._phys("K")

    @property
    def sigma2(self):
        return self.mean_curvature ** 2 - 2.0 * self.gauss_curvature

    @property
    def metric(self):
        return np.stack([self._phys("E"), self._phys("F"), self._phys("G")], axis=-1)

    @property
    def second_fundamental_form(self):
        return np.stack([self._phys("b11"), self._phys("b12"), self._phys("b22")], axis=-1)

    @property
    def area(self):
        return float(np.sum(self.weights))

    @property
    def mean_of_mean_curvature(self):
        return float(np.sum(self.weights * self.mean_curvature) / np.sum(self.weights))


def area_weights(geometry, grid):
    """Quadrature weights on the physical rows (metric area element)."""
    sq = geometry.fields["area_element"][: grid.n_v]
    return sq * grid.quadrature_rows()[:, None] * grid.dtheta


def build_reference_surface(spec, container=None):
    """Build the reference surface described by ``spec``.

    ``container`` defaults to the preset's own container.  The contact row is
    checked to lie on the container wall.
    """
    spec.validate()
    grid = spec.grid
    preset = spec.make_preset()
    if container is None:
        if preset is None:
            raise ConfigError("tabulated charts need an explicit container")
        container = preset.container()
    s_all = grid.s_rows(grid.n_v + 2)
    if preset is not None:
        positions = preset.positions(s_all, grid.theta)
        orientation = preset.orientation
        exact = preset.exact()
    else:
        pos = np.asarray(spec.positions, dtype=float)
        positions = extend_ghost(extend_ghost(pos))
        orientation = int(spec.orientation)
        exact = None
    ring = positions[grid.boundary_row]
    residual = np.abs(container.value(ring)) / np.linalg.norm(container.gradient(ring), axis=-1)
    if residual.max() > 1e-9:
        raise ConfigError(
            f"contact row is not on the container wall (max level-set residual {residual.max():.3e})"
        )
    geometry = surface_geometry(positions, grid, orientation)
    b = grid.boundary_row
    fr = contact_frames(
        ring, geometry.fields["normal"][b], container, grid, chart_outward=geometry.xs[b]
    )
    fr["surface_second_form"] = _row_second_form(geometry, b, fr["conormal"])
    frames = BoundaryFrames(**fr)
    weights = area_weights(geometry, grid)
    return ReferenceSurface(
        spec=spec, grid=grid, container=container, preset=preset, orientation=orientation,
        positions=positions, geometry=geometry, frames=frames, weights=weights, exact=exact,
    )


def _row_second_form(geometry, row, vec):
    f = geometry.fields
    xs, xt = geometry.xs[row], geometry.xt[row]
    a = np.einsum("ki,ki->k", vec, xs)
    c = np.einsum("ki,ki->k", vec, xt)
    cs = f["gss"][row] * a + f["gst"][row] * c
    ct = f["gst"][row] * a + f["gtt"][row] * c
    return f["b11"][row] * cs * cs + 2.0 * f["b12"][row] * cs * ct + f["b22"][row] * ct * ct


def laplace_beltrami(surface, field_values):
    """Discrete Laplace-Beltrami operator of the reference surface.

    ``field_values`` lives on the physical rows; the ghost row is filled by
    cubic extrapolation, which makes the contact-row stencil one-sided.
    """
    f = np.asarray(field_values, dtype=float)
    g = surface.grid
    ext = extend_ghost(f)
    lap = surface.geometry.laplace(
        np.concatenate([ext, extend_ghost(ext)[-1:]], axis=0), g
    )
    return lap[: g.n_v]


def surface_gradient(surface, field_values):
    """Surface gradient on the physical rows as ambient vectors."""
    f = np.asarray(field_values, dtype=float)
    g = surface.grid
    ext = extend_ghost(f)
    ext = np.concatenate([ext, extend_ghost(ext)[-1:]], axis=0)
    return surface.geometry.gradient(ext, g)[: g.n_v]


def boundary_frames(surface):
    """Frames, angles and contact-curve curvatures of the reference surface."""
    return surface.frames
