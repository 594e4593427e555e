"""Geometry of surfaces given as height fields over the reference surface.

A height field ``rho`` places the node ``q`` at ``Psi(q, rho(q))``.  From the
displaced nodes we recompute metric, normal and curvatures with the same
stencils as the reference (so the pulled-back operators come for free), and
evaluate energies, the enclosed volume and first variations.

Mean curvature follows the convention ``H = trace of the second fundamental
form`` with respect to the normal pointing out of the enclosed region, so a
sphere of radius ``R`` has ``H = -2/R``.

When the reference is an analytic preset, the mean and Gauss curvatures can
be corrected by the reference defect: ``H~(rho) = H_h(rho) - H_h(0) + H_exact``.
This removes the O(h^2) truncation error of the reference itself, so exact
equilibria of the continuous problem are exact equilibria of the discrete one.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .containers import Ball, HalfSpace
from .errors import ContactFlowError, DegenerateMetricError, TubeViolationError
from .surface_core import (
    area_weights,
    contact_frames,
    extend_ghost,
    smoothstep_cutoff,
    surface_geometry,
)

TUBE_SAFETY = 0.9


class InfeasibleVariationError(ContactFlowError):
    """A test vector field is not tangent to the wall along the contact curve."""


@dataclass
class HeightField:
    """Height values on the ``n_v`` physical rows.

    ``ghost`` optionally holds the row just past the contact curve; without
    it the row is filled by cubic extrapolation.
    """

    values: np.ndarray
    map: object
    time: float = 0.0
    ghost: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        g = self.map.grid
        if self.values.shape != (g.n_v, g.n_u):
            raise ValueError(f"height field must have shape {(g.n_v, g.n_u)}")
        if self.ghost is not None:
            self.ghost = np.asarray(self.ghost, dtype=float).reshape(g.n_u)

    def extended(self):
        if self.ghost is None:
            return extend_ghost(self.values)
        return np.concatenate([self.values, self.ghost[None]], axis=0)

    def check_tube(self, safety=TUBE_SAFETY):
        bound = safety * self.map.eps0
        peak = float(np.abs(self.extended()).max())
        if peak >= bound:
            raise TubeViolationError(
                f"max |rho| = {peak:.4g} exceeds {safety} * eps0 = {bound:.4g} at t={self.time:.6g}"
            )

    def with_values(self, values, time=None, ghost=None):
        return HeightField(values, self.map, self.time if time is None else time, ghost)

    @classmethod
    def zeros(cls, cmap, time=0.0):
        g = cmap.grid
        return cls(np.zeros((g.n_v, g.n_u)), cmap, time)


@dataclass
class SurfaceQuantities:
    """Nonlinear geometric quantities of a displaced surface."""

    positions: np.ndarray
    normal: np.ndarray
    mean_curvature: np.ndarray
    gauss_curvature: np.ndarray
    laplace_mean_curvature: np.ndarray
    grad_mean_curvature: np.ndarray
    weights: np.ndarray
    conormal: np.ndarray
    wall_conormal: np.ndarray
    wall_normal: np.ndarray
    cos_alpha: np.ndarray
    sin_alpha: np.ndarray
    geodesic_curvature: np.ndarray
    normal_curvature: np.ndarray
    curvature_vector: np.ndarray
    conormal_mean_curvature_slope: np.ndarray
    ring_speed: np.ndarray
    area: float
    boundary_length: float
    wetted_area: float
    volume: float
    mean_H: float
    bending: float
    geometry: object = field(repr=False, default=None)
    dtheta: float = 0.0

    @property
    def sigma2(self):
        return self.mean_curvature ** 2 - 2.0 * self.gauss_curvature

    def ring_integral(self, f):
        """Periodic trapezoid rule along the contact curve."""
        return float(np.sum(f * self.ring_speed) * self.dtheta)

    def energy(self, kind, a, b):
        if kind == "capillary":
            return self.area - a * self.wetted_area + b * self.boundary_length
        if kind == "willmore":
            return self.bending - a * self.wetted_area + b * self.boundary_length
        raise ValueError(f"unknown energy kind {kind!r}")

    def willmore_operator(self):
        """``-Lap H - H (H^2 - 4K) / 2`` on all physical rows."""
        h = self.mean_curvature
        return -self.laplace_mean_curvature - 0.5 * h * (h * h - 4.0 * self.gauss_curvature)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _inside_direction(surface):
    """A direction from the ball centre that points into the wetted region."""
    cache = surface.__dict__.setdefault("_cache", {})
    if "inside" in cache:
        return cache["inside"]
    c = np.asarray(surface.container.center, dtype=float)
    fr = surface.frames
    rel = fr.points - c
    mean_dir = rel.mean(axis=0)
    inside = mean_dir - 0.25 * surface.container.radius * fr.wall_conormal.mean(axis=0)
    if np.linalg.norm(inside) < 1e-12:
        inside = -fr.wall_conormal.mean(axis=0)
    inside = inside / np.linalg.norm(inside)
    cache["inside"] = inside
    return inside


def wetted_area(surface, ring):
    container = surface.container
    if isinstance(container, HalfSpace):
        return container.wetted_area(ring)
    if isinstance(container, Ball):
        return container.wetted_area(ring, _inside_direction(surface))
    raise NotImplementedError("wetted area needs a planar or spherical wall")


def volume_origin(container):
    if isinstance(container, Ball):
        return np.asarray(container.center, dtype=float)
    return np.zeros(3)


def reference_defect(surface):
    """Arrays ``(dH, dK)`` to add to discrete curvatures, or ``None``."""
    cache = surface.__dict__.setdefault("_cache", {})
    if "defect" in cache:
        return cache["defect"]
    ex = surface.exact
    out = None
    if ex is not None:
        out = (ex["mean_curvature"] - surface.mean_curvature,
               ex["gauss_curvature"] - surface.gauss_curvature)
    cache["defect"] = out
    return out


def geometry_from_positions(surface, positions, correct=False, strict=True):
    """Quantities of the surface with node positions on ``n_v + 1`` rows."""
    grid = surface.grid
    nv = grid.n_v
    b = grid.boundary_row
    geo = surface_geometry(positions, grid, surface.orientation)
    f = geo.fields
    H = f["H"].copy()
    K = f["K"].copy()
    if correct:
        d = reference_defect(surface)
        if d is not None:
            H = H + d[0]
            K = K + d[1]
    weights = area_weights(geo, grid)
    area = float(np.sum(weights))
    mean_h = float(np.sum(weights * H) / area)
    h_ext = extend_ghost(H)
    lap_h = geo.laplace(h_ext, grid)
    grad_h = geo.gradient(h_ext, grid)
    ring = positions[b]
    normal = f["normal"]
    fr = contact_frames(ring, normal[b], surface.container, grid,
                        chart_outward=geo.xs[b], strict=strict)
    origin = volume_origin(surface.container)
    wet = float(wetted_area(surface, ring))
    flux = np.sum(weights * np.einsum("ijk,ijk->ij", positions[:nv] - origin, normal))
    vol = (flux + surface.container.wall_offset() * wet) / 3.0
    slope = np.einsum("ki,ki->k", grad_h[b], fr["conormal"])
    return SurfaceQuantities(
        positions=positions[:nv], normal=normal, mean_curvature=H, gauss_curvature=K,
        laplace_mean_curvature=lap_h, grad_mean_curvature=grad_h, weights=weights,
        conormal=fr["conormal"], wall_conormal=fr["wall_conormal"], wall_normal=fr["wall_normal"],
        cos_alpha=fr["cos_alpha"], sin_alpha=fr["sin_alpha"],
        geodesic_curvature=fr["geodesic_curvature"], normal_curvature=fr["normal_curvature"],
        curvature_vector=fr["curvature_vector"], conormal_mean_curvature_slope=slope,
        ring_speed=fr["speed"], area=area, boundary_length=fr["length"], wetted_area=wet,
        volume=float(vol), mean_H=mean_h, bending=float(0.25 * np.sum(weights * H * H)),
        geometry=geo, dtheta=grid.dtheta,
    )


def evaluate(rho, correct=True, check_tube=True):
    """All nonlinear quantities of the surface described by ``rho``."""
    if check_tube:
        rho.check_tube()
    cmap = rho.map
    pos = cmap.positions(rho.extended(), check_tube=False)
    try:
        return geometry_from_positions(cmap.surface, pos, correct=correct)
    except DegenerateMetricError as exc:
        raise DegenerateMetricError(f"{exc} at t={rho.time:.6g}") from None


def normal_velocity(rho, rho_dot, quantities=None):
    """Normal velocity of the surface and of the contact curve within the wall."""
    q = evaluate(rho) if quantities is None else quantities
    grid = rho.map.grid
    dw = rho.map.dw(rho.extended(), check_tube=False)[: grid.n_v]
    rho_dot = np.asarray(rho_dot, dtype=float)
    V = np.einsum("ijk,ijk->ij", q.normal, dw) * rho_dot
    b = grid.boundary_row
    v = np.einsum("ki,ki->k", q.wall_conormal, dw[b]) * rho_dot[b]
    return V, v


def energy(rho, kind, a=0.0, b=0.0, correct=True):
    return evaluate(rho, correct=correct).energy(kind, a, b)


def enclosed_volume(rho):
    return evaluate(rho, correct=False).volume


# ---------------------------------------------------------------------------
# first variations
# ---------------------------------------------------------------------------


def _check_feasible(q, zeta, tol):
    zb = zeta[-1]
    off = np.abs(np.einsum("ki,ki->k", zb, q.wall_normal)).max()
    scale = max(1.0, float(np.abs(zeta).max()))
    if off > tol * scale:
        raise InfeasibleVariationError(
            f"variation field is not tangent to the wall on the contact curve (|zeta.n_D| = {off:.3e})"
        )


def _split_variation(rho, zeta):
    zeta = np.asarray(zeta, dtype=float)
    nv = rho.map.grid.n_v
    if zeta.shape[0] == nv + 1:
        return zeta[:nv], zeta
    return zeta, extend_ghost(zeta)


def first_variation_capillary(rho, zeta, a, b, multiplier=None, include_volume_term=True,
                              correct=True, feasibility_tol=1e-8):
    """First variation of the capillary energy in direction ``zeta``.

    The bulk term is written with a Lagrange multiplier (default: the area
    mean of ``H``).  With ``include_volume_term`` the multiplier's volume
    contribution is subtracted again, so the value is the plain derivative of
    the energy even for variations that change the volume.
    """
    q = evaluate(rho, correct=correct)
    zeta, _ = _split_variation(rho, zeta)
    _check_feasible(q, zeta, feasibility_tol)
    lam = q.mean_H if multiplier is None else float(multiplier)
    nz = np.einsum("ijk,ijk->ij", q.normal, zeta)
    bulk = np.sum(q.weights * (lam - q.mean_curvature) * nz)
    zb = zeta[-1]
    line = q.conormal - a * q.wall_conormal - b * q.curvature_vector
    total = bulk + q.ring_integral(np.einsum("ki,ki->k", line, zb))
    if include_volume_term:
        total -= lam * np.sum(q.weights * nz)
    return float(total)


def first_variation_willmore(rho, zeta, a, b, correct=True, feasibility_tol=1e-8):
    """First variation of the bending energy with line tension."""
    q = evaluate(rho, correct=correct)
    zeta_phys, zeta_ext = _split_variation(rho, zeta)
    _check_feasible(q, zeta_phys, feasibility_tol)
    grid = rho.map.grid
    bidx = grid.boundary_row
    H = q.mean_curvature
    nz = np.einsum("ijk,ijk->ij", q.normal, zeta_phys)
    bulk = 0.5 * np.sum(q.weights * (q.laplace_mean_curvature + H * q.sigma2 - 0.5 * H ** 3) * nz)
    nz_ext = extend_ghost(nz)
    grad_nz = q.geometry.gradient(nz_ext, grid)[bidx]
    zb = zeta_phys[bidx]
    hb = H[bidx]
    edge = (0.5 * hb ** 2 * np.einsum("ki,ki->k", q.conormal, zb)
            + hb * np.einsum("ki,ki->k", grad_nz, q.conormal)
            - q.conormal_mean_curvature_slope * nz[bidx])
    line = a * q.wall_conormal + b * q.curvature_vector
    total = bulk + 0.5 * q.ring_integral(edge) - q.ring_integral(np.einsum("ki,ki->k", line, zb))
    return float(total)


def stationarity_residuals(q, kind, a, b, multiplier=None):
    """Pointwise residuals of the equilibrium conditions.

    Returns ``(interior, boundary, constraint)``; ``constraint`` is ``None``
    for the capillary problem.
    """
    if kind == "mcf":
        lam = q.mean_H if multiplier is None else multiplier
        interior = q.mean_curvature[:-1] - lam
        boundary = a + b * q.geodesic_curvature + q.cos_alpha
        return interior, boundary, None
    if kind == "willmore":
        interior = q.willmore_operator()[:-1]
        boundary = (0.5 * q.sin_alpha * q.conormal_mean_curvature_slope
                    + a + b * q.geodesic_curvature)
        return interior, boundary, q.mean_curvature[-1]
    raise ValueError(f"unknown flow kind {kind!r}")


def max_stationarity_residual(q, kind, a, b):
    parts = [p for p in stationarity_residuals(q, kind, a, b) if p is not None]
    return float(max(np.abs(p).max() for p in parts))


# ---------------------------------------------------------------------------
# finite-difference check of the first variations
# ---------------------------------------------------------------------------


def random_feasible_field(rho, rng, band=(0.5, 0.9)):
    """Smooth random vector field that is tangent to the wall on the contact curve.

    Components are quadratic polynomials in the pole coordinates
    ``(s cos theta, s sin theta)``, so the field is smooth through the pole.
    The wall-normal part is removed with a weight that ramps from 0 at
    ``s = band[0]`` to 1 at ``s = band[1]``; returned on ``n_v + 1`` rows.
    """
    cmap = rho.map
    g = cmap.grid
    s = g.s_rows(g.n_v + 1)[:, None]
    th = g.theta[None, :]
    x, y = s * np.cos(th), s * np.sin(th)
    basis = np.stack(np.broadcast_arrays(np.ones_like(x), x, y, x * x, x * y, y * y), axis=-1)
    zeta = basis @ rng.normal(size=(6, 3))
    pos = cmap.positions(rho.extended(), check_tube=False)
    nd = cmap.surface.container.normal(pos)
    ramp = 1.0 - smoothstep_cutoff(s - band[0], band[1] - band[0])
    return zeta - (ramp * np.einsum("ijk,ijk->ij", zeta, nd))[..., None] * nd


@dataclass
class VariationCheck:
    """First variation against centered differences of the discrete energy."""

    kind: str
    eps: tuple
    formula: float
    differences: list
    slope: float
    scale: float

    @property
    def mismatch(self):
        return abs(self.differences[-1] - self.formula)

    @property
    def relative_mismatch(self):
        return self.mismatch / self.scale

    def passed(self, slope_range=(1.8, 2.2), tol=1e-3):
        return bool(slope_range[0] <= self.slope <= slope_range[1] and self.relative_mismatch <= tol)


def first_variation_check(rho, zeta, kind, a, b, eps=(1e-4, 5e-5, 2.5e-5)):
    """Compare ``first_variation_<kind>`` with differences of the energy.

    Both sides use the uncorrected discrete geometry.  The slope is fitted
    to increments between consecutive differences.  The relative mismatch
    is taken against the sum of the magnitudes of the three parts of the
    variation (surface term, wall term, line term), which stays meaningful
    when they cancel.
    """
    if kind not in ("capillary", "willmore"):
        raise ValueError(f"unknown energy kind {kind!r}")
    surface = rho.map.surface
    pos = rho.map.positions(rho.extended(), check_tube=False)
    formula_fn = first_variation_capillary if kind == "capillary" else first_variation_willmore

    def fd(e, aa, bb):
        plus = geometry_from_positions(surface, pos + e * zeta).energy(kind, aa, bb)
        minus = geometry_from_positions(surface, pos - e * zeta).energy(kind, aa, bb)
        return (plus - minus) / (2.0 * e)

    diffs = [fd(e, a, b) for e in eps]
    formula = formula_fn(rho, zeta, a, b, correct=False)
    surface_part = formula_fn(rho, zeta, 0.0, 0.0, correct=False)
    wall_part = formula_fn(rho, zeta, a, 0.0, correct=False) - surface_part
    line_part = formula - surface_part - wall_part
    inc = [abs(diffs[i] - diffs[i + 1]) for i in range(len(eps) - 1)]
    slope = float(np.log(inc[-2] / inc[-1]) / np.log(eps[-3] / eps[-2])) if min(inc) > 0 else float("nan")
    scale = abs(surface_part) + abs(wall_part) + abs(line_part)
    return VariationCheck(kind=kind, eps=tuple(eps), formula=formula, differences=diffs,
                          slope=slope, scale=max(scale, 1e-300))


__all__ = [
    "HeightField", "SurfaceQuantities", "InfeasibleVariationError", "evaluate", "normal_velocity",
    "energy", "enclosed_volume", "first_variation_capillary", "first_variation_willmore",
    "geometry_from_positions", "stationarity_residuals", "max_stationarity_residual",
    "reference_defect", "wetted_area", "random_feasible_field", "first_variation_check",
    "VariationCheck",
]
