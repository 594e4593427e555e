"""Discrete linearized operators of both flows around the reference surface,
and finite-difference checks of every linearization formula.

Unknowns are height values on the grid, flattened row-major.  The capillary
flow uses the ``n_v`` physical rows (ghost row extrapolated); the bending flow
appends the ghost row as extra unknowns.

Linearization ids accepted by :func:`linearized_quantity` and
:func:`fd_verify`:

``normal_velocity``         normal speed of the surface
``contact_line_velocity``   speed of the contact curve along the wall conormal
``mean_curvature``          mean curvature
``mean_curvature_average``  area mean of the mean curvature
``contact_angle``           cosine of the contact angle
``geodesic_curvature``      geodesic curvature of the contact curve in the wall
``willmore_laplacian``      Laplace-Beltrami of the mean curvature
``willmore_conormal``       conormal derivative of the mean curvature
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline

from .errors import ConfigError
from .flows import FlowProblem, _cache, grid_derivative_matrices, problem_jacobian
from .perturbed_geometry import HeightField, evaluate, geometry_from_positions, normal_velocity
from .surface_core import (
    build_reference_surface,
    contact_frames,
    extend_ghost,
    ghost_extension_matrix,
    smoothstep_cutoff,
    surface_geometry,
)

LEMMA_IDS = (
    "normal_velocity",
    "contact_line_velocity",
    "mean_curvature",
    "mean_curvature_average",
    "contact_angle",
    "geodesic_curvature",
    "willmore_laplacian",
    "willmore_conormal",
)

BOUNDARY_LEMMAS = ("contact_line_velocity", "contact_angle", "geodesic_curvature", "willmore_conormal")
EXACT_LEMMAS = ("normal_velocity", "contact_line_velocity")
ROUNDOFF_FLOOR = 1e-6
GCI_SAFETY = 1.25


# ---------------------------------------------------------------------------
# reference operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReferenceOperators:
    """Sparse stencils and coefficient fields on the reference surface."""

    laplace: sp.csr_matrix          # (n_v rows) <- (n_v + 1 rows)
    extend: sp.csr_matrix           # (n_v + 1 rows) <- (n_v rows)
    conormal: sp.csr_matrix         # boundary ring <- (n_v + 1 rows)
    ring_second: sp.csr_matrix      # d^2/d sigma^2 on the ring
    boundary_select: sp.csr_matrix  # boundary ring <- (n_v + 1 rows)
    mean_curvature: np.ndarray
    sigma2: np.ndarray
    grad_term: np.ndarray           # grad H . P(d_w Psi(0))
    weights: np.ndarray
    area: float
    mean_H: float
    ring_weights: np.ndarray        # arclength quadrature along the ring
    sin_alpha: np.ndarray
    cos_alpha: np.ndarray
    surface_second_form: np.ndarray
    wall_second_form: np.ndarray
    geodesic_coefficient: np.ndarray

    @property
    def zeroth_order(self):
        return self.sigma2 + self.grad_term

    def mean_curvature_operator(self):
        """Linearized mean curvature: (n_v rows) <- (n_v + 1 rows)."""
        n_phys = self.laplace.shape[0]
        z = sp.diags(self.zeroth_order.ravel())
        pad = sp.csr_matrix((n_phys, self.laplace.shape[1] - n_phys))
        return (self.laplace + sp.hstack([z, pad])).tocsr()

    def angle_operator(self):
        """Linearized cosine of the contact angle: ring <- (n_v + 1 rows)."""
        zero = self.cos_alpha * self.surface_second_form - self.wall_second_form
        return (-sp.diags(self.sin_alpha) @ self.conormal + sp.diags(zero) @ self.boundary_select).tocsr()

    def geodesic_operator(self):
        """Linearized geodesic curvature acting on the boundary trace."""
        return ((self.ring_second + sp.diags(self.geodesic_coefficient)) @ sp.diags(1.0 / self.sin_alpha)).tocsr()


def ring_second_derivative(speed, dtheta):
    """Periodic ``d^2/d sigma^2`` for a ring with node speeds ``|X_theta|``."""
    n = len(speed)
    idx = np.arange(n)
    up = (idx + 1) % n
    dn = (idx - 1) % n
    speed_t = (speed[up] - speed[dn]) / (2.0 * dtheta)
    drift = speed_t / speed
    inv = 1.0 / speed ** 2
    rows = np.concatenate([idx, idx, idx])
    cols = np.concatenate([up, idx, dn])
    vals = np.concatenate([
        inv * (1.0 / dtheta ** 2 - drift / (2.0 * dtheta)),
        inv * (-2.0 / dtheta ** 2),
        inv * (1.0 / dtheta ** 2 + drift / (2.0 * dtheta)),
    ])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def reference_operators(cmap, corrected=True):
    """Operators at the reference surface, cached on the map.

    With ``corrected`` the closed-form curvatures of analytic presets replace
    the discrete ones in the coefficient fields.
    """
    cache = _cache(cmap)
    key = ("refops", bool(corrected))
    if key in cache:
        return cache[key]
    surface = cmap.surface
    g = surface.grid
    nv, nu = g.n_v, g.n_u
    b = g.boundary_row
    q0 = geometry_from_positions(surface, surface.positions[: nv + 1], correct=corrected)
    geo = q0.geometry
    f = geo.fields
    mats = grid_derivative_matrices(cmap)
    lap = (
        sp.diags(f["gss"].ravel()) @ mats["ss"]
        + sp.diags(2.0 * f["gst"].ravel()) @ mats["st"]
        + sp.diags(f["gtt"].ravel()) @ mats["tt"]
        - sp.diags(f["cs"].ravel()) @ mats["s"]
        - sp.diags(f["ct"].ravel()) @ mats["t"]
    ).tocsr()
    fr = surface.frames
    xs_n = np.einsum("ki,ki->k", geo.xs[b], fr.conormal)
    xt_n = np.einsum("ki,ki->k", geo.xt[b], fr.conormal)
    coef_s = f["gss"][b] * xs_n + f["gst"][b] * xt_n
    coef_t = f["gst"][b] * xs_n + f["gtt"][b] * xt_n
    sl = slice(b * nu, (b + 1) * nu)
    conormal = (sp.diags(coef_s) @ mats["s"][sl] + sp.diags(coef_t) @ mats["t"][sl]).tocsr()
    select = sp.csr_matrix(
        (np.ones(nu), (np.arange(nu), b * nu + np.arange(nu))), shape=(nu, (nv + 1) * nu)
    )
    dw0 = cmap.dw_at_zero()[:nv]
    grad_term = np.einsum("ijk,ijk->ij", q0.grad_mean_curvature, dw0)
    geo_coef = (
        fr.normal_curvature * fr.wall_second_form
        - fr.geodesic_curvature * fr.tau_wall_conormal_slope
        - fr.wall_normal_twist ** 2
    )
    ops = ReferenceOperators(
        laplace=lap,
        extend=ghost_extension_matrix(g),
        conormal=conormal,
        ring_second=ring_second_derivative(fr.speed, g.dtheta),
        boundary_select=select,
        mean_curvature=q0.mean_curvature,
        sigma2=q0.sigma2,
        grad_term=grad_term,
        weights=q0.weights,
        area=q0.area,
        mean_H=q0.mean_H,
        ring_weights=fr.speed * g.dtheta,
        sin_alpha=fr.sin_alpha,
        cos_alpha=fr.cos_alpha,
        surface_second_form=fr.surface_second_form,
        wall_second_form=fr.wall_second_form,
        geodesic_coefficient=geo_coef,
    )
    cache[key] = ops
    return ops


# ---------------------------------------------------------------------------
# assembled systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssembledLinearSystem:
    """Linearized flow ``M d/dt x = J x + ...`` split into operator blocks.

    For the capillary flow the linearization reads
    ``d/dt rho = -A rho - m.rho - ell.rho|_boundary`` in the interior with
    the boundary row ``B0 rho + C0 rho|_boundary = 0`` up to data, where
    ``B1 = 1`` and ``C1 = -1`` couple the boundary trace with the contact
    curve height.  For the bending flow ``B1`` is the constraint row and
    ``B2``/``C2`` the coupling rows.
    """

    kind: str
    a: float
    b: float
    A: sp.csr_matrix
    B0: sp.csr_matrix
    B1: sp.csr_matrix
    C0: sp.csr_matrix
    C1: sp.csr_matrix
    jacobian: sp.csr_matrix
    mass: np.ndarray
    interior_rows: np.ndarray
    boundary_rows: np.ndarray
    zeroth_order: np.ndarray
    B2: Optional[sp.csr_matrix] = None
    C2: Optional[sp.csr_matrix] = None
    m: Optional[np.ndarray] = None
    ell: Optional[np.ndarray] = None
    constraint_rows: Optional[np.ndarray] = None
    provenance: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.jacobian.shape[0]

    def apply_mcf(self, rho):
        """Full linear capillary right-hand side, nonlocal part included."""
        if self.kind != "mcf":
            raise ConfigError("apply_mcf needs a capillary-flow system")
        x = np.asarray(rho, dtype=float).ravel()
        out = self.jacobian @ x
        nu = len(self.boundary_rows)
        out[self.interior_rows] -= self.m @ x + self.ell @ x[self.boundary_rows[:nu]]
        return out


def principal_stencil(cmap, kind):
    """Principal interior stencil: ``Lap`` (capillary) or ``Lap Lap`` (bending)."""
    ops = reference_operators(cmap)
    lap_e = (ops.laplace @ ops.extend).tocsr()
    if kind == "mcf":
        return lap_e
    return (ops.laplace @ ops.extend @ ops.laplace).tocsr()


def assemble(kind, surface=None, cmap=None, a=0.0, b=1.0, correct=True, fd_step=1e-6):
    """Assemble the linearized operator blocks of a flow around ``rho = 0``."""
    if cmap is None:
        raise ConfigError("assemble needs the curvilinear map of the reference surface")
    if surface is not None and surface is not cmap.surface:
        raise ConfigError("curvilinear map was built for a different surface")
    if kind not in ("mcf", "willmore"):
        raise ConfigError(f"unknown flow kind {kind!r}")
    if not b > 0:
        raise ConfigError("b: line tension must satisfy b > 0")
    if cmap.surface.frames is None:
        raise ConfigError("reference frames must be built before assembly")
    ops = reference_operators(cmap, corrected=correct)
    g = cmap.grid
    nv, nu = g.n_v, g.n_u
    bidx = g.boundary_row
    sin_d = sp.diags(ops.sin_alpha)
    boundary_rows = bidx * nu + np.arange(nu)
    interior_rows = np.arange(bidx * nu)
    eye = sp.identity(nu, format="csr")
    if kind == "mcf":
        e = ops.extend
        dh = (ops.mean_curvature_operator() @ e).tocsr()
        sel = (ops.boundary_select @ e).tocsr()
        dcos = (ops.angle_operator() @ e).tocsr()
        dkap = (ops.geodesic_operator() @ sel).tocsr()
        jac = sp.vstack([dh[interior_rows], sin_d @ (float(b) * dkap + dcos)], format="csr")
        # nonlocal part of the mean-curvature average
        w = ops.weights.ravel()
        lap_e = (ops.laplace @ e).tocsr()
        zero_m = ops.sigma2 - ops.mean_curvature ** 2 + ops.mean_H * ops.mean_curvature
        m = (lap_e.T @ w + w * zero_m.ravel()) / ops.area
        hb = ops.mean_curvature[bidx]
        ell = -ops.ring_weights * (hb - ops.mean_H) * ops.cos_alpha / ops.sin_alpha / ops.area
        return AssembledLinearSystem(
            kind=kind, a=float(a), b=float(b),
            A=(-jac[interior_rows]).tocsr(),
            B0=(-sin_d @ dcos).tocsr(),
            B1=eye, C0=(-float(b) * sin_d @ dkap).tocsr(), C1=-eye,
            jacobian=jac, mass=np.ones(nv * nu),
            interior_rows=interior_rows, boundary_rows=boundary_rows,
            zeroth_order=ops.zeroth_order, m=m, ell=ell,
            provenance={
                "A": "mean_curvature (Laplacian, |sigma|^2, grad H . P d_w Psi)",
                "B0": "contact_angle",
                "C0": "geodesic_curvature",
                "B1": "contact_line_velocity (coupling)",
                "C1": "contact_line_velocity (coupling)",
                "m": "mean_curvature_average (area part)",
                "ell": "mean_curvature_average (contact-curve part)",
            },
        )
    problem = FlowProblem("willmore", cmap, a, b, correct=correct)
    jac = problem_jacobian(problem, delta=fd_step)
    constraint_rows = nv * nu + np.arange(nu)
    dkap = (ops.geodesic_operator() @ ops.boundary_select).tocsr()
    c0 = (-float(b) * sin_d @ dkap).tocsr()
    b0 = (-jac[boundary_rows] - c0).tocsr()
    return AssembledLinearSystem(
        kind=kind, a=float(a), b=float(b),
        A=(-jac[interior_rows]).tocsr(), B0=b0, B1=jac[constraint_rows].tocsr(),
        B2=eye, C0=c0, C1=sp.csr_matrix((nu, nu)), C2=-eye,
        jacobian=jac, mass=problem.mass,
        interior_rows=interior_rows, boundary_rows=boundary_rows,
        constraint_rows=constraint_rows, zeroth_order=ops.zeroth_order,
        provenance={
            "A": "finite differences of the bending operator; principal part willmore_laplacian",
            "B0": "finite differences of the boundary law; principal part willmore_conormal",
            "B1": "finite differences of H on the contact curve; principal part mean_curvature",
            "C0": "geodesic_curvature",
            "B2": "contact_line_velocity (coupling)",
            "C2": "contact_line_velocity (coupling)",
        },
    )


# ---------------------------------------------------------------------------
# single linearized quantities
# ---------------------------------------------------------------------------


def smooth_variation(s, theta, inner=0.05, outer=0.75):
    """Default test variation for :func:`fd_verify`.

    It vanishes identically near the pole, where the discrete fourth-order
    operator is not consistent and round-off in the curvature is amplified
    like ``h**-4``, and is a mix of angular modes elsewhere.
    """
    s = np.asarray(s, dtype=float)[:, None]
    th = np.asarray(theta, dtype=float)[None, :]
    ramp = 1.0 - smoothstep_cutoff(s - inner, outer - inner)
    return ramp * s ** 2 * (0.1 + 0.3 * np.cos(2 * th) + 0.2 * np.sin(3 * th))


def _as_height(rho_dot, cmap):
    if isinstance(rho_dot, HeightField):
        return rho_dot
    if callable(rho_dot):
        g = cmap.grid
        return HeightField(np.asarray(rho_dot(g.s_rows(g.n_v), g.theta), dtype=float), cmap)
    return HeightField(np.asarray(rho_dot, dtype=float), cmap)


def _fixed_field_terms(cmap, rho_ext, h_field):
    """Laplacian and conormal slope of a fixed scalar on a displaced surface."""
    surface = cmap.surface
    g = cmap.grid
    b = g.boundary_row
    pos = cmap.positions(rho_ext, check_tube=False)
    geo = surface_geometry(pos, g, surface.orientation, check=False)
    h_ext = extend_ghost(h_field)
    lap = geo.laplace(h_ext, g)
    grad = geo.gradient(h_ext, g)
    fr = contact_frames(pos[b], geo.fields["normal"][b], surface.container, g, strict=False)
    return lap, np.einsum("ki,ki->k", grad[b], fr["conormal"])


def _closure(cmap, ext, h_field, step=1e-6):
    lp, sp_ = _fixed_field_terms(cmap, step * ext, h_field)
    lm, sm = _fixed_field_terms(cmap, -step * ext, h_field)
    return (lp - lm) / (2.0 * step), (sp_ - sm) / (2.0 * step)


def linearized_quantity(lemma, rho_dot, cmap=None, corrected=False):
    """Apply the linearization ``lemma`` to the variation ``rho_dot``.

    ``rho_dot`` is a :class:`HeightField`, an ``(n_v, n_u)`` array or a
    callable ``f(s, theta)``.  Boundary objects return a ring array; the mean
    curvature average returns a float.  For the two bending-flow ids only the
    principal part is analytic; the lower-order remainder is the derivative
    of the same operator with the mean curvature frozen, by finite
    differences.
    """
    if lemma not in LEMMA_IDS:
        raise ConfigError(f"unknown linearization id {lemma!r}; expected one of {LEMMA_IDS}")
    if cmap is None:
        if not isinstance(rho_dot, HeightField):
            raise ConfigError("a curvilinear map is needed unless rho_dot is a HeightField")
        cmap = rho_dot.map
    rho = _as_height(rho_dot, cmap)
    ext = rho.extended()
    x = ext.ravel()
    g = cmap.grid
    nv, nu = g.n_v, g.n_u
    b = g.boundary_row
    if lemma == "normal_velocity":
        return rho.values.copy()
    if lemma == "contact_line_velocity":
        return ext[b] / reference_operators(cmap, corrected).sin_alpha
    ops = reference_operators(cmap, corrected)
    dh = (ops.mean_curvature_operator() @ x).reshape(nv, nu)
    if lemma == "mean_curvature":
        return dh
    if lemma == "mean_curvature_average":
        lap = (ops.laplace @ x).reshape(nv, nu)
        zero = ops.sigma2 - ops.mean_curvature ** 2 + ops.mean_H * ops.mean_curvature
        area_part = np.sum(ops.weights * (lap + zero * rho.values))
        hb = ops.mean_curvature[b]
        ring_part = np.sum(ops.ring_weights * (hb - ops.mean_H) * ops.cos_alpha / ops.sin_alpha * ext[b])
        return float((area_part - ring_part) / ops.area)
    if lemma == "contact_angle":
        return ops.angle_operator() @ x
    if lemma == "geodesic_curvature":
        return ops.geodesic_operator() @ ext[b]
    dh_ext = extend_ghost(dh)
    lap_c, slope_c = _closure(cmap, ext, ops.mean_curvature)
    if lemma == "willmore_laplacian":
        return (ops.laplace @ dh_ext.ravel()).reshape(nv, nu) + lap_c
    return ops.conormal @ dh_ext.ravel() + slope_c


def nonlinear_quantity(lemma, rho):
    """The nonlinear quantity whose derivative ``lemma`` describes."""
    if lemma in EXACT_LEMMAS:
        # velocities at the reference surface moving with height velocity ``rho``
        zero = HeightField.zeros(rho.map)
        speeds = normal_velocity(zero, rho.extended()[:-1], quantities=evaluate(zero, correct=False))
        return speeds[0] if lemma == "normal_velocity" else speeds[1]
    q = evaluate(rho, correct=False, check_tube=True)
    return {
        "mean_curvature": lambda: q.mean_curvature,
        "mean_curvature_average": lambda: q.mean_H,
        "contact_angle": lambda: q.cos_alpha,
        "geodesic_curvature": lambda: q.geodesic_curvature,
        "willmore_laplacian": lambda: q.laplace_mean_curvature,
        "willmore_conormal": lambda: q.conormal_mean_curvature_slope,
    }[lemma]()


# ---------------------------------------------------------------------------
# finite-difference verification
# ---------------------------------------------------------------------------


@dataclass
class LinearizationReport:
    """Convergence report of one finite-difference check."""

    lemma: str
    eps: tuple
    errors: list
    increments: list
    slope: float
    extrapolated_mismatch: float
    discretization_error: Optional[float] = None
    refinement_order: Optional[float] = None
    exact: bool = False
    scale: float = 1.0
    mismatch_history: list = field(default_factory=list)

    @property
    def roundoff_consistent(self):
        """The discrete linearization matches to round-off, so neither the
        discretization error nor a refinement order is observable."""
        return self.extrapolated_mismatch <= ROUNDOFF_FLOOR * max(self.scale, 1.0)

    def passed(self, slope_range=(1.8, 2.2), exact_tol=1e-12, min_order=1.5):
        if self.exact:
            return max(self.errors) <= exact_tol * max(1.0, self.scale)
        ok = slope_range[0] <= self.slope <= slope_range[1]
        if self.roundoff_consistent:
            return bool(ok)
        if self.discretization_error is not None:
            ok = ok and self.extrapolated_mismatch <= self.discretization_error
        if self.refinement_order is not None:
            ok = ok and self.refinement_order >= min_order
        return bool(ok)

    def rows(self):
        """``(lemma, eps, error, slope)`` rows for tabular output."""
        return [(self.lemma, e, err, self.slope) for e, err in zip(self.eps, self.errors)]


def _central_difference(lemma, rho, eps):
    plus = nonlinear_quantity(lemma, rho.with_values(eps * rho.values, ghost=None))
    minus = nonlinear_quantity(lemma, rho.with_values(-eps * rho.values, ghost=None))
    return (np.asarray(plus) - np.asarray(minus)) / (2.0 * eps)


def _max_abs(x):
    return float(np.max(np.abs(x)))


def _difference_data(lemma, rho, eps):
    lin = np.asarray(linearized_quantity(lemma, rho, rho.map))
    diffs = [np.asarray(_central_difference(lemma, rho, e)) for e in eps]
    return lin, diffs


def _richardson(diffs, eps):
    r2 = (eps[-2] / eps[-1]) ** 2
    return (r2 * diffs[-1] - diffs[-2]) / (r2 - 1.0)


def _coarse_from_fine(lemma, fine, coarse_grid, fine_grid):
    """Restrict a fine-grid result to the coarse grid nodes."""
    if np.ndim(fine) == 0:
        return fine
    if lemma in BOUNDARY_LEMMAS:
        return fine[::2]
    cols = fine[:, ::2]
    s_f = fine_grid.s_rows(fine_grid.n_v)
    s_c = coarse_grid.s_rows(coarse_grid.n_v)
    return CubicSpline(s_f, cols, axis=0)(s_c)


def fd_verify(lemma, rho_dot, cmap=None, eps=(1e-2, 5e-3, 2.5e-3), refine=2):
    """Compare centered differences of the nonlinear quantity with its
    linearization.

    ``errors[i]`` is the max-norm difference at ``eps[i]``.  The fitted slope
    uses the increments between consecutive differences, which removes the
    grid-dependent mismatch.  With ``refine > 0`` (and a callable
    ``rho_dot``) the check is repeated on grids refined ``refine`` times by
    two: the first refinement gives a two-grid estimate of the
    discretization error of both sides (with the usual 1.25 safety factor of
    grid convergence studies), and all grids give a least-squares order of
    the mismatch.
    """
    if lemma not in LEMMA_IDS:
        raise ConfigError(f"unknown linearization id {lemma!r}")
    eps = tuple(float(e) for e in eps)
    if len(eps) < 3:
        raise ConfigError("fd_verify needs at least three step sizes")
    if cmap is None:
        cmap = rho_dot.map
    rho = _as_height(rho_dot, cmap)
    lin, diffs = _difference_data(lemma, rho, eps)
    errors = [_max_abs(d - lin) for d in diffs]
    increments = [_max_abs(diffs[i] - diffs[i + 1]) for i in range(len(eps) - 1)]
    scale = max(_max_abs(lin), 1e-300)
    exact = lemma in EXACT_LEMMAS
    if exact or increments[-1] == 0.0:
        slope = float("nan")
    else:
        slope = math.log(increments[-2] / increments[-1]) / math.log(eps[-3] / eps[-2])
    extrap = _richardson(diffs, eps)
    mismatch = _max_abs(extrap - lin)
    report = LinearizationReport(
        lemma=lemma, eps=eps, errors=errors, increments=increments, slope=slope,
        extrapolated_mismatch=mismatch, exact=exact, scale=scale,
    )
    if refine and callable(rho_dot) and not exact:
        h, mismatches = [1.0], [mismatch]
        coarse, c_lin, c_ex = cmap, lin, extrap
        for level in range(int(refine)):
            fine = refined_map(coarse)
            f_lin, f_diffs = _difference_data(lemma, _as_height(rho_dot, fine), eps)
            f_ex = _richardson(f_diffs, eps)
            if level == 0:
                est = _max_abs(c_lin - _coarse_from_fine(lemma, f_lin, coarse.grid, fine.grid))
                est += _max_abs(c_ex - _coarse_from_fine(lemma, f_ex, coarse.grid, fine.grid))
                report.discretization_error = GCI_SAFETY * est * 4.0 / 3.0
            h.append(h[-1] / 2.0)
            mismatches.append(_max_abs(f_ex - f_lin))
            coarse, c_lin, c_ex = fine, f_lin, f_ex
        report.mismatch_history = mismatches
        if min(mismatches) > 0:
            report.refinement_order = float(np.polyfit(np.log(h), np.log(mismatches), 1)[0])
        else:
            report.refinement_order = float("inf")
    return report


def refined_map(cmap):
    """The same reference configuration on a grid refined by two."""
    from .container_coords import build_curvilinear_map

    cache = _cache(cmap)
    if "refined" not in cache:
        spec = cmap.surface.spec
        fine_spec = replace(spec, n_u=2 * spec.n_u, n_v=2 * spec.n_v)
        surface = build_reference_surface(fine_spec, container=cmap.surface.container)
        cache["refined"] = build_curvilinear_map(surface, v_cut=cmap.v_cut, eps0_cap=cmap.eps0)
    return cache["refined"]
