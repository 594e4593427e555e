"""Right-hand sides of the two flows as functions of the height unknowns.

Unknown vectors are flattened row-major grids.  The capillary (mean
curvature) flow uses the ``n_v`` physical rows; the ghost row past the
contact curve is extrapolated.  The bending (Willmore) flow also carries the
ghost row as an unknown, fixed by the algebraic condition ``H = 0`` on the
contact curve.
"""

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .perturbed_geometry import HeightField, evaluate, wetted_area
from .perturbed_geometry import volume_origin
from .surface_core import derivative_matrices

FLOW_KINDS = ("mcf", "willmore")


def _cache(cmap):
    return cmap.__dict__.setdefault("_cache", {})


def grid_derivative_matrices(cmap):
    """Sparse derivative stencils from ``n_v + 1`` rows to ``n_v`` rows."""
    c = _cache(cmap)
    if "dmats" not in c:
        c["dmats"] = derivative_matrices(cmap.grid.n_v + 1, cmap.grid)
    return c["dmats"]


class FlowProblem:
    """Maps unknown vectors to time derivatives of the heights."""

    def __init__(self, kind, cmap, a, b, correct=True):
        if kind not in FLOW_KINDS:
            raise ConfigError(f"flow must be one of {FLOW_KINDS}")
        if not b > 0:
            raise ConfigError("b: line tension must satisfy b > 0")
        self.kind = kind
        self.map = cmap
        self.a = float(a)
        self.b = float(b)
        self.correct = correct
        g = cmap.grid
        self.grid = g
        self.rows = g.n_v if kind == "mcf" else g.n_v + 1
        self.size = self.rows * g.n_u
        self.mass = np.ones(self.size)
        if kind == "willmore":
            self.mass[g.n_v * g.n_u:] = 0.0

    # -- packing -------------------------------------------------------------

    def unpack(self, x, time=0.0):
        g = self.grid
        x = np.asarray(x, dtype=float).reshape(self.rows, g.n_u)
        if self.kind == "mcf":
            return HeightField(x.copy(), self.map, time)
        return HeightField(x[: g.n_v].copy(), self.map, time, ghost=x[g.n_v].copy())

    def pack(self, rho):
        if self.kind == "mcf":
            return rho.values.ravel().copy()
        return rho.extended().ravel().copy()

    # -- right-hand side -------------------------------------------------------

    def rates(self, x, multiplier=None, time=0.0, check_tube=True):
        """Return ``(rate vector, quantities, multiplier)``."""
        rho = self.unpack(x, time)
        q = evaluate(rho, correct=self.correct, check_tube=check_tube)
        g = self.grid
        bidx = g.boundary_row
        ext = rho.extended()
        dw = self.map.dw(ext, check_tube=False)
        c_int = np.einsum("ijk,ijk->ij", q.normal, dw[: g.n_v])
        c_b = np.einsum("ki,ki->k", q.wall_conormal, dw[bidx])
        out = np.zeros((self.rows, g.n_u))
        if self.kind == "mcf":
            law = self.a + self.b * q.geodesic_curvature + q.cos_alpha
            out[bidx] = law / c_b
            if multiplier is None:
                multiplier = self.volume_multiplier(q, ext, dw, c_int, out[bidx])
            out[:bidx] = (q.mean_curvature[:bidx] - multiplier) / c_int[:bidx]
        else:
            law = (0.5 * q.sin_alpha * q.conormal_mean_curvature_slope
                   + self.a + self.b * q.geodesic_curvature)
            out[:bidx] = q.willmore_operator()[:bidx] / c_int[:bidx]
            out[bidx] = law / c_b
            out[g.n_v] = q.mean_curvature[bidx]
        return out.ravel(), q, multiplier

    def volume_multiplier(self, q, ext, dw, c_int, boundary_rate):
        """Multiplier that makes the discrete volume stationary.

        Chosen so that the exact derivative of the discrete enclosed volume
        along the semi-discrete rates vanishes; it differs from the area mean
        of ``H`` by the quadrature error.
        """
        g = self.grid
        bidx = g.boundary_row
        grad = fold_ghost(volume_gradient(self.map, q, dw))
        weight = grad[:bidx] / c_int[:bidx]
        denom = np.sum(weight)
        num = np.sum(weight * q.mean_curvature[:bidx]) + np.sum(grad[bidx] * boundary_rate)
        return float(num / denom)


def fold_ghost(field_ext):
    """Transpose of cubic ghost extrapolation: ``n_v + 1`` rows to ``n_v``."""
    out = field_ext[:-1].copy()
    ghost = field_ext[-1]
    for k, wgt in enumerate((4.0, -6.0, 4.0, -1.0)):
        out[-1 - k] += wgt * ghost
    return out


def volume_gradient(cmap, q, dw, ring_step=1e-6):
    """Derivative of the discrete enclosed volume w.r.t. each height value.

    Returns an array on ``n_v + 1`` rows (the last row is the ghost row).
    """
    surface = cmap.surface
    g = cmap.grid
    nv, nu = g.n_v, g.n_u
    mats = grid_derivative_matrices(cmap)
    geo = q.geometry
    positions = geo.positions
    origin = volume_origin(surface.container)
    rel = positions[:nv] - origin
    fac = (surface.orientation * g.dtheta / 3.0) * g.quadrature_rows()[:, None, None]
    gx = np.zeros((nv + 1, nu, 3))
    gx[:nv] += fac * np.cross(geo.xs, geo.xt)
    us = fac * np.cross(geo.xt, rel)
    ut = fac * np.cross(rel, geo.xs)
    ds_t = mats["s"].T
    dt_t = mats["t"].T
    for k in range(3):
        gx[..., k] += (ds_t @ us[..., k].ravel() + dt_t @ ut[..., k].ravel()).reshape(nv + 1, nu)
    ring = positions[g.boundary_row]
    eye = np.eye(3)
    pert = (ring_step * eye)[:, None, None, :] * np.eye(nu)[None, :, :, None]
    plus = wetted_area(surface, ring[None, None] + pert)
    minus = wetted_area(surface, ring[None, None] - pert)
    darea = ((plus - minus) / (2.0 * ring_step)).T
    gx[g.boundary_row] += surface.container.wall_offset() / 3.0 * darea
    return np.einsum("ijk,ijk->ij", gx, dw)


# ---------------------------------------------------------------------------
# colored finite-difference Jacobians
# ---------------------------------------------------------------------------


def node_adjacency(rows, n_u):
    """Nearest-neighbour adjacency of grid nodes, including across the pole."""
    half = n_u // 2
    r, c = np.meshgrid(np.arange(rows), np.arange(n_u), indexing="ij")
    r = r.ravel()
    c = c.ravel()
    src, dst = [], []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            r2 = r + dr
            c2 = c + dc
            pole = r2 < 0
            c2 = np.where(pole, c2 + half, c2) % n_u
            r2 = np.where(pole, 0, r2)
            ok = r2 < rows
            src.append((r * n_u + c)[ok])
            dst.append((r2 * n_u + c2)[ok])
    n = rows * n_u
    data = np.ones(sum(len(s) for s in src), dtype=bool)
    return sp.csr_matrix((data, (np.concatenate(src), np.concatenate(dst))), shape=(n, n))


def dependency_pattern(rows, n_u, radius=2, band_rows=6, band_cols=3, boundary_res_rows=2):
    """Superset of the residual/unknown dependency pattern of both flows."""
    adj = node_adjacency(rows, n_u).astype(np.int32)
    pat = adj
    for _ in range(radius - 1):
        pat = (pat @ adj).astype(bool).astype(np.int32)
    r, c = np.meshgrid(np.arange(rows), np.arange(n_u), indexing="ij")
    res_nodes = np.where(r.ravel() >= rows - boundary_res_rows)[0]
    unk_nodes = np.where(r.ravel() >= rows - boundary_res_rows - band_rows)[0]
    cr = c.ravel()
    src, dst = [], []
    for i in res_nodes:
        dc = (cr[unk_nodes] - cr[i] + n_u // 2) % n_u - n_u // 2
        sel = unk_nodes[np.abs(dc) <= band_cols]
        src.append(np.full(len(sel), i))
        dst.append(sel)
    n = rows * n_u
    band = sp.csr_matrix(
        (np.ones(sum(len(s) for s in src), dtype=np.int32), (np.concatenate(src), np.concatenate(dst))),
        shape=(n, n),
    )
    return (pat + band).astype(bool).tocsr()


def greedy_coloring(pattern):
    """Column coloring so that no two columns of a color share a row."""
    pint = pattern.astype(np.int32)
    conflict = (pint.T @ pint).tocsr()
    n = conflict.shape[0]
    colors = -np.ones(n, dtype=np.int64)
    for j in range(n):
        nb = conflict.indices[conflict.indptr[j]:conflict.indptr[j + 1]]
        used = set(colors[nb].tolist())
        k = 0
        while k in used:
            k += 1
        colors[j] = k
    return colors


def colored_jacobian(fun, x0, pattern, colors, delta=1e-6):
    """Centered finite-difference Jacobian restricted to ``pattern``.

    ``delta`` may be a scalar or one step per unknown.
    """
    coo = pattern.tocoo()
    ncol = int(colors.max()) + 1
    step = np.broadcast_to(np.asarray(delta, dtype=float), x0.shape)
    diffs = np.empty((ncol, pattern.shape[0]))
    for k in range(ncol):
        e = np.where(colors == k, step, 0.0)
        diffs[k] = fun(x0 + e) - fun(x0 - e)
    vals = diffs[colors[coo.col], coo.row] / (2.0 * step[coo.col])
    return sp.csr_matrix((vals, (coo.row, coo.col)), shape=pattern.shape)


def jacobian_steps(problem, delta, spacing=0.05):
    """Per-unknown steps shrunk near the pole.

    Node rings there have spacing ``s * dtheta``, and the discrete curvature
    stops being linear once a perturbation is a noticeable fraction of it.
    """
    g = problem.grid
    s = g.s_rows(problem.rows)
    scale = np.minimum(1.0, s * g.dtheta / spacing)
    return np.repeat(delta * scale, g.n_u)


def problem_jacobian(problem, x0=None, delta=1e-6, multiplier=None):
    """Colored finite-difference Jacobian of ``problem.rates`` at ``x0``."""
    x0 = np.zeros(problem.size) if x0 is None else np.asarray(x0, dtype=float)
    c = _cache(problem.map)
    key = ("pattern", problem.kind)
    if key not in c:
        pat = dependency_pattern(problem.rows, problem.grid.n_u)
        c[key] = (pat, greedy_coloring(pat))
    pat, colors = c[key]
    if problem.kind == "mcf" and multiplier is None:
        multiplier = problem.rates(x0, check_tube=False)[2]

    def fun(x):
        return problem.rates(x, multiplier=multiplier, check_tube=False)[0]

    return colored_jacobian(fun, x0, pat, colors, jacobian_steps(problem, delta))
