"""Curvilinear coordinates that keep the contact curve on the container wall.

A point of the reference surface ``q`` and a normal offset ``w`` are mapped
to ``q + w n(q) + t(q, w) T(q)``.  ``T`` is the unit outward chart conormal
multiplied by a smooth cutoff that equals one near the contact curve and
vanishes away from it.  On the contact curve ``t`` is the tangential
correction that puts the image back on the wall (solved by Newton's method);
at interior nodes the value of the boundary node in the same column is
reused, scaled by the cutoff.
"""

from dataclasses import dataclass

import numpy as np

from .containers import Ball, ContainerLevelSet, HalfSpace, make_container
from .errors import OffsetSolverError, TubeViolationError
from .surface_core import field_derivatives, smoothstep_cutoff

__all__ = [
    "Ball", "ContainerLevelSet", "HalfSpace", "make_container", "CurvilinearMap",
    "build_curvilinear_map", "solve_offset", "dw_psi_at_zero", "cross_relation_check",
]


@dataclass
class CurvilinearMap:
    """Offset map around a reference surface.

    Fields cover the ``n_v + 1`` rows of the reference geometry (one ghost
    row past the contact curve).
    """

    surface: object
    container: object
    v_cut: float
    eps0: float
    base: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    cutoff: np.ndarray
    newton_tol: float = 1e-13
    newton_maxiter: int = 60

    @property
    def grid(self):
        return self.surface.grid

    @property
    def boundary_row(self):
        return self.surface.grid.boundary_row

    def _boundary_data(self):
        b = self.boundary_row
        return self.base[b], self.normal[b], self.tangent[b]

    # -- tangential correction ------------------------------------------------

    def offset(self, w, check_tube=True):
        """Tangential correction ``t~`` on the contact curve for offsets ``w``.

        ``w`` has trailing axis of length ``n_u``; leading axes broadcast.
        """
        w = np.asarray(w, dtype=float)
        if check_tube and w.size and np.abs(w).max() >= self.eps0:
            raise TubeViolationError(
                f"offset {np.abs(w).max():.4g} outside the admissible tube (eps0={self.eps0:.4g})"
            )
        q, n, tan = self._boundary_data()
        return _newton_offset(self.container, q, n, tan, w, self.newton_tol, self.newton_maxiter)

    def offset_slope(self, w, t):
        """``d t~ / d w`` at the solved offsets (implicit differentiation)."""
        q, n, tan = self._boundary_data()
        p = q + np.asarray(w)[..., None] * n + np.asarray(t)[..., None] * tan
        g = self.container.gradient(p)
        return -np.einsum("...i,...i->...", g, n) / np.einsum("...i,...i->...", g, tan)

    # -- the map itself ---------------------------------------------------------

    def positions(self, rho_ext, check_tube=True):
        """Image points for a height field on ``n_v + 1`` rows."""
        rho_ext = np.asarray(rho_ext, dtype=float)
        t = self.offset(rho_ext, check_tube=check_tube)
        return self.base + rho_ext[..., None] * self.normal + t[..., None] * self.tangent

    def dw(self, rho_ext, check_tube=True):
        """``d Psi / d w`` evaluated at the given offsets."""
        rho_ext = np.asarray(rho_ext, dtype=float)
        t = self.offset(rho_ext, check_tube=check_tube)
        slope = self.offset_slope(rho_ext, t)
        return self.normal + slope[..., None] * self.tangent

    def dw_at_zero(self):
        zero = np.zeros(self.base.shape[:2])
        return self.dw(zero)


def _newton_offset(container, q, n, tan, w, tol, maxiter):
    shape = np.broadcast_shapes(w.shape, q.shape[:-1])
    w = np.broadcast_to(w, shape)
    t = np.zeros(shape)
    base = q + w[..., None] * n
    gnorm0 = np.linalg.norm(container.gradient(q), axis=-1)
    done = False
    res = None
    for _ in range(maxiter):
        p = base + t[..., None] * tan
        f = container.value(p)
        g = container.gradient(p)
        slope = np.einsum("...i,...i->...", g, tan)
        if np.any(np.abs(slope) < 1e-14 * gnorm0):
            break
        step = f / slope
        t = t - step
        res = np.abs(container.value(base + t[..., None] * tan)) / gnorm0
        if np.all(np.abs(step) <= tol * (1.0 + np.abs(t))) or np.all(res <= tol):
            done = True
            break
    if not done or not np.all(np.isfinite(t)):
        worst = None if res is None else float(np.nanmax(res))
        raise OffsetSolverError(
            f"Newton iteration for the tangential offset did not converge "
            f"(max normalized residual {worst}, max |w| {float(np.abs(w).max()):.4g})"
        )
    return t


def build_curvilinear_map(surface, v_cut=0.3, eps0_cap=0.5):
    """Construct the offset map and estimate the admissible tube width."""
    grid = surface.grid
    rows = grid.n_v + 1
    geo = surface.geometry
    fields = geo.fields
    base = surface.positions[:rows]
    normal = fields["normal"][:rows]
    raw = fields["gss"][:rows, :, None] * geo.xs[:rows] + fields["gst"][:rows, :, None] * geo.xt[:rows]
    unit = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
    v = 1.0 - grid.s_rows(rows)
    cut = smoothstep_cutoff(v, v_cut)
    tangent = cut[:, None, None] * unit
    cmap = CurvilinearMap(
        surface=surface, container=surface.container, v_cut=float(v_cut), eps0=float(eps0_cap),
        base=base, normal=normal, tangent=tangent, cutoff=cut,
    )
    cmap.eps0 = _estimate_tube(cmap, eps0_cap)
    return cmap


def _estimate_tube(cmap, cap):
    """Largest ``w = cap * 2**-k`` for which Newton converges at every
    boundary node for both signs of ``w``."""
    n_u = cmap.grid.n_u
    w = float(cap)
    for _ in range(40):
        try:
            for sign in (1.0, -1.0):
                t = cmap.offset(np.full(n_u, sign * w), check_tube=False)
                if not np.all(np.isfinite(t)):
                    raise OffsetSolverError("non-finite offset")
            return w
        except OffsetSolverError:
            w *= 0.5
    raise OffsetSolverError("could not find an admissible tube width")


def solve_offset(cmap, node, w):
    """Tangential offset ``t`` for boundary node(s) ``node`` (column index)."""
    t = cmap.offset(np.full(cmap.grid.n_u, float(w)))
    return t[node]


def dw_psi_at_zero(cmap, node=None):
    """``d Psi / d w`` at zero offset on the physical rows.

    With ``node`` given as ``(row, col)`` a single vector is returned.
    """
    d = cmap.dw_at_zero()[: cmap.grid.n_v]
    if node is None:
        return d
    return d[node]


def cross_relation_check(cmap, dw_step=1e-5):
    """Residuals of the cross-product identities of the offset map on the
    contact curve.

    Chart derivatives are finite differences of the map, the offset
    derivative is a centered difference in ``w``, and frames come from the
    reference surface.  Returns the maximum residual per identity.
    """
    surf = cmap.surface
    grid = surf.grid
    b = grid.boundary_row
    fr = surf.frames
    geo = surf.geometry
    sign = np.sign(np.einsum("ki,ki->k", geo.xt[b], fr.tau))
    d1 = sign[:, None] * geo.xt[b] / np.linalg.norm(geo.xt[b], axis=-1, keepdims=True)
    d2 = geo.xs[b] / np.linalg.norm(geo.xs[b], axis=-1, keepdims=True)
    n_u = grid.n_u
    plus = cmap.base[b] + dw_step * cmap.normal[b] + cmap.offset(np.full(n_u, dw_step))[:, None] * cmap.tangent[b]
    minus = cmap.base[b] - dw_step * cmap.normal[b] + cmap.offset(np.full(n_u, -dw_step))[:, None] * cmap.tangent[b]
    dwpsi = (plus - minus) / (2.0 * dw_step)

    dfield = cmap.dw_at_zero()
    dws, dwt = field_derivatives(dfield, grid)[:2]
    nrm = cmap.normal
    ns, nt = field_derivatives(nrm, grid)[:2]
    speed_t = np.linalg.norm(geo.xt[b], axis=-1)[:, None]
    speed_s = np.linalg.norm(geo.xs[b], axis=-1)[:, None]
    ddw = {1: sign[:, None] * dwt[b] / speed_t, 2: dws[b] / speed_s}
    dn = {1: sign[:, None] * nt[b] / speed_t, 2: ns[b] / speed_s}

    n_star = fr.normal
    con = fr.conormal
    tau = fr.tau
    cot = fr.cos_alpha / fr.sin_alpha

    def dot(a, c):
        return np.einsum("ki,ki->k", a, c)

    def err(x):
        return float(np.max(np.linalg.norm(x, axis=-1)))

    out = {
        "iv": err(np.cross(d1, d2) - n_star),
        "v": err(np.cross(dwpsi, d2) + tau),
        "vi": err(np.cross(d1, dwpsi) + con + cot[:, None] * n_star),
    }
    vii, viii = 0.0, 0.0
    for i in (1, 2):
        k = cot * dot(dn[i], con)
        lhs7 = np.cross(d1, ddw[i])
        rhs7 = dot(ddw[i], con)[:, None] * n_star - k[:, None] * con
        lhs8 = np.cross(ddw[i], d2)
        rhs8 = dot(ddw[i], tau)[:, None] * n_star - k[:, None] * tau
        vii = max(vii, err(lhs7 - rhs7))
        viii = max(viii, err(lhs8 - rhs8))
    out["vii"] = vii
    out["viii"] = viii
    return out
