"""Time integration of the capillary and bending flows.

Each step is linearly implicit with the Jacobian of the flow at the
reference surface on the left:

    (M / dt - J) x_new = M x_old / dt + R(x_k) - J x_k

where ``R`` is the full nonlinear right-hand side and ``x_k`` the current
Picard iterate (``x_k = x_old`` for the first solve).  ``M`` is the identity
except on the constraint rows of the bending flow, where it vanishes, so
those rows enforce the linearized ``H = 0`` condition with the nonlinear
remainder on the right.  The mean-curvature multiplier of the capillary
flow is evaluated explicitly at ``x_k``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve

from .errors import CompatibilityError, ConfigError, GeometryError, SolverError, TubeViolationError
from .flows import FlowProblem, _cache, colored_jacobian, greedy_coloring
from .linearization import assemble
from .perturbed_geometry import HeightField, TUBE_SAFETY, evaluate, max_stationarity_residual
from .surface_core import smoothstep_cutoff

ENERGY_KIND = {"mcf": "capillary", "willmore": "willmore"}


@dataclass(frozen=True)
class FlowConfig:
    kind: str = "mcf"
    a: float = 0.0
    b: float = 1.0
    dt: float = 1e-3
    T: float = 0.1
    picard_sweeps: int = 1
    picard_tol: float = 1e-12
    tube_safety: float = TUBE_SAFETY
    cadence: int = 1
    max_halvings: int = 5
    correct: bool = True
    compatibility_tol: float = 5e-2

    def validate(self):
        if self.kind not in ENERGY_KIND:
            raise ConfigError(f"flow: must be one of {tuple(ENERGY_KIND)}")
        if not math.isfinite(self.a):
            raise ConfigError("a: must be a finite real number")
        if not self.b > 0:
            raise ConfigError("b: line tension must satisfy b > 0")
        if not self.dt > 0:
            raise ConfigError("dt: must satisfy dt > 0")
        if not self.T >= 0:
            raise ConfigError("T: must satisfy T >= 0")
        if self.picard_sweeps < 0:
            raise ConfigError("picard_sweeps: must be >= 0")
        if not self.picard_tol > 0:
            raise ConfigError("picard_tol: must be > 0")
        if not 0 < self.tube_safety <= 1:
            raise ConfigError("tube_safety: must lie in (0, 1]")
        if self.cadence < 1:
            raise ConfigError("cadence: must be >= 1")
        if self.max_halvings < 0:
            raise ConfigError("max_halvings: must be >= 0")
        return self


DIAGNOSTIC_KEYS = (
    "t", "volume", "area", "boundary_length", "energy", "mean_H", "stationarity_residual",
    "picard_iters",
)


@dataclass
class FlowTrajectory:
    config: FlowConfig
    times: list = field(default_factory=list)
    heights: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=lambda: {k: [] for k in DIAGNOSTIC_KEYS})
    rejections: int = 0
    energies: list = field(default_factory=list)

    def record(self, rho, q, picard_iters):
        cfg = self.config
        d = self.diagnostics
        d["t"].append(float(rho.time))
        d["volume"].append(q.volume)
        d["area"].append(q.area)
        d["boundary_length"].append(q.boundary_length)
        d["energy"].append(q.energy(ENERGY_KIND[cfg.kind], cfg.a, cfg.b))
        d["mean_H"].append(q.mean_H)
        d["stationarity_residual"].append(max_stationarity_residual(q, cfg.kind, cfg.a, cfg.b))
        d["picard_iters"].append(int(picard_iters))
        self.times.append(float(rho.time))
        self.heights.append(rho)

    @property
    def final(self):
        return self.heights[-1]

    def column(self, key):
        return np.asarray(self.diagnostics[key])


def calibrated_a(kind, cmap, b, correct=True):
    """``a`` that makes the reference surface satisfy the boundary balance.

    Uses the discrete contact-curve data of the reference surface, averaged
    along the curve.
    """
    q = evaluate(HeightField.zeros(cmap), correct=correct)
    if kind == "mcf":
        vals = -b * q.geodesic_curvature - q.cos_alpha
    elif kind == "willmore":
        vals = -b * q.geodesic_curvature - 0.5 * q.sin_alpha * q.conormal_mean_curvature_slope
    else:
        raise ConfigError(f"unknown flow kind {kind!r}")
    return float(np.mean(vals))


class Stepper:
    """Holds the flow problem, its Jacobian and cached factorizations."""

    def __init__(self, system, cmap, cfg):
        self.cfg = cfg
        self.system = system
        self.problem = FlowProblem(cfg.kind, cmap, cfg.a, cfg.b, correct=cfg.correct)
        self.mass = sp.diags(self.problem.mass)
        self.jac = system.jacobian.tocsc()
        self._lu = {}
        self._last = None

    def factor(self, dt):
        if dt not in self._lu:
            try:
                self._lu[dt] = splu((self.mass / dt - self.jac).tocsc())
            except RuntimeError as exc:
                raise SolverError(f"factorization failed for dt={dt:g}: {exc}") from exc
        return self._lu[dt]

    def rates(self, x, time):
        key = x.tobytes()
        if self._last is not None and self._last[0] == key:
            return self._last[1], self._last[2]
        r, q, _ = self.problem.rates(x, time=time)
        self._last = (key, r, q)
        return r, q

    def single_step(self, x_old, t_old, dt):
        """One linearly implicit step plus Picard sweeps."""
        lu = self.factor(dt)
        mx = self.problem.mass * x_old / dt
        xk = x_old
        iters = 0
        prev_inc = None
        for sweep in range(self.cfg.picard_sweeps + 1):
            r, _ = self.rates(xk, t_old)
            x_new = lu.solve(mx + r - self.jac @ xk)
            if not np.all(np.isfinite(x_new)):
                raise SolverError(f"non-finite solution at t={t_old + dt:.6g}")
            inc = float(np.max(np.abs(x_new - xk))) if sweep else None
            xk = x_new
            iters = sweep
            if sweep:
                if prev_inc is not None and inc > prev_inc:
                    raise SolverError(f"Picard iteration diverges at t={t_old + dt:.6g}")
                prev_inc = inc
                if inc <= self.cfg.picard_tol * max(1.0, float(np.max(np.abs(xk)))):
                    break
        rho = self.problem.unpack(xk, t_old + dt)
        rho.check_tube(self.cfg.tube_safety)
        _, q = self.rates(xk, t_old + dt)
        return xk, q, iters

    def advance(self, x_old, t_old, dt):
        """Advance by ``dt``; on failure retry with ``2**k`` substeps."""
        last_exc = None
        for level in range(self.cfg.max_halvings + 1):
            sub = 2 ** level
            h = dt / sub
            try:
                x, t, iters = x_old, t_old, 0
                for k in range(sub):
                    t_next = t_old + (k + 1) * h
                    x, q, it = self.single_step(x, t, h)
                    t = t_next
                    iters = max(iters, it)
                return x, q, iters, level
            except (TubeViolationError, SolverError, GeometryError) as exc:
                last_exc = exc
        raise type(last_exc)(f"step from t={t_old:.6g} failed after {self.cfg.max_halvings} "
                             f"halvings: {last_exc}") from last_exc


def _stepper_for(system, rho, cfg):
    cache = _cache(rho.map)
    key = ("stepper", id(system), cfg.kind, cfg.a, cfg.b, cfg.correct, cfg.picard_sweeps,
           cfg.picard_tol, cfg.tube_safety, cfg.max_halvings)
    st = cache.get(key)
    if st is None or st.system is not system:
        st = Stepper(system, rho.map, cfg)
        cache[key] = st
    return st


def step_mcf(rho, system, cfg):
    """One capillary-flow step of size ``cfg.dt``."""
    if cfg.kind != "mcf" or system.kind != "mcf":
        raise ConfigError("step_mcf needs a capillary-flow configuration and system")
    st = _stepper_for(system, rho, cfg)
    x, _, _, _ = st.advance(st.problem.pack(rho), rho.time, cfg.dt)
    return st.problem.unpack(x, rho.time + cfg.dt)


def step_willmore(rho, system, cfg):
    """One bending-flow step of size ``cfg.dt`` (``rho`` must carry its ghost row)."""
    if cfg.kind != "willmore" or system.kind != "willmore":
        raise ConfigError("step_willmore needs a bending-flow configuration and system")
    st = _stepper_for(system, rho, cfg)
    x, _, _, _ = st.advance(st.problem.pack(rho), rho.time, cfg.dt)
    return st.problem.unpack(x, rho.time + cfg.dt)


def compatible_start(rho, tol, correct=True, width=0.3, newton_tol=1e-12, maxiter=20):
    """Check ``H = 0`` on the contact curve, then enforce it smoothly.

    The correction ``q(s) phi(theta)`` with ``q = (1 - s)^2 / 2`` times a cutoff
    of the given width leaves the heights and slopes on the curve unchanged
    and only adjusts the second normal derivative there.
    """
    g = rho.map.grid
    bidx = g.boundary_row
    base = rho.with_values(rho.values, ghost=None)

    def constraint(phi):
        vals = base.values + profile[:, None] * phi[None, :]
        q = evaluate(base.with_values(vals, ghost=None), correct=correct, check_tube=False)
        return q.mean_curvature[bidx]

    v = 1.0 - g.s
    profile = 0.5 * v ** 2 * smoothstep_cutoff(v, width)
    phi = np.zeros(g.n_u)
    r = constraint(phi)
    mismatch = float(np.max(np.abs(r)))
    if mismatch > tol:
        raise CompatibilityError(
            f"initial data violate H = 0 on the contact curve (max |H| = {mismatch:.3e} > {tol:g})"
        )
    pattern = sp.diags([1, 1, 1], [-1, 0, 1], shape=(g.n_u, g.n_u)).tolil()
    pattern[0, -1] = pattern[-1, 0] = 1
    pattern = pattern.tocsr().astype(bool)
    colors = greedy_coloring(pattern)
    for _ in range(maxiter):
        if np.max(np.abs(r)) <= newton_tol:
            break
        jac = colored_jacobian(constraint, phi, pattern, colors, 1e-6)
        phi = phi - spsolve(jac.tocsc(), r)
        r = constraint(phi)
    else:
        raise SolverError("could not enforce H = 0 on the contact curve for the initial data")
    return base.with_values(base.values + profile[:, None] * phi[None, :], ghost=None)


def run(cfg, rho0, system=None):
    """Integrate from ``rho0`` to ``cfg.T``; diagnostics every ``cadence`` steps."""
    cfg.validate()
    cmap = rho0.map
    if system is None:
        system = assemble(cfg.kind, cmap=cmap, a=cfg.a, b=cfg.b, correct=cfg.correct)
    st = _stepper_for(system, rho0, cfg)
    problem = st.problem
    rho0.check_tube(cfg.tube_safety)
    if cfg.kind == "willmore":
        rho0 = compatible_start(rho0, cfg.compatibility_tol, correct=cfg.correct)
    traj = FlowTrajectory(config=cfg)
    x = problem.pack(rho0)
    _, q = st.rates(x, rho0.time)
    traj.record(rho0, q, 0)
    nsteps = int(round(cfg.T / cfg.dt))
    if nsteps * cfg.dt < cfg.T * (1 - 1e-12):
        nsteps += 1
    t = rho0.time
    for n in range(nsteps):
        dt = min(cfg.dt, rho0.time + cfg.T - t) if n == nsteps - 1 else cfg.dt
        x, q, iters, level = st.advance(x, t, dt)
        traj.rejections += level
        t = rho0.time + (n + 1) * cfg.dt if n < nsteps - 1 else rho0.time + cfg.T
        if (n + 1) % cfg.cadence == 0 or n == nsteps - 1:
            traj.record(problem.unpack(x, t), q, iters)
    return traj


def with_calibration(cfg, cmap):
    """Copy of ``cfg`` whose ``a`` balances the reference contact curve."""
    return replace(cfg, a=calibrated_a(cfg.kind, cmap, cfg.b, cfg.correct))
