"""Numerical certificates for the parabolicity conditions of both flows.

Two conditions are checked:

* ellipticity: the principal interior symbol at unit covectors is exactly
  one (``|xi|^2`` for the capillary flow, ``|xi|^4`` for the bending flow);
* the Lopatinskii-Shapiro condition: after freezing coefficients at a
  boundary point, the half-line ODE with the boundary rows has only the
  trivial decaying solution.  For each flow this reduces to a scalar
  equation that must never hold; the scan samples it over the closed right
  half-plane of ``lambda`` and over tangential frequencies ``xi``.

Residuals are normalized by the sum of the magnitudes of the terms that
would have to cancel, so the reported numbers measure how close the
equation comes to holding independent of scale.  The fixed normalization
``1 + |lambda| + xi^2`` is reported as well.

``coefficients="stated"`` uses the boundary coefficients ``sin(alpha)``
(line tension) and ``sin(alpha)/2`` (bending conormal term);
``"derived"`` uses ``1`` and ``sin(alpha)**2 / 2``, which is what the
discrete boundary rows of :mod:`linearization` produce.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigError, ContactFlowError

COEFFICIENT_SETS = ("stated", "derived")
ARG_TOL = 1e-12


class BranchAmbiguityError(ContactFlowError):
    """A square root lies on the imaginary axis, which the admissible
    samples rule out."""


class DegenerateSampleError(ContactFlowError):
    """The sample needs the separate ``lambda = 0`` treatment."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolScanConfig:
    alphas: tuple = (math.pi / 6, math.pi / 4, math.pi / 2, 3 * math.pi / 4, 5 * math.pi / 6)
    b: float = 1.0
    xi_range: tuple = (1e-3, 1e3)
    xi_count: int = 25
    lambda_radii: tuple = (1e-3, 1e3)
    radial_count: int = 25
    angle_count: int = 32
    floor: float = 1e-3
    coefficients: str = "stated"

    def validate(self):
        if not self.alphas:
            raise ConfigError("symbol scan: empty angle sample set")
        for a in self.alphas:
            if not 0.0 < a < math.pi:
                raise ConfigError(f"symbol scan: alpha={a} outside (0, pi)")
        if not self.b > 0:
            raise ConfigError("symbol scan: b must be positive")
        lo, hi = self.xi_range
        if not 0 < lo < hi:
            raise ConfigError("symbol scan: xi range must satisfy 0 < lo < hi")
        rlo, rhi = self.lambda_radii
        if not 0 < rlo < rhi:
            raise ConfigError("symbol scan: lambda radii must satisfy 0 < lo < hi")
        if self.xi_count < 1 or self.radial_count < 1 or self.angle_count < 2:
            raise ConfigError("symbol scan: empty sample set")
        if self.coefficients not in COEFFICIENT_SETS:
            raise ConfigError(f"symbol scan: coefficients must be one of {COEFFICIENT_SETS}")
        if not self.floor > 0:
            raise ConfigError("symbol scan: floor must be positive")

    def xi_samples(self):
        """Non-negative frequencies including zero (symbols depend on xi^2)."""
        lo, hi = self.xi_range
        return np.concatenate([[0.0], np.geomspace(lo, hi, self.xi_count)])

    def lambda_samples(self):
        """Log-radial, angular grid on the closed right half-plane plus zero.

        The angular grid includes both ends, i.e. the imaginary axis.
        """
        r = np.geomspace(*self.lambda_radii, self.radial_count)
        phi = np.linspace(-0.5 * math.pi, 0.5 * math.pi, self.angle_count)
        lam = (r[:, None] * np.exp(1j * phi[None, :])).ravel()
        lam = np.maximum(lam.real, 0.0) + 1j * lam.imag
        on_axis = np.isclose(np.abs(phi), 0.5 * math.pi)
        lam = lam.reshape(len(r), len(phi))
        lam[:, on_axis] = 1j * np.sign(phi[on_axis]) * r[:, None]
        return np.concatenate([[0.0 + 0.0j], lam.ravel()])


def _coeffs(alpha, b, coefficients):
    s = math.sin(alpha)
    if coefficients == "stated":
        return b * s, s
    if coefficients == "derived":
        return b, s * s
    raise ConfigError(f"unknown coefficient set {coefficients!r}")


# ---------------------------------------------------------------------------
# ellipticity
# ---------------------------------------------------------------------------


def principal_symbol(kind, xi):
    """Principal interior symbol at covector ``xi`` (floating point)."""
    n2 = float(np.dot(xi, xi))
    if kind == "mcf":
        return n2
    if kind == "willmore":
        return n2 * n2
    raise ConfigError(f"unknown flow kind {kind!r}")


def rational_unit_vectors(count):
    """``count`` exactly unit covectors with rational entries.

    Uses the rational parametrization of the circle, so ``x^2 + y^2 == 1``
    holds in exact arithmetic; sign flips cover all four quadrants.
    """
    out = [(Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))]
    k = 1
    while len(out) < count:
        t = Fraction(k, count)
        den = 1 + t * t
        x, y = (1 - t * t) / den, 2 * t / den
        for sx, sy in ((1, 1), (-1, 1), (1, -1), (-1, -1)):
            out.append((sx * x, sy * y))
        k += 1
    return out[:count]


@dataclass(frozen=True)
class EllipticityReport:
    kind: str
    spectrum: frozenset
    max_deviation: Fraction
    directions: int

    @property
    def passed(self):
        return self.spectrum == frozenset({Fraction(1)}) and self.max_deviation == 0


def ellipticity_check(kind, directions=64):
    """Spectrum of the principal symbol over exact unit covectors."""
    if kind not in ("mcf", "willmore"):
        raise ConfigError(f"unknown flow kind {kind!r}")
    power = 1 if kind == "mcf" else 2
    values = []
    for x, y in rational_unit_vectors(directions):
        values.append((x * x + y * y) ** power)
    spectrum = frozenset(values)
    dev = max(abs(v - 1) for v in values)
    return EllipticityReport(kind=kind, spectrum=spectrum, max_deviation=dev, directions=directions)


# ---------------------------------------------------------------------------
# Lopatinskii-Shapiro residuals
# ---------------------------------------------------------------------------


def _check_sample(xi, lam):
    xi = np.asarray(xi, dtype=float)
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam.real < 0):
        raise ConfigError("lambda must lie in the closed right half-plane")
    if np.any((np.abs(xi) + np.abs(lam)) == 0):
        raise ConfigError("xi and lambda must not both vanish")
    return xi, lam


def ls_residual_mcf(xi, lam, alpha, b, coefficients="stated"):
    """``(lambda + c_b xi^2) + sin(alpha)^2 sqrt(lambda + xi^2)``.

    The root is the branch with positive real part; ``c_b`` is the
    line-tension coefficient of the chosen coefficient set.
    """
    xi, lam = _check_sample(xi, lam)
    cb, _ = _coeffs(alpha, b, coefficients)
    mu = np.sqrt(lam + xi * xi)
    if np.any(mu.real <= 0):
        raise BranchAmbiguityError("sqrt(lambda + xi^2) on the imaginary axis")
    return (lam + cb * xi * xi) + math.sin(alpha) ** 2 * mu


def _arg(z):
    return np.mod(np.angle(z), 2.0 * math.pi)


@dataclass(frozen=True)
class WillmoreResidual:
    L: np.ndarray
    R: np.ndarray
    gap: np.ndarray
    arg_L: np.ndarray
    arg_R: np.ndarray


def ls_residual_willmore(xi, lam, alpha, b, coefficients="stated", flip_root=False):
    """Both sides of the bending-flow boundary equation ``L = R``.

    ``L = c_w sqrt(-lambda) (mu_1 - mu_2) / 2`` with ``Im sqrt(-lambda) > 0``,
    ``mu_1 = sqrt(xi^2 + sqrt(-lambda))`` and ``mu_2 = sqrt(xi^2 - sqrt(-lambda))``
    (roots with positive real part), ``c_w`` the conormal coefficient of the
    coefficient set halved once more, and ``R = lambda + c_b xi^2``.
    ``flip_root`` uses the other root of ``-lambda`` (L must not change).
    """
    xi, lam = _check_sample(xi, lam)
    if np.any(lam == 0):
        raise DegenerateSampleError("lambda = 0 is handled by the degenerate check")
    cb, cw = _coeffs(alpha, b, coefficients)
    root = np.sqrt(-lam)
    root = np.where(root.imag > 0, root, -root)
    if np.any(root.imag <= 0):
        raise BranchAmbiguityError("sqrt(-lambda) is real")
    if flip_root:
        root = -root
    x2 = xi * xi
    mu1 = np.sqrt(x2 + root)
    mu2 = np.sqrt(x2 - root)
    if np.any(mu1.real <= 0) or np.any(mu2.real <= 0):
        raise BranchAmbiguityError("mu on the imaginary axis")
    L = 0.25 * cw * root * (mu1 - mu2)
    R = lam + cb * x2
    return WillmoreResidual(L=L, R=R, gap=np.abs(L - R), arg_L=_arg(L), arg_R=_arg(R))


def willmore_arg_ranges_hold(res, lam):
    """Check the disjoint argument ranges of both sides, sample by sample.

    ``Im lambda >= 0``: ``arg L`` in ``[pi, 7pi/4)`` and ``arg R`` in ``[0, pi/2]``;
    ``Im lambda < 0``: ``arg L`` in ``(pi/4, pi]`` and ``arg R`` in ``[3pi/2, 2pi]``.
    Returns a boolean array.
    """
    lam = np.asarray(lam, dtype=complex)
    pi = math.pi
    aL, aR = res.arg_L, res.arg_R
    # arguments at 0 and 2pi coincide; R on the positive real axis has arg 0
    upper = lam.imag >= 0
    case1 = (
        (aL >= pi - ARG_TOL) & (aL < 1.75 * pi)
        & ((aR <= 0.5 * pi + ARG_TOL) | (aR >= 2 * pi - ARG_TOL))
    )
    case2 = (
        (aL > 0.25 * pi) & (aL <= pi + ARG_TOL)
        & ((aR >= 1.5 * pi - ARG_TOL) | (aR <= ARG_TOL))
    )
    return np.where(upper, case1, case2)


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------


@dataclass
class SymbolCertificate:
    kind: str
    config: SymbolScanConfig
    samples: int
    min_normalized: float
    min_fixed_normalized: float
    worst_sample: tuple
    min_real_part: float = float("nan")
    degenerate_min: float = float("nan")
    ls_infinity_min: float = float("nan")
    arg_ranges_ok: bool = True
    arg_table: dict = field(default_factory=dict)

    @property
    def passed(self):
        floor = self.config.floor
        ok = self.min_normalized > floor and self.samples > 0
        if self.kind == "mcf":
            return bool(ok and self.min_real_part > 0)
        return bool(ok and self.degenerate_min > floor and self.ls_infinity_min > floor
                    and self.arg_ranges_ok)

    def lines(self):
        """Structured text with one PASS/FAIL line per condition."""
        floor = self.config.floor
        out = [f"flow={self.kind} coefficients={self.config.coefficients} "
               f"b={self.config.b:g} samples={self.samples}"]

        def row(name, value, ok):
            out.append(f"{name:34s} {value:.6e}  {'PASS' if ok else 'FAIL'}")

        row("min normalized residual", self.min_normalized, self.min_normalized > floor)
        out.append(f"{'min residual / (1+|lam|+xi^2)':34s} {self.min_fixed_normalized:.6e}  (reported)")
        if self.kind == "mcf":
            row("min Re(residual)", self.min_real_part, self.min_real_part > 0)
        else:
            row("lambda=0 residual b s xi^2 (norm.)", self.degenerate_min, self.degenerate_min > floor)
            row("min |lambda + b sin(alpha)| (norm.)", self.ls_infinity_min, self.ls_infinity_min > floor)
            row("argument ranges", float(self.arg_ranges_ok), self.arg_ranges_ok)
            for key, (lo_l, hi_l, lo_r, hi_r) in self.arg_table.items():
                out.append(f"  {key:10s} arg L in [{lo_l:.4f}, {hi_l:.4f}]  arg R in [{lo_r:.4f}, {hi_r:.4f}]")
        out.append(f"certificate: {'PASS' if self.passed else 'FAIL'}")
        return out


def _grid(config):
    xi = config.xi_samples()
    lam = config.lambda_samples()
    X, Lm = np.meshgrid(xi, lam, indexing="ij")
    keep = (np.abs(X) + np.abs(Lm)) > 0
    return X[keep], Lm[keep]


def ls_scan(kind, config=None):
    """Scan the Lopatinskii-Shapiro equation over the configured samples."""
    config = SymbolScanConfig() if config is None else config
    config.validate()
    xi, lam = _grid(config)
    if xi.size == 0:
        raise ConfigError("symbol scan: empty sample set")
    if kind == "mcf":
        return _scan_mcf(config, xi, lam)
    if kind == "willmore":
        return _scan_willmore(config, xi, lam)
    raise ConfigError(f"unknown flow kind {kind!r}")


def _scan_mcf(config, xi, lam):
    best = (np.inf, None)
    best_fixed = np.inf
    min_re = np.inf
    total = 0
    for alpha in config.alphas:
        cb, _ = _coeffs(alpha, config.b, config.coefficients)
        res = ls_residual_mcf(xi, lam, alpha, config.b, config.coefficients)
        terms = np.abs(lam + cb * xi * xi) + math.sin(alpha) ** 2 * np.abs(np.sqrt(lam + xi * xi))
        norm = np.abs(res) / terms
        k = int(np.argmin(norm))
        if norm[k] < best[0]:
            best = (float(norm[k]), (alpha, float(xi[k]), complex(lam[k])))
        best_fixed = min(best_fixed, float(np.min(np.abs(res) / (1 + np.abs(lam) + xi * xi))))
        min_re = min(min_re, float(np.min(res.real)))
        total += res.size
    return SymbolCertificate(
        kind="mcf", config=config, samples=total, min_normalized=best[0],
        min_fixed_normalized=best_fixed, worst_sample=best[1], min_real_part=min_re,
    )


def _scan_willmore(config, xi, lam):
    nonzero = lam != 0
    xi_n, lam_n = xi[nonzero], lam[nonzero]
    xi_0 = xi[~nonzero]
    lam_all = config.lambda_samples()
    best = (np.inf, None)
    best_fixed = np.inf
    deg = np.inf
    lsinf = np.inf
    args_ok = True
    table = {}
    total = 0
    for alpha in config.alphas:
        cb, _ = _coeffs(alpha, config.b, config.coefficients)
        res = ls_residual_willmore(xi_n, lam_n, alpha, config.b, config.coefficients)
        norm = res.gap / (np.abs(res.L) + np.abs(res.R))
        k = int(np.argmin(norm))
        if norm[k] < best[0]:
            best = (float(norm[k]), (alpha, float(xi_n[k]), complex(lam_n[k])))
        best_fixed = min(best_fixed, float(np.min(res.gap / (1 + np.abs(lam_n) + xi_n ** 2))))
        ok = willmore_arg_ranges_hold(res, lam_n)
        args_ok = args_ok and bool(np.all(ok))
        upper = lam_n.imag >= 0
        for key, sel in (("Im>=0", upper), ("Im<0", ~upper)):
            if not np.any(sel):
                continue
            aR = np.where(res.arg_R[sel] > 2 * math.pi - ARG_TOL, 0.0, res.arg_R[sel]) if key == "Im>=0" \
                else np.where(res.arg_R[sel] < ARG_TOL, 2 * math.pi, res.arg_R[sel])
            cur = (res.arg_L[sel].min(), res.arg_L[sel].max(), aR.min(), aR.max())
            if key in table:
                old = table[key]
                cur = (min(old[0], cur[0]), max(old[1], cur[1]), min(old[2], cur[2]), max(old[3], cur[3]))
            table[key] = cur
        # lambda = 0: the boundary row reduces to c_b xi^2 sigma = 0, a single term
        if xi_0.size:
            d = cb * xi_0 ** 2
            deg = min(deg, float(np.min(d / np.abs(d))))
        # reduced system at infinity: (lambda + b sin(alpha)) sigma = 0
        reduced = lam_all + cb
        lsinf = min(lsinf, float(np.min(np.abs(reduced) / (np.abs(lam_all) + cb))))
        total += res.gap.size + xi_0.size
    return SymbolCertificate(
        kind="willmore", config=config, samples=total, min_normalized=best[0],
        min_fixed_normalized=best_fixed, worst_sample=best[1], degenerate_min=deg,
        ls_infinity_min=lsinf, arg_ranges_ok=args_ok, arg_table=table,
    )


def degenerate_residual(xi, alpha, b, coefficients="stated"):
    """Bending flow at ``lambda = 0``: the boundary row is ``b sin(alpha) xi^2 sigma``."""
    cb, _ = _coeffs(alpha, b, coefficients)
    return cb * float(xi) ** 2


def ls_infinity_residual(lam, alpha, b, coefficients="stated"):
    """``|lambda + b sin(alpha)|`` of the reduced system at infinity."""
    cb, _ = _coeffs(alpha, b, coefficients)
    return abs(complex(lam) + cb)
