"""Pure numpy implementation of the grid kernels.

Used when the compiled extension is unavailable (or when forced through the
``CONTACTFLOW_BACKEND=python`` environment variable).  The compiled module
``_kernels`` exposes the same three functions with identical semantics.

Grid layout: arrays are indexed ``[row, col, ...]`` where rows run along the
radial chart coordinate ``s`` from the pole (row 0, at ``s = ds/2``) outward,
and columns run over the periodic angle.  The virtual row ``-1`` is row 0
rotated by half a turn, which is how stencils straddle the pole.
"""

import numpy as np


def grid_derivatives(f, ds, dth):
    """Centered second-order derivatives of a gridded field.

    Parameters
    ----------
    f : ndarray, shape (m + 1, n, c)
        Field values on rows ``0..m``.
    ds, dth : float
        Grid spacings in ``s`` and in the periodic angle.

    Returns
    -------
    tuple of ndarray, each of shape (m, n, c)
        ``(f_s, f_t, f_ss, f_st, f_tt)`` on rows ``0..m-1``.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[1]
    half = n // 2
    fp = f[1:]
    fc = f[:-1]
    fm = np.concatenate([np.roll(f[:1], -half, axis=1), f[:-2]], axis=0)
    f_s = (fp - fm) / (2.0 * ds)
    f_ss = (fp - 2.0 * fc + fm) / (ds * ds)
    right = np.roll(fc, -1, axis=1)
    left = np.roll(fc, 1, axis=1)
    f_t = (right - left) / (2.0 * dth)
    f_tt = (right - 2.0 * fc + left) / (dth * dth)
    dp = np.roll(fp, -1, axis=1) - np.roll(fp, 1, axis=1)
    dm = np.roll(fm, -1, axis=1) - np.roll(fm, 1, axis=1)
    f_st = (dp - dm) / (4.0 * ds * dth)
    return f_s, f_t, f_ss, f_st, f_tt


def surface_fields(xs, xt, xss, xst, xtt, orientation):
    """Pointwise differential geometry from chart derivatives.

    Returns a dict with the metric ``(E, F, G)``, its inverse, the area
    element, the oriented unit normal, the second fundamental form
    coefficients ``<X_ij, n>``, mean curvature (trace of the shape operator),
    Gauss curvature and the first-order Laplace-Beltrami coefficients.
    """
    e = np.einsum("...k,...k->...", xs, xs)
    f = np.einsum("...k,...k->...", xs, xt)
    g = np.einsum("...k,...k->...", xt, xt)
    det = e * g - f * f
    cross = np.cross(xs, xt)
    sq = np.sqrt(det)
    normal = orientation * cross / sq[..., None]
    gss = g / det
    gst = -f / det
    gtt = e / det
    b11 = np.einsum("...k,...k->...", xss, normal)
    b12 = np.einsum("...k,...k->...", xst, normal)
    b22 = np.einsum("...k,...k->...", xtt, normal)
    mean = gss * b11 + 2.0 * gst * b12 + gtt * b22
    gauss = (b11 * b22 - b12 * b12) / det
    y = gss[..., None] * xss + 2.0 * gst[..., None] * xst + gtt[..., None] * xtt
    ys = np.einsum("...k,...k->...", y, xs)
    yt = np.einsum("...k,...k->...", y, xt)
    cs = gss * ys + gst * yt
    ct = gst * ys + gtt * yt
    return {
        "E": e, "F": f, "G": g, "det": det, "area_element": sq,
        "gss": gss, "gst": gst, "gtt": gtt, "normal": normal,
        "b11": b11, "b12": b12, "b22": b22,
        "H": mean, "K": gauss, "cs": cs, "ct": ct,
    }


def laplace_apply(gss, gst, gtt, cs, ct, fs, ft, fss, fst, ftt):
    """Non-divergence Laplace-Beltrami from precomputed derivative arrays."""
    return gss * fss + 2.0 * gst * fst + gtt * ftt - cs * fs - ct * ft
