# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid kernels (same contract as ``_kernels_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def grid_derivatives(f, double ds, double dth):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] a = np.ascontiguousarray(f, dtype=np.float64)
    cdef Py_ssize_t m = a.shape[0] - 1
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t c = a.shape[2]
    cdef Py_ssize_t half = n // 2
    cdef double[:, :, ::1] v = a
    out = [np.empty((m, n, c)) for _ in range(5)]
    cdef double[:, :, ::1] fs = out[0]
    cdef double[:, :, ::1] ft = out[1]
    cdef double[:, :, ::1] fss = out[2]
    cdef double[:, :, ::1] fst = out[3]
    cdef double[:, :, ::1] ftt = out[4]
    cdef Py_ssize_t i, j, k, jr, jl, im, jm, jmr, jml
    cdef double hs2 = 2.0 * ds
    cdef double ht2 = 2.0 * dth
    cdef double hss = ds * ds
    cdef double htt = dth * dth
    cdef double hst = 4.0 * ds * dth
    cdef double p, q, r, pm
    for i in range(m):
        for j in range(n):
            jr = j + 1 if j + 1 < n else 0
            jl = j - 1 if j > 0 else n - 1
            if i == 0:
                im = 0
                jm = (j + half) % n
                jmr = (jr + half) % n
                jml = (jl + half) % n
            else:
                im = i - 1
                jm = j
                jmr = jr
                jml = jl
            for k in range(c):
                p = v[i + 1, j, k]
                q = v[i, j, k]
                pm = v[im, jm, k]
                fs[i, j, k] = (p - pm) / hs2
                fss[i, j, k] = (p - 2.0 * q + pm) / hss
                r = v[i, jr, k]
                p = v[i, jl, k]
                ft[i, j, k] = (r - p) / ht2
                ftt[i, j, k] = (r - 2.0 * q + p) / htt
                fst[i, j, k] = ((v[i + 1, jr, k] - v[i + 1, jl, k])
                                - (v[im, jmr, k] - v[im, jml, k])) / hst
    return tuple(out)


def surface_fields(xs, xt, xss, xst, xtt, double orientation):
    cdef double[:, :, ::1] s = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[:, :, ::1] t = np.ascontiguousarray(xt, dtype=np.float64)
    cdef double[:, :, ::1] ss = np.ascontiguousarray(xss, dtype=np.float64)
    cdef double[:, :, ::1] st = np.ascontiguousarray(xst, dtype=np.float64)
    cdef double[:, :, ::1] tt = np.ascontiguousarray(xtt, dtype=np.float64)
    cdef Py_ssize_t m = s.shape[0]
    cdef Py_ssize_t n = s.shape[1]
    names = ("E", "F", "G", "det", "area_element", "gss", "gst", "gtt",
             "b11", "b12", "b22", "H", "K", "cs", "ct")
    res = {name: np.empty((m, n)) for name in names}
    res["normal"] = np.empty((m, n, 3))
    cdef double[:, ::1] oe = res["E"]
    cdef double[:, ::1] of = res["F"]
    cdef double[:, ::1] og = res["G"]
    cdef double[:, ::1] od = res["det"]
    cdef double[:, ::1] oa = res["area_element"]
    cdef double[:, ::1] o11 = res["gss"]
    cdef double[:, ::1] o12 = res["gst"]
    cdef double[:, ::1] o22 = res["gtt"]
    cdef double[:, ::1] ob11 = res["b11"]
    cdef double[:, ::1] ob12 = res["b12"]
    cdef double[:, ::1] ob22 = res["b22"]
    cdef double[:, ::1] oh = res["H"]
    cdef double[:, ::1] ok = res["K"]
    cdef double[:, ::1] ocs = res["cs"]
    cdef double[:, ::1] oct = res["ct"]
    cdef double[:, :, ::1] on = res["normal"]
    cdef Py_ssize_t i, j
    cdef double e, f, g, det, sq, n0, n1, n2, gss, gst, gtt
    cdef double b11, b12, b22, y0, y1, y2, ys, yt
    for i in range(m):
        for j in range(n):
            e = s[i, j, 0] * s[i, j, 0] + s[i, j, 1] * s[i, j, 1] + s[i, j, 2] * s[i, j, 2]
            f = s[i, j, 0] * t[i, j, 0] + s[i, j, 1] * t[i, j, 1] + s[i, j, 2] * t[i, j, 2]
            g = t[i, j, 0] * t[i, j, 0] + t[i, j, 1] * t[i, j, 1] + t[i, j, 2] * t[i, j, 2]
            det = e * g - f * f
            sq = sqrt(det)
            n0 = orientation * (s[i, j, 1] * t[i, j, 2] - s[i, j, 2] * t[i, j, 1]) / sq
            n1 = orientation * (s[i, j, 2] * t[i, j, 0] - s[i, j, 0] * t[i, j, 2]) / sq
            n2 = orientation * (s[i, j, 0] * t[i, j, 1] - s[i, j, 1] * t[i, j, 0]) / sq
            gss = g / det
            gst = -f / det
            gtt = e / det
            b11 = ss[i, j, 0] * n0 + ss[i, j, 1] * n1 + ss[i, j, 2] * n2
            b12 = st[i, j, 0] * n0 + st[i, j, 1] * n1 + st[i, j, 2] * n2
            b22 = tt[i, j, 0] * n0 + tt[i, j, 1] * n1 + tt[i, j, 2] * n2
            y0 = gss * ss[i, j, 0] + 2.0 * gst * st[i, j, 0] + gtt * tt[i, j, 0]
            y1 = gss * ss[i, j, 1] + 2.0 * gst * st[i, j, 1] + gtt * tt[i, j, 1]
            y2 = gss * ss[i, j, 2] + 2.0 * gst * st[i, j, 2] + gtt * tt[i, j, 2]
            ys = y0 * s[i, j, 0] + y1 * s[i, j, 1] + y2 * s[i, j, 2]
            yt = y0 * t[i, j, 0] + y1 * t[i, j, 1] + y2 * t[i, j, 2]
            oe[i, j] = e
            of[i, j] = f
            og[i, j] = g
            od[i, j] = det
            oa[i, j] = sq
            o11[i, j] = gss
            o12[i, j] = gst
            o22[i, j] = gtt
            on[i, j, 0] = n0
            on[i, j, 1] = n1
            on[i, j, 2] = n2
            ob11[i, j] = b11
            ob12[i, j] = b12
            ob22[i, j] = b22
            oh[i, j] = gss * b11 + 2.0 * gst * b12 + gtt * b22
            ok[i, j] = (b11 * b22 - b12 * b12) / det
            ocs[i, j] = gss * ys + gst * yt
            oct[i, j] = gst * ys + gtt * yt
    return res


def laplace_apply(gss, gst, gtt, cs, ct, fs, ft, fss, fst, ftt):
    cdef double[:, ::1] a11 = np.ascontiguousarray(gss, dtype=np.float64)
    cdef double[:, ::1] a12 = np.ascontiguousarray(gst, dtype=np.float64)
    cdef double[:, ::1] a22 = np.ascontiguousarray(gtt, dtype=np.float64)
    cdef double[:, ::1] c1 = np.ascontiguousarray(cs, dtype=np.float64)
    cdef double[:, ::1] c2 = np.ascontiguousarray(ct, dtype=np.float64)
    cdef double[:, ::1] d1 = np.ascontiguousarray(fs, dtype=np.float64)
    cdef double[:, ::1] d2 = np.ascontiguousarray(ft, dtype=np.float64)
    cdef double[:, ::1] d11 = np.ascontiguousarray(fss, dtype=np.float64)
    cdef double[:, ::1] d12 = np.ascontiguousarray(fst, dtype=np.float64)
    cdef double[:, ::1] d22 = np.ascontiguousarray(ftt, dtype=np.float64)
    cdef Py_ssize_t m = a11.shape[0]
    cdef Py_ssize_t n = a11.shape[1]
    out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            o[i, j] = (a11[i, j] * d11[i, j] + 2.0 * a12[i, j] * d12[i, j]
                       + a22[i, j] * d22[i, j] - c1[i, j] * d1[i, j] - c2[i, j] * d2[i, j])
    return out
