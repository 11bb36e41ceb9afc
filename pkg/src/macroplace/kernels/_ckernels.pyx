# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot placement kernels (see fallback.py)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, exp, floor

IMPL = "compiled"


def wa_axis(coords, net_start, double gamma):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(coords, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] starts = np.ascontiguousarray(net_start, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.zeros(x.shape[0], dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ea = np.empty(x.shape[0], dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] eb = np.empty(x.shape[0], dtype=np.float64)
    cdef double inv_g = 1.0 / gamma
    cdef double total = 0.0
    cdef Py_ssize_t n_nets = starts.shape[0] - 1
    cdef Py_ssize_t e, p, s0, s1
    cdef double xmax, xmin, sa, sb, sxa, sxb, a, b, plus, minus

    for e in range(n_nets):
        s0 = starts[e]
        s1 = starts[e + 1]
        if s1 - s0 < 2:
            continue
        xmax = x[s0]
        xmin = x[s0]
        for p in range(s0 + 1, s1):
            if x[p] > xmax:
                xmax = x[p]
            if x[p] < xmin:
                xmin = x[p]
        sa = 0.0
        sb = 0.0
        sxa = 0.0
        sxb = 0.0
        for p in range(s0, s1):
            a = exp((x[p] - xmax) * inv_g)
            b = exp((xmin - x[p]) * inv_g)
            ea[p] = a
            eb[p] = b
            sa += a
            sb += b
            sxa += x[p] * a
            sxb += x[p] * b
        plus = sxa / sa
        minus = sxb / sb
        total += plus - minus
        for p in range(s0, s1):
            grad[p] = ea[p] * (1.0 + (x[p] - plus) * inv_g) / sa \
                - eb[p] * (1.0 - (x[p] - minus) * inv_g) / sb
    return total, grad


def density_scatter(xlo, ylo, w, h, double bw, double bh, int nbx, int nby):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xl = np.ascontiguousarray(xlo, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yl = np.ascontiguousarray(ylo, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ww = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hh = np.ascontiguousarray(h, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grid = np.zeros((nbx, nby), dtype=np.float64)
    cdef Py_ssize_t n = xl.shape[0]
    cdef Py_ssize_t t, i, j
    cdef long ix0, ix1, iy0, iy1
    cdef double x0, y0, x1, y1, ox, oy

    for t in range(n):
        x0 = xl[t]
        y0 = yl[t]
        x1 = x0 + ww[t]
        y1 = y0 + hh[t]
        ix0 = <long>floor(x0 / bw)
        iy0 = <long>floor(y0 / bh)
        ix1 = <long>ceil(x1 / bw)
        iy1 = <long>ceil(y1 / bh)
        if ix0 < 0:
            ix0 = 0
        if iy0 < 0:
            iy0 = 0
        if ix1 > nbx:
            ix1 = nbx
        if iy1 > nby:
            iy1 = nby
        if ix0 > nbx - 1:
            ix0 = nbx - 1
        if iy0 > nby - 1:
            iy0 = nby - 1
        for i in range(ix0, ix1):
            ox = (x1 if x1 < (i + 1) * bw else (i + 1) * bw) - (x0 if x0 > i * bw else i * bw)
            if ox <= 0.0:
                continue
            for j in range(iy0, iy1):
                oy = (y1 if y1 < (j + 1) * bh else (j + 1) * bh) - (y0 if y0 > j * bh else j * bh)
                if oy > 0.0:
                    grid[i, j] += ox * oy
    return grid
