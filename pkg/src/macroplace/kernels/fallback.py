"""Pure-numpy implementations of the hot placement kernels.

Used when the compiled extension is unavailable. Segment reductions use
``np.add.reduceat``/``np.bincount`` so that accumulation order matches
the sequential loops of the compiled twin.
"""

from __future__ import annotations

import numpy as np

IMPL = "python"

# stencil classes for the vectorized scatter; footprints wider than the
# largest class take the per-instance loop
_SPAN_CLASSES = (2, 4, 8, 16)


def wa_axis(coords: np.ndarray, net_start: np.ndarray, gamma: float):
    """Weighted-average span of each pin segment along one axis.

    ``coords`` holds absolute pin coordinates grouped by net;
    ``net_start`` is the CSR offset array (length #nets + 1). Returns
    (total, per-pin gradient). Nets with fewer than two pins contribute
    zero. Exponents are max/min-shifted so any coordinate range is safe.
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    starts = net_start[:-1]
    lengths = np.diff(net_start)
    grad = np.zeros_like(coords)
    if coords.size == 0 or len(lengths) == 0:
        return 0.0, grad

    inv_g = 1.0 / gamma
    xmax = np.maximum.reduceat(coords, starts)
    xmin = np.minimum.reduceat(coords, starts)
    xmax_p = np.repeat(xmax, lengths)
    xmin_p = np.repeat(xmin, lengths)

    a = np.exp((coords - xmax_p) * inv_g)
    b = np.exp((xmin_p - coords) * inv_g)
    sa = np.add.reduceat(a, starts)
    sb = np.add.reduceat(b, starts)
    sxa = np.add.reduceat(coords * a, starts)
    sxb = np.add.reduceat(coords * b, starts)

    plus = sxa / sa
    minus = sxb / sb
    valid = lengths >= 2
    total = float(np.sum(np.where(valid, plus - minus, 0.0)))

    plus_p = np.repeat(plus, lengths)
    minus_p = np.repeat(minus, lengths)
    sa_p = np.repeat(sa, lengths)
    sb_p = np.repeat(sb, lengths)
    grad = a * (1.0 + (coords - plus_p) * inv_g) / sa_p
    grad -= b * (1.0 - (coords - minus_p) * inv_g) / sb_p
    grad[np.repeat(~valid, lengths)] = 0.0
    return total, grad


def density_scatter(
    xlo: np.ndarray,
    ylo: np.ndarray,
    w: np.ndarray,
    h: np.ndarray,
    bw: float,
    bh: float,
    nbx: int,
    nby: int,
) -> np.ndarray:
    """Accumulate each box's geometric overlap with a regular bin grid.

    Returns an (nbx, nby) grid of overlap areas; the sum over bins of a
    box fully inside the grid equals its area exactly.
    """
    grid = np.zeros((nbx, nby), dtype=np.float64)
    n = len(xlo)
    if n == 0:
        return grid
    xlo = np.asarray(xlo, dtype=np.float64)
    ylo = np.asarray(ylo, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)

    ix0 = np.clip(np.floor(xlo / bw).astype(np.int64), 0, nbx - 1)
    iy0 = np.clip(np.floor(ylo / bh).astype(np.int64), 0, nby - 1)
    ix1 = np.clip(np.ceil((xlo + w) / bw).astype(np.int64), 1, nbx)
    iy1 = np.clip(np.ceil((ylo + h) / bh).astype(np.int64), 1, nby)
    span = np.maximum(ix1 - ix0, iy1 - iy0)

    lower = 0
    for size in _SPAN_CLASSES:
        mask = (span > lower) & (span <= size)
        if np.any(mask):
            _scatter_stencil(
                grid, xlo[mask], ylo[mask], w[mask], h[mask], ix0[mask], iy0[mask],
                bw, bh, nbx, nby, size,
            )
        lower = size

    for t in np.flatnonzero(span > _SPAN_CLASSES[-1]):
        i = np.arange(ix0[t], ix1[t])
        j = np.arange(iy0[t], iy1[t])
        ox = np.minimum(xlo[t] + w[t], (i + 1) * bw) - np.maximum(xlo[t], i * bw)
        oy = np.minimum(ylo[t] + h[t], (j + 1) * bh) - np.maximum(ylo[t], j * bh)
        np.clip(ox, 0.0, None, out=ox)
        np.clip(oy, 0.0, None, out=oy)
        grid[ix0[t] : ix1[t], iy0[t] : iy1[t]] += np.outer(ox, oy)

    return grid


def _scatter_stencil(grid, xl, yl, w, h, ix0, iy0, bw, bh, nbx, nby, size):
    """Accumulate boxes spanning at most ``size`` bins per axis by sweeping
    a size x size offset stencil, chunked to bound scratch memory."""
    chunk = max(1, 4_000_000 // (size * size))
    nbins = nbx * nby
    for c0 in range(0, len(xl), chunk):
        sl = slice(c0, c0 + chunk)
        sx0, sy0 = ix0[sl], iy0[sl]
        sxl, syl = xl[sl], yl[sl]
        sxr, syt = sxl + w[sl], syl + h[sl]
        flat_idx = []
        flat_wt = []
        for ka in range(size):
            i = sx0 + ka
            ox = np.minimum(sxr, (i + 1) * bw) - np.maximum(sxl, i * bw)
            np.clip(ox, 0.0, None, out=ox)
            i = np.minimum(i, nbx - 1)
            for kb in range(size):
                j = sy0 + kb
                oy = np.minimum(syt, (j + 1) * bh) - np.maximum(syl, j * bh)
                np.clip(oy, 0.0, None, out=oy)
                j = np.minimum(j, nby - 1)
                flat_idx.append(i * nby + j)
                flat_wt.append(ox * oy)
        counts = np.bincount(
            np.concatenate(flat_idx), weights=np.concatenate(flat_wt), minlength=nbins
        )
        grid += counts.reshape(nbx, nby)
