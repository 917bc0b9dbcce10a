"""Hot numeric kernels with a numba path and a pure-numpy path.

Each public kernel is bound at import time to either ``*_numba`` or
``*_numpy`` according to :mod:`geolink._accel`. Both variants are always
importable so tests and ``benchmarks/bench_kernels.py`` can compare them.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

OUTSIDE = 0
BOUNDARY = 1
INSIDE = 2


# -- point location against a set of closed rings (even-odd rule) -----------

@njit
def _locate_points_loop(px, py, rx, ry, starts):
    n = px.shape[0]
    out = np.zeros(n, dtype=np.int8)
    nrings = starts.shape[0] - 1
    for i in range(n):
        x = px[i]
        y = py[i]
        inside = False
        on_edge = False
        for r in range(nrings):
            for k in range(starts[r], starts[r + 1] - 1):
                x1 = rx[k]
                y1 = ry[k]
                x2 = rx[k + 1]
                y2 = ry[k + 1]
                cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
                if (cross == 0.0 and min(x1, x2) <= x <= max(x1, x2)
                        and min(y1, y2) <= y <= max(y1, y2)):
                    on_edge = True
                    break
                if (y1 > y) != (y2 > y):
                    xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                    if x < xint:
                        inside = not inside
            if on_edge:
                break
        if on_edge:
            out[i] = 1
        elif inside:
            out[i] = 2
    return out


def locate_points_numba(px, py, rx, ry, starts):
    return _locate_points_loop(
        np.ascontiguousarray(px, dtype=np.float64),
        np.ascontiguousarray(py, dtype=np.float64),
        np.ascontiguousarray(rx, dtype=np.float64),
        np.ascontiguousarray(ry, dtype=np.float64),
        np.ascontiguousarray(starts, dtype=np.int64),
    )


def locate_points_numpy(px, py, rx, ry, starts):
    px = np.asarray(px, dtype=np.float64)[:, None]
    py = np.asarray(py, dtype=np.float64)[:, None]
    rx = np.asarray(rx, dtype=np.float64)
    ry = np.asarray(ry, dtype=np.float64)
    keep = np.ones(rx.shape[0] - 1, dtype=bool)
    keep[np.asarray(starts[1:-1], dtype=np.int64) - 1] = False  # ring joins
    x1, y1 = rx[:-1][keep], ry[:-1][keep]
    x2, y2 = rx[1:][keep], ry[1:][keep]
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    on_edge = ((cross == 0.0)
               & (np.minimum(x1, x2) <= px) & (px <= np.maximum(x1, x2))
               & (np.minimum(y1, y2) <= py) & (py <= np.maximum(y1, y2)))
    straddle = (y1 > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    hits = np.count_nonzero(straddle & (px < xint), axis=1)
    out = np.where(hits % 2 == 1, INSIDE, OUTSIDE).astype(np.int8)
    out[on_edge.any(axis=1)] = BOUNDARY
    return out


# -- row scatter-add ---------------------------------------------------------

@njit
def _scatter_add_loop(src, idx, out):
    for e in range(idx.shape[0]):
        r = idx[e]
        for j in range(src.shape[1]):
            out[r, j] += src[e, j]
    return out


def scatter_add_rows_numba(src, idx, n_rows):
    src = np.ascontiguousarray(src, dtype=np.float64)
    flat = src.reshape(src.shape[0], -1)
    out = np.zeros((n_rows, flat.shape[1]), dtype=np.float64)
    if flat.shape[0]:
        _scatter_add_loop(flat, np.ascontiguousarray(idx, dtype=np.int64), out)
    return out.reshape((n_rows,) + src.shape[1:])


def scatter_add_rows_numpy(src, idx, n_rows):
    src = np.asarray(src, dtype=np.float64)
    out = np.zeros((n_rows,) + src.shape[1:], dtype=np.float64)
    np.add.at(out, np.asarray(idx, dtype=np.int64), src)
    return out


# -- per-segment maximum (softmax shift) ------------------------------------

@njit
def _segment_max_loop(values, idx, out):
    for e in range(idx.shape[0]):
        r = idx[e]
        if values[e] > out[r]:
            out[r] = values[e]
    return out


def segment_max_numba(values, idx, n_seg):
    out = np.full(n_seg, -np.inf)
    if len(idx):
        _segment_max_loop(np.ascontiguousarray(values, dtype=np.float64),
                          np.ascontiguousarray(idx, dtype=np.int64), out)
    return out


def segment_max_numpy(values, idx, n_seg):
    out = np.full(n_seg, -np.inf)
    np.maximum.at(out, np.asarray(idx, dtype=np.int64), np.asarray(values, dtype=np.float64))
    return out


# -- in-circumcircle test of one point against many triangles ----------------

@njit
def _incircle_loop(ax, ay, bx, by, cx, cy, px, py):
    n = ax.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    for t in range(n):
        adx = ax[t] - px
        ady = ay[t] - py
        bdx = bx[t] - px
        bdy = by[t] - py
        cdx = cx[t] - px
        cdy = cy[t] - py
        det = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
               - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
               + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
        orient = (bx[t] - ax[t]) * (cy[t] - ay[t]) - (by[t] - ay[t]) * (cx[t] - ax[t])
        out[t] = det * orient > 0.0
    return out


def incircle_numba(tri, p):
    tri = np.ascontiguousarray(tri, dtype=np.float64)
    return _incircle_loop(tri[:, 0, 0].copy(), tri[:, 0, 1].copy(), tri[:, 1, 0].copy(),
                          tri[:, 1, 1].copy(), tri[:, 2, 0].copy(), tri[:, 2, 1].copy(),
                          float(p[0]), float(p[1]))


def incircle_numpy(tri, p):
    """True where ``p`` lies strictly inside the triangle's circumcircle."""
    tri = np.asarray(tri, dtype=np.float64)
    d = tri - np.asarray(p, dtype=np.float64)
    sq = (d ** 2).sum(axis=2)
    det = (sq[:, 0] * (d[:, 1, 0] * d[:, 2, 1] - d[:, 2, 0] * d[:, 1, 1])
           - sq[:, 1] * (d[:, 0, 0] * d[:, 2, 1] - d[:, 2, 0] * d[:, 0, 1])
           + sq[:, 2] * (d[:, 0, 0] * d[:, 1, 1] - d[:, 1, 0] * d[:, 0, 1]))
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    orient = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    return det * orient > 0.0


if USE_NUMBA:
    locate_points = locate_points_numba
    scatter_add_rows = scatter_add_rows_numba
    segment_max = segment_max_numba
    incircle = incircle_numba
else:
    locate_points = locate_points_numpy
    scatter_add_rows = scatter_add_rows_numpy
    segment_max = segment_max_numpy
    incircle = incircle_numpy
