"""Hot numeric loops, each with a numba kernel and a pure-numpy twin.

The public functions dispatch on :data:`sparse_dyadic._accel.USE_NUMBA`; the
``*_np`` and ``*_nb`` variants stay importable so the benchmark and the tests
can run both paths side by side.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit


# ---------------------------------------------------------------------------
# l^q norms


def lq_norm(x: np.ndarray, q: float) -> np.ndarray:
    """Row-wise l^q norm over the last axis."""
    a = np.abs(x)
    if np.isinf(q):
        return a.max(axis=-1)
    if q == 1:
        return a.sum(axis=-1)
    if q == 2:
        return np.sqrt((a * a).sum(axis=-1))
    return (a**q).sum(axis=-1) ** (1.0 / q)


@njit
def _lq_dist(x, y, q):
    n = x.shape[0]
    if np.isinf(q):
        m = 0.0
        for i in range(n):
            t = abs(x[i] - y[i])
            if t > m:
                m = t
        return m
    s = 0.0
    if q == 1.0:
        for i in range(n):
            s += abs(x[i] - y[i])
        return s
    if q == 2.0:
        for i in range(n):
            t = x[i] - y[i]
            s += t * t
        return np.sqrt(s)
    for i in range(n):
        s += abs(x[i] - y[i]) ** q
    return s ** (1.0 / q)


# ---------------------------------------------------------------------------
# k-th smallest distance from each center to a point cloud


def kth_distances_np(points: np.ndarray, centers: np.ndarray, q: float, k: int, chunk: int = 256) -> np.ndarray:
    out = np.empty(len(centers))
    for s in range(0, len(centers), chunk):
        c = centers[s : s + chunk]
        dist = lq_norm(points[None, :, :] - c[:, None, :], q)
        out[s : s + chunk] = np.partition(dist, k - 1, axis=1)[:, k - 1]
    return out


@njit
def kth_distances_nb(points, centers, q, k):
    npts = points.shape[0]
    out = np.empty(centers.shape[0])
    buf = np.empty(npts)
    for c in range(centers.shape[0]):
        for i in range(npts):
            buf[i] = _lq_dist(points[i], centers[c], q)
        out[c] = np.partition(buf, k - 1)[k - 1]
    return out


def kth_distances(points: np.ndarray, centers: np.ndarray, q: float, k: int) -> np.ndarray:
    """For every center, the ``k``-th smallest (1-based) l^q distance to ``points``."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if not 1 <= k <= len(points):
        raise ValueError(f"order statistic {k} out of range for {len(points)} points")
    if _accel.USE_NUMBA:
        return kth_distances_nb(points, centers, float(q), int(k))
    return kth_distances_np(points, centers, float(q), int(k))


# ---------------------------------------------------------------------------
# translation-invariant quadrature on a d-dimensional cell grid


def _offset_index(idx: np.ndarray, n_axis: int) -> np.ndarray:
    """Flat index into a kernel table of shape ``(2n-1,)*d`` for offsets ``idx`` (..., d)."""
    width = 2 * n_axis - 1
    flat = np.zeros(idx.shape[:-1], dtype=np.int64)
    for ax in range(idx.shape[-1]):
        flat = flat * width + (idx[..., ax] + n_axis - 1)
    return flat


def convolve_np(table: np.ndarray, multi: np.ndarray, n_axis: int, f: np.ndarray, chunk: int = 512) -> np.ndarray:
    out = np.empty_like(f)
    for s in range(0, len(multi), chunk):
        rows = multi[s : s + chunk]
        off = rows[:, None, :] - multi[None, :, :]
        out[s : s + chunk] = table[_offset_index(off, n_axis)] @ f
    return out


@njit
def convolve_nb(table, multi, n_axis, f):
    ncell, d = multi.shape
    width = 2 * n_axis - 1
    out = np.zeros(f.shape)
    for c in range(ncell):
        for cp in range(ncell):
            flat = 0
            for ax in range(d):
                flat = flat * width + (multi[c, ax] - multi[cp, ax] + n_axis - 1)
            kv = table[flat]
            if kv != 0.0:
                for comp in range(f.shape[1]):
                    out[c, comp] += kv * f[cp, comp]
    return out


def convolve(table: np.ndarray, multi: np.ndarray, n_axis: int, f: np.ndarray) -> np.ndarray:
    """``out[c] = sum_{c'} table[c - c'] * f[c']`` with the table indexed by offset."""
    table = np.ascontiguousarray(table, dtype=np.float64)
    multi = np.ascontiguousarray(multi, dtype=np.int64)
    f = np.ascontiguousarray(f, dtype=np.float64)
    if _accel.USE_NUMBA:
        return convolve_nb(table, multi, int(n_axis), f)
    return convolve_np(table, multi, int(n_axis), f)


# ---------------------------------------------------------------------------
# sweeps over all grid-aligned intervals of a 1-d cell array
#
# Intervals are [a, b) in cell units, 0 <= a < b <= N; averages come from
# prefix sums so the cell measure cancels.


def _interval_averages(prefix: np.ndarray) -> np.ndarray:
    n = len(prefix) - 1
    length = np.arange(n + 1)[None, :] - np.arange(n + 1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = (prefix[None, :] - prefix[:, None]) / length
    avg[length <= 0] = np.nan
    return avg


def interval_ap_np(w: np.ndarray, s: np.ndarray, p: float) -> tuple[float, int, int]:
    aw = _interval_averages(np.concatenate(([0.0], np.cumsum(w))))
    asg = _interval_averages(np.concatenate(([0.0], np.cumsum(s))))
    val = aw * asg ** (p - 1.0)
    flat = int(np.nanargmax(val))
    a, b = divmod(flat, val.shape[1])
    return float(val[a, b]), a, b


@njit
def interval_ap_nb(w, s, p):
    n = w.shape[0]
    pw = np.zeros(n + 1)
    ps = np.zeros(n + 1)
    for i in range(n):
        pw[i + 1] = pw[i] + w[i]
        ps[i + 1] = ps[i] + s[i]
    best = -1.0
    ba = 0
    bb = 1
    for a in range(n):
        for b in range(a + 1, n + 1):
            ln = b - a
            v = ((pw[b] - pw[a]) / ln) * ((ps[b] - ps[a]) / ln) ** (p - 1.0)
            if v > best:
                best = v
                ba = a
                bb = b
    return best, ba, bb


def interval_ap(w: np.ndarray, s: np.ndarray, p: float) -> tuple[float, int, int]:
    """``max_{[a,b)} <w>_{[a,b)} <s>_{[a,b)}^{p-1}`` and its first maximizer (row-major)."""
    w = np.ascontiguousarray(w, dtype=np.float64)
    s = np.ascontiguousarray(s, dtype=np.float64)
    if _accel.USE_NUMBA:
        v, a, b = interval_ap_nb(w, s, float(p))
        return float(v), int(a), int(b)
    return interval_ap_np(w, s, float(p))


def interval_maximal_np(g: np.ndarray) -> np.ndarray:
    n = len(g)
    avg = _interval_averages(np.concatenate(([0.0], np.cumsum(g))))
    avg = np.where(np.isnan(avg), -np.inf, avg)
    # best[a, i] = max over b > i of avg[a, b]
    rev = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
    best = rev[:n, 1:]
    # restrict to a <= i, then take the column maximum
    best = np.where(np.arange(n)[:, None] <= np.arange(n)[None, :], best, -np.inf)
    return best.max(axis=0)


@njit
def interval_maximal_nb(g):
    n = g.shape[0]
    pre = np.zeros(n + 1)
    for i in range(n):
        pre[i + 1] = pre[i] + g[i]
    out = np.full(n, -np.inf)
    for a in range(n):
        # sweep i downwards carrying the best average over [a, b) with b > i
        r = -np.inf
        for i in range(n - 1, a - 1, -1):
            v = (pre[i + 1] - pre[a]) / (i + 1 - a)
            if v > r:
                r = v
            if r > out[i]:
                out[i] = r
    return out


def interval_maximal(g: np.ndarray) -> np.ndarray:
    """``M g(i) = max over intervals [a,b) containing cell i of the average of g``."""
    g = np.ascontiguousarray(g, dtype=np.float64)
    if _accel.USE_NUMBA:
        return interval_maximal_nb(g)
    return interval_maximal_np(g)


def interval_ainf_np(w: np.ndarray) -> tuple[float, int, int]:
    n = len(w)
    prefix = np.concatenate(([0.0], np.cumsum(w)))
    avg = _interval_averages(prefix)
    avg = np.where(np.isnan(avg), -np.inf, avg)
    # U[x, t] = max_{a <= s <= x} avg[s, t], grown as a decreases
    U = np.full((n, n + 1), -np.inf)
    best, ba, bb = -np.inf, 0, 1
    contains = np.arange(n + 1)[None, :] > np.arange(n)[:, None]  # [s, t) holds x iff s <= x < t
    for a in range(n - 1, -1, -1):
        U[a:] = np.where(contains[a:], np.maximum(U[a:], avg[a][None, :]), -np.inf)
        # M_{[a,b)}(x) = max_{x < t <= b} U[x, t]
        V = np.maximum.accumulate(U[a:], axis=1)
        V = np.where(contains[a:], V, 0.0)
        integrals = V.sum(axis=0)  # sum over x in [a, b) of M(x), since V[x, b] = 0 for b <= x
        b = np.arange(a + 1, n + 1)
        vals = integrals[b] / (prefix[b] - prefix[a])
        i = int(np.argmax(vals))
        if vals[i] > best or (vals[i] == best and a < ba):
            best, ba, bb = float(vals[i]), a, int(b[i])
    return best, ba, bb


@njit
def interval_ainf_nb(w):
    n = w.shape[0]
    pre = np.zeros(n + 1)
    for i in range(n):
        pre[i + 1] = pre[i] + w[i]
    U = np.full((n, n + 1), -np.inf)
    integ = np.zeros(n + 1)
    best = -np.inf
    ba = 0
    bb = 1
    for a in range(n - 1, -1, -1):
        for x in range(a, n):
            for t in range(x + 1, n + 1):
                v = (pre[t] - pre[a]) / (t - a)
                if v > U[x, t]:
                    U[x, t] = v
        for b in range(n + 1):
            integ[b] = 0.0
        for x in range(a, n):
            run = -np.inf
            for t in range(x + 1, n + 1):
                if U[x, t] > run:
                    run = U[x, t]
                integ[t] += run
        for b in range(a + 1, n + 1):
            v = integ[b] / (pre[b] - pre[a])
            if v > best or (v == best and a < ba):
                best = v
                ba = a
                bb = b
    return best, ba, bb


def interval_ainf(w: np.ndarray) -> tuple[float, int, int]:
    """``max_{[a,b)} (1/w([a,b))) * sum_{x in [a,b)} M_{[a,b)} w(x)`` in cell units.

    ``M_Q`` is the maximal function over intervals inside ``Q``; for the
    interval family this equals ``M(w 1_Q)`` on ``Q``.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    if _accel.USE_NUMBA:
        v, a, b = interval_ainf_nb(w)
        return float(v), int(a), int(b)
    return interval_ainf_np(w)
