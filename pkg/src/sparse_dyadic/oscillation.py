"""Least bounds, pseudomedians and the brute-force oscillation oracle.

On a cube holding ``N`` equal cells, ``|Q ∩ {||f - c|| > r}| <= lam |Q|``
means at most ``floor(lam * N)`` cells may lie outside the ball, so the least
bound about ``c`` is the ``(N - floor(lam N))``-th smallest cell distance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dyadic_grid import Box, DyadicCube, format_rational
from .kernels import kth_distances, lq_norm
from .sampled_field import CellSet, EmptyCubeError, SampledFunction, cells_in_box


def _as_box(Q: Box | DyadicCube) -> Box:
    return Q.box if isinstance(Q, DyadicCube) else Q


def _cells(f: SampledFunction, Q: Box | DyadicCube) -> np.ndarray:
    idx = cells_in_box(f.grid, _as_box(Q))
    if len(idx) == 0:
        raise EmptyCubeError(f"no cell centers in {Q}")
    return idx


def order_index(N: int, lam: Fraction) -> int:
    """1-based rank ``N - floor(lam * N)`` of the least bound among ``N`` distances."""
    return N - math.floor(Fraction(lam) * N)


@dataclass(frozen=True, eq=False)
class OscillationCertificate:
    cube: Box
    lam: Fraction
    center: np.ndarray
    radius: float
    witness_excess: CellSet

    def to_json(self) -> dict:
        return {
            "cube": self.cube.to_json(),
            "lambda": format_rational(self.lam),
            "center": [float(x) for x in self.center],
            "radius": float(self.radius),
            "excess_cells": len(self.witness_excess),
        }


def distances(f: SampledFunction, idx: np.ndarray, c) -> np.ndarray:
    c = np.broadcast_to(np.asarray(c, dtype=np.float64), (f.n,))
    return lq_norm(f.values[idx] - c, f.q)


def least_bound(f: SampledFunction, Q: Box | DyadicCube, lam, c=0.0) -> float:
    """``min{r >= 0 : |Q ∩ {||f - c|| > r}| <= lam |Q|}`` over the cells of ``Q``."""
    lam = Fraction(lam)
    if not 0 <= lam < 1:
        raise ValueError("lam must lie in [0, 1)")
    idx = _cells(f, Q)
    k = order_index(len(idx), lam)
    dist = distances(f, idx, c)
    return float(np.partition(dist, k - 1)[k - 1])


def pseudomedian(f: SampledFunction, Q: Box | DyadicCube, lam) -> OscillationCertificate:
    """Medoid center: the cell value minimizing the least bound, smallest index on ties.

    Some cell value lies inside an optimal ball (more than half the cells do),
    and any such value has least bound at most twice the optimum, so the
    returned radius is at most ``2 * omega_lam(f; Q)``.
    """
    lam = Fraction(lam)
    if not 0 < lam < Fraction(1, 2):
        raise ValueError("pseudomedian needs 0 < lam < 1/2")
    box = _as_box(Q)
    idx = _cells(f, box)
    k = order_index(len(idx), lam)
    pts = f.values[idx]
    radii = kth_distances(pts, pts, f.q, k)
    best = int(np.argmin(radii))
    center = pts[best].copy()
    # the reported radius and excess set use the same distance routine as least_bound
    dist = distances(f, idx, center)
    radius = float(np.partition(dist, k - 1)[k - 1])
    excess = CellSet(f.grid, idx[dist > radius])
    return OscillationCertificate(box, lam, center, radius, excess)


def scalar_median(g: SampledFunction, Q: Box | DyadicCube) -> float:
    """Lower median: smallest sample value ``m`` with both tails at most half the cells."""
    idx = _cells(g, Q)
    v = np.sort(g.scalar[idx])
    N = len(v)
    for m in np.unique(v):
        above = N - np.searchsorted(v, m, side="right")
        below = np.searchsorted(v, m, side="left")
        if 2 * above <= N and 2 * below <= N:
            return float(m)
    raise AssertionError("a median always exists among the samples")


def optimal_bound_oracle(f: SampledFunction, Q: Box | DyadicCube, lam, center_grid: np.ndarray) -> float:
    """``min_c least_bound(f, Q, lam, c)`` over a finite set of candidate centers."""
    lam = Fraction(lam)
    centers = np.atleast_2d(np.asarray(center_grid, dtype=np.float64))
    if centers.shape[0] == 0:
        raise ValueError("center grid is empty")
    if centers.shape[1] != f.n:
        centers = centers.reshape(-1, f.n)
    idx = _cells(f, Q)
    k = order_index(len(idx), lam)
    return float(kth_distances(f.values[idx], centers, f.q, k).min())


def center_grid(f: SampledFunction, Q: Box | DyadicCube, oversample: int = 10, max_axis: int = 400) -> np.ndarray:
    """Dense candidate centers spanning the values of ``f`` on ``Q``.

    Scalar fields get a uniform grid ``oversample`` times finer than the number
    of samples plus every sample value and every pairwise midpoint, which
    contains the exact 1-d optimum. Vector fields (``n <= 3``) get a tensor grid
    plus the sample values.
    """
    idx = _cells(f, Q)
    pts = f.values[idx]
    n = f.n
    if n > 3:
        raise ValueError("center grids are only built for n <= 3")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if n == 1:
        count = min(oversample * len(pts) + 1, 20 * max_axis)
        uniform = np.linspace(lo[0], hi[0], count)
        v = np.unique(pts[:, 0])
        mids = ((v[:, None] + v[None, :]) / 2).ravel()
        return np.unique(np.concatenate([uniform, v, mids]))[:, None]
    count = min(oversample * int(round(len(pts) ** (1.0 / n))) + 1, max_axis // n)
    axes = [np.linspace(lo[i], hi[i], count) for i in range(n)]
    tensor = np.array(list(itertools.product(*axes)))
    return np.concatenate([tensor, pts])


def exact_scalar_oscillation(values: np.ndarray, lam) -> float:
    """Independent 1-d optimum: half the narrowest window covering ``N - floor(lam N)`` sorted values."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    N = len(v)
    keep = order_index(N, Fraction(lam))
    widths = v[keep - 1 :] - v[: N - keep + 1]
    return float(widths.min() / 2)
