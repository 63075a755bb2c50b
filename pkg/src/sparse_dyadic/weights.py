"""Muckenhoupt characteristics over a declared finite family of cubes.

The supremum "over all cubes" is replaced by:

* ``d = 1``: every grid-aligned interval ``[a, b)`` of the root (``N(N+1)/2`` of them);
* ``d >= 2``: every cube of the ``3^d`` translated dyadic systems that lies
  inside the root, from the root level down to the cell level.

For ``A_inf`` in ``d >= 2`` the maximal function inside ``Q`` runs over the
dyadic subcubes of ``Q`` in ``Q``'s own translated system.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import kernels
from .dyadic_grid import THIRDS, Box, DyadicCube
from .sampled_field import GridSpec, SampledFunction, cells_in_box


@dataclass(frozen=True, eq=False)
class Weight:
    w: SampledFunction

    def __post_init__(self) -> None:
        if self.w.n != 1:
            raise ValueError("a weight is scalar")
        if not (self.w.scalar > 0).all():
            raise ValueError("a weight must be strictly positive on every cell")

    @property
    def grid(self) -> GridSpec:
        return self.w.grid

    @property
    def values(self) -> np.ndarray:
        return self.w.scalar

    def mass(self, cells: np.ndarray) -> float:
        """``w(A)`` for a set of cell indices."""
        return float(self.values[cells].sum() * float(self.grid.cell_measure))


@dataclass
class ApReport:
    p: float
    value: float
    argmax_cube: Box
    cube_family_size: int
    family: str

    def to_json(self) -> dict:
        return {
            "p": "inf" if math.isinf(self.p) else self.p,
            "value": self.value,
            "argmax_cube": self.argmax_cube.to_json(),
            "cube_family_size": self.cube_family_size,
            "family": self.family,
        }


def as_weight(w) -> Weight:
    return w if isinstance(w, Weight) else Weight(w)


def dual_weight(w, p: float) -> Weight:
    """``sigma = w^{-1/(p-1)}`` cellwise."""
    w = as_weight(w)
    if not p > 1 or math.isinf(p):
        raise ValueError("dual weight needs 1 < p < inf")
    return Weight(SampledFunction(w.grid, (w.values ** (-1.0 / (p - 1.0)))[:, None]))


# ---------------------------------------------------------------------------
# the d >= 2 cube family


def _axis_levels(lo: Fraction, hi: Fraction, u: Fraction, j0: int, j1: int):
    """Per level, the first position and count of ``D^u`` intervals inside ``[lo, hi)``."""
    out = []
    for lvl in range(j0, j1 + 1):
        sgn = 1 if lvl % 2 == 0 else -1
        scale = Fraction(2) ** lvl
        m0 = math.ceil(lo * scale - sgn * u)
        m1 = math.floor(hi * scale - sgn * u)  # exclusive
        out.append((m0, max(m1 - m0, 0)))
    return out


@dataclass
class _Tree:
    """One translated system restricted to the root: per level, per axis (first m, count)."""

    u: tuple[Fraction, ...]
    levels: list[int]
    axes: list[list[tuple[int, int]]]  # axes[ax][li] = (m0, count)

    def shape(self, li: int) -> tuple[int, ...]:
        return tuple(self.axes[ax][li][1] for ax in range(len(self.u)))

    def child_offset(self, li: int, ax: int) -> int:
        """Position in level ``li+1``'s list of the first child of the first interval at ``li``."""
        lvl = self.levels[li]
        sgn = 1 if lvl % 2 == 0 else -1
        m0 = self.axes[ax][li][0]
        first_child = 2 * m0 + int(3 * sgn * self.u[ax])
        return first_child - self.axes[ax][li + 1][0]


class CubeFamily:
    """The ``d >= 2`` family with vectorized box integrals."""

    def __init__(self, grid: GridSpec):
        if grid.d < 2:
            raise ValueError("CubeFamily is the d >= 2 family")
        self.grid = grid
        lo, hi = grid.root.box.lower, grid.root.box.upper
        self.trees: list[_Tree] = []
        self.cubes: list[DyadicCube] = []
        self.tree_slices: list[list[slice]] = []
        j0, j1 = grid.root.j, grid.cell_level
        for u in itertools.product(THIRDS, repeat=grid.d):
            axes = [_axis_levels(lo[ax], hi[ax], u[ax], j0, j1) for ax in range(grid.d)]
            tree = _Tree(tuple(u), list(range(j0, j1 + 1)), axes)
            slices = []
            for li, lvl in enumerate(tree.levels):
                start = len(self.cubes)
                ranges = [range(axes[ax][li][0], axes[ax][li][0] + axes[ax][li][1]) for ax in range(grid.d)]
                for m in itertools.product(*ranges):
                    self.cubes.append(DyadicCube(u, lvl, m))
                slices.append(slice(start, len(self.cubes)))
            self.trees.append(tree)
            self.tree_slices.append(slices)
        self._build_quadrature()

    def __len__(self) -> int:
        return len(self.cubes)

    def _build_quadrature(self) -> None:
        box_id, starts, stops, wts = [], [], [], []
        for i, Q in enumerate(self.cubes):
            segs = self.grid.overlap_segments(Q.box)
            for combo in itertools.product(*segs):
                box_id.append(i)
                starts.append([c[0] for c in combo])
                stops.append([c[1] for c in combo])
                wts.append(math.prod(float(c[2]) for c in combo))
        self._box_id = np.asarray(box_id, dtype=np.int64)
        self._starts = np.asarray(starts, dtype=np.int64)
        self._stops = np.asarray(stops, dtype=np.int64)
        self._wts = np.asarray(wts)
        self.measures = np.array([float(Q.measure) for Q in self.cubes])

    def integrals(self, g: SampledFunction) -> np.ndarray:
        sat = g._sat
        d = self.grid.d
        block = np.zeros(len(self._wts))
        for corner in itertools.product((0, 1), repeat=d):
            idx = tuple(np.where(corner[ax], self._stops[:, ax], self._starts[:, ax]) for ax in range(d))
            block += (-1) ** (d - sum(corner)) * sat[idx]
        out = np.zeros(len(self.cubes))
        np.add.at(out, self._box_id, block * self._wts)
        return out * float(self.grid.cell_measure)

    def averages(self, g: SampledFunction) -> np.ndarray:
        return self.integrals(g) / self.measures

    @cached_property
    def center_ranges(self) -> list[tuple[slice, ...]]:
        return [tuple(slice(a, b) for a, b in self.grid.center_range(Q.box)) for Q in self.cubes]

    def level_arrays(self, values: np.ndarray, t: int) -> list[np.ndarray]:
        tree = self.trees[t]
        return [values[s].reshape(tree.shape(li)) for li, s in enumerate(self.tree_slices[t])]


_FAMILIES: dict[GridSpec, CubeFamily] = {}


def cube_family(grid: GridSpec) -> CubeFamily:
    fam = _FAMILIES.get(grid)
    if fam is None:
        fam = _FAMILIES[grid] = CubeFamily(grid)
    return fam


def _interval_box(grid: GridSpec, a: int, b: int) -> Box:
    lo = grid.root.lower[0]
    h = grid.cell_side
    return Box((lo + a * h,), (lo + b * h,))


def family_size(grid: GridSpec) -> int:
    if grid.d == 1:
        n = grid.n_axis
        return n * (n + 1) // 2
    return len(cube_family(grid))


def family_name(grid: GridSpec) -> str:
    return "grid-aligned intervals" if grid.d == 1 else f"translated dyadic cubes (3^{grid.d} systems)"


# ---------------------------------------------------------------------------
# maximal function and characteristics


def maximal_function(g: SampledFunction) -> SampledFunction:
    """Family maximal function evaluated at every cell center."""
    if g.n != 1 or (g.scalar < 0).any():
        raise ValueError("maximal function expects a nonnegative scalar field")
    grid = g.grid
    if grid.d == 1:
        return SampledFunction(grid, kernels.interval_maximal(g.scalar)[:, None])
    fam = cube_family(grid)
    avg = fam.averages(g)
    out = np.full(grid.shape, -np.inf)
    for sl, v in zip(fam.center_ranges, avg):
        if all(s.start < s.stop for s in sl):
            np.maximum(out[sl], v, out=out[sl])
    return SampledFunction(grid, out.ravel()[:, None])


def two_weight_characteristic(w, sigma, p: float, report: bool = False):
    """``sup_Q <w>_Q <sigma>_Q^{p-1}`` over the family."""
    w, sigma = as_weight(w), as_weight(sigma)
    if not p > 1:
        raise ValueError("p must exceed 1")
    grid = w.grid
    if grid.d == 1:
        val, a, b = kernels.interval_ap(w.values, sigma.values, p)
        box = _interval_box(grid, a, b)
    else:
        fam = cube_family(grid)
        vals = fam.averages(w.w) * fam.averages(sigma.w) ** (p - 1)
        i = int(np.argmax(vals))
        val, box = float(vals[i]), fam.cubes[i].box
    if report:
        return ApReport(p, val, box, family_size(grid), family_name(grid))
    return val


def ap_characteristic(w, p: float) -> ApReport:
    """``[w]_{A_p}`` as an :class:`ApReport`."""
    w = as_weight(w)
    return two_weight_characteristic(w, dual_weight(w, p), p, report=True)


def ap_per_cube(w, p: float) -> np.ndarray:
    """``A_p(w; Q)`` for every cube of the family (d=1: all intervals, flattened)."""
    w = as_weight(w)
    s = dual_weight(w, p)
    if w.grid.d == 1:
        aw = kernels._interval_averages(np.concatenate(([0.0], np.cumsum(w.values))))
        asg = kernels._interval_averages(np.concatenate(([0.0], np.cumsum(s.values))))
        v = aw * asg ** (p - 1)
        return v[~np.isnan(v)]
    fam = cube_family(w.grid)
    return fam.averages(w.w) * fam.averages(s.w) ** (p - 1)


def _tree_ainf(fam: CubeFamily, t: int, avg: np.ndarray, mass: np.ndarray) -> tuple[float, int]:
    """Largest dyadic Fujii-Wilson ratio among the cubes of one translated tree."""
    tree = fam.trees[t]
    A = fam.level_arrays(avg, t)
    W = fam.level_arrays(mass, t)
    d = fam.grid.d
    L = len(tree.levels) - 1
    finest_measure = float(Fraction(2) ** (-tree.levels[L] * d))
    best, arg = -np.inf, -1
    for l0 in range(L + 1):
        if A[l0].size == 0:
            continue
        run = A[l0]
        offsets = []
        for li in range(l0, L):
            up = run
            for ax in range(d):
                up = np.repeat(up, 2, axis=ax)
            nxt = np.full(A[li + 1].shape, -np.inf)
            offs = tuple(tree.child_offset(li, ax) for ax in range(d))
            nxt[tuple(slice(o, o + s) for o, s in zip(offs, up.shape))] = up
            run = np.maximum(nxt, A[li + 1])
            offsets.append((offs, up.shape))
        total = run * finest_measure
        for li in range(L - 1, l0 - 1, -1):
            offs, shape = offsets[li - l0]
            block = total[tuple(slice(o, o + s) for o, s in zip(offs, shape))]
            red = block.reshape(sum(([s // 2, 2] for s in shape), [])).sum(axis=tuple(range(1, 2 * d, 2)))
            total = red
        ratio = total / W[l0]
        i = int(np.argmax(ratio))
        if ratio.flat[i] > best:
            best = float(ratio.flat[i])
            arg = fam.tree_slices[t][l0].start + i
    return best, arg


def a_infty_characteristic(w) -> ApReport:
    """Fujii-Wilson ``sup_Q w(Q)^{-1} int_Q M(w 1_Q)`` over the family."""
    w = as_weight(w)
    grid = w.grid
    if grid.d == 1:
        val, a, b = kernels.interval_ainf(w.values)
        return ApReport(math.inf, val, _interval_box(grid, a, b), family_size(grid), family_name(grid))
    fam = cube_family(grid)
    mass = fam.integrals(w.w)
    avg = mass / fam.measures
    best, arg = -np.inf, -1
    for t in range(len(fam.trees)):
        v, i = _tree_ainf(fam, t, avg, mass)
        if v > best:
            best, arg = v, i
    return ApReport(math.inf, best, fam.cubes[arg].box, len(fam), family_name(grid))


def weighted_norm(f: SampledFunction, w, p: float) -> float:
    """``(int ||f||^p w)^{1/p}`` by exact cellwise quadrature."""
    w = as_weight(w)
    if not p >= 1:
        raise ValueError("p must be at least 1")
    return float((np.sum(f.norms() ** p * w.values) * float(f.grid.cell_measure)) ** (1.0 / p))


def np_constant(w, sigma, p: float) -> float:
    """``[w,sigma]_{A_p}^{1/p} ([w]_{A_inf}^{1-1/p} + [sigma]_{A_inf}^{1/p})``."""
    w, sigma = as_weight(w), as_weight(sigma)
    two = two_weight_characteristic(w, sigma, p)
    aw = a_infty_characteristic(w).value
    asg = a_infty_characteristic(sigma).value
    return two ** (1 / p) * (aw ** (1 - 1 / p) + asg ** (1 / p))


# ---------------------------------------------------------------------------
# power weights


def _power_cell_average_1d(s: float, t: float, a: float) -> float:
    """Mean of ``|x|^a`` over ``[s, t)``."""
    def prim(x: float) -> float:
        return math.copysign(abs(x) ** (a + 1) / (a + 1), x)
    return (prim(t) - prim(s)) / (t - s)


def admissible_power(a: float, p: float, d: int) -> bool:
    return -d < a < d * (p - 1)


def power_weight(grid: GridSpec, a: float, origin=None) -> Weight:
    """``|x - origin|^a`` at cell centers; cells touching ``origin`` get their cell mean.

    ``origin`` defaults to the center of the root, which sits on a cell corner.
    """
    if a <= -grid.d:
        raise ValueError("|x|^a is not locally integrable for a <= -d")
    o = np.array([float(x) for x in (origin if origin is not None else grid.root.center)])
    x = grid.centers - o
    r = np.sqrt((x * x).sum(axis=1))
    h = float(grid.cell_side)
    with np.errstate(divide="ignore"):
        vals = r**a
    lo = grid.centers - h / 2 - o
    hi = grid.centers + h / 2 - o
    touching = np.all((lo <= 0) & (hi >= 0), axis=1)
    for i in np.flatnonzero(touching):
        if grid.d == 1:
            vals[i] = _power_cell_average_1d(lo[i, 0], hi[i, 0], a)
        else:
            k = 64
            ticks = [np.linspace(lo[i, ax], hi[i, ax], 2 * k + 1)[1::2] for ax in range(grid.d)]
            pts = np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1).reshape(-1, grid.d)
            vals[i] = float(np.mean(np.sqrt((pts * pts).sum(axis=1)) ** a))
    return Weight(SampledFunction(grid, vals[:, None]))
