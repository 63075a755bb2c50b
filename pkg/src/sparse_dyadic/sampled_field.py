"""Piecewise-constant R^n-valued functions on a uniform standard dyadic grid.

Cells are the ``2^{Jd}`` standard dyadic descendants of a root cube, indexed
row-major. Values are float64; every measure (cell counts, box overlaps) is an
exact :class:`~fractions.Fraction` so that threshold comparisons such as
``|E| <= lam * |Q|`` never depend on rounding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .dyadic_grid import Box, DyadicCube
from .kernels import lq_norm

# slack for floating-point inequalities; never applied to measure comparisons
EPS = 1e-9


class EmptyCubeError(ValueError):
    """The cube contains no cell centers of the grid."""


def parse_q(q) -> float:
    if isinstance(q, str):
        q = q.strip().lower()
        if q in ("inf", "infinity", "∞"):
            return math.inf
        q = float(q)
    q = float(q)
    if not (q >= 1):
        raise ValueError(f"norm exponent must lie in [1, inf], got {q}")
    return q


def format_q(q: float) -> str | float:
    return "inf" if math.isinf(q) else q


@dataclass(frozen=True)
class GridSpec:
    root: DyadicCube
    J: int

    def __post_init__(self) -> None:
        if not self.root.is_standard:
            raise ValueError("the ambient root must be a standard dyadic cube")
        if self.J < 0:
            raise ValueError("refinement depth must be nonnegative")

    @property
    def d(self) -> int:
        return self.root.d

    @property
    def n_axis(self) -> int:
        return 2**self.J

    @property
    def ncell(self) -> int:
        return self.n_axis**self.d

    @property
    def cell_level(self) -> int:
        return self.root.j + self.J

    @property
    def cell_side(self) -> Fraction:
        return self.root.side / self.n_axis

    @property
    def cell_measure(self) -> Fraction:
        return self.cell_side**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_axis,) * self.d

    @cached_property
    def multi_index(self) -> np.ndarray:
        """``(ncell, d)`` integer cell positions relative to the root, row-major."""
        grids = np.meshgrid(*[np.arange(self.n_axis)] * self.d, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)

    @cached_property
    def centers(self) -> np.ndarray:
        lo = np.array([float(x) for x in self.root.lower])
        return lo + (self.multi_index + 0.5) * float(self.cell_side)

    def cell_cube(self, index: int) -> DyadicCube:
        pos = self.multi_index[index]
        base = [mi * self.n_axis for mi in self.root.m]
        return DyadicCube.standard(self.cell_level, tuple(int(b + p) for b, p in zip(base, pos)))

    def flat_index(self, multi: Sequence[int]) -> int:
        out = 0
        for p in multi:
            out = out * self.n_axis + int(p)
        return out

    def contains_cube(self, Q: DyadicCube) -> bool:
        return Q.is_standard and self.root.contains(Q) and Q.j <= self.cell_level

    def to_json(self) -> dict:
        return {"root": self.root.to_json(), "J": self.J}

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        return cls(DyadicCube.from_json(obj["root"]), int(obj["J"]))

    @classmethod
    def unit(cls, d: int, J: int, j: int = 0, m: Sequence[int] | None = None) -> "GridSpec":
        return cls(DyadicCube.standard(j, tuple(m) if m is not None else (0,) * d), J)

    # -- per-axis helpers, all exact ------------------------------------

    def _axis_units(self, x: Fraction, axis: int) -> Fraction:
        return (x - self.root.lower[axis]) / self.cell_side

    def center_range(self, box: Box) -> list[tuple[int, int]]:
        """Per axis, the half-open index range of cells whose center lies in ``box``."""
        out = []
        half = Fraction(1, 2)
        for ax in range(self.d):
            lo = math.ceil(self._axis_units(box.lower[ax], ax) - half)
            hi = math.ceil(self._axis_units(box.upper[ax], ax) - half)
            out.append((max(lo, 0), min(hi, self.n_axis)))
        return out

    def overlap_segments(self, box: Box) -> list[list[tuple[int, int, Fraction]]]:
        """Per axis, ``(start, stop, weight)`` runs of cells overlapping ``box``.

        Weights are overlap lengths in cell-side units; a run has constant weight.
        An axis with no overlap yields an empty list.
        """
        out = []
        for ax in range(self.d):
            a = max(self._axis_units(box.lower[ax], ax), Fraction(0))
            b = min(self._axis_units(box.upper[ax], ax), Fraction(self.n_axis))
            if a >= b:
                out.append([])
                continue
            i0, i1 = math.floor(a), math.ceil(b)
            if i1 - i0 == 1:
                out.append([(i0, i1, b - a)])
                continue
            segs = [(i0, i0 + 1, i0 + 1 - a)]
            if i1 - 1 > i0 + 1:
                segs.append((i0 + 1, i1 - 1, Fraction(1)))
            segs.append((i1 - 1, i1, b - (i1 - 1)))
            out.append(segs)
        return out


def cells_in_box(grid: GridSpec, box: Box) -> np.ndarray:
    """Flat indices (ascending) of cells whose center lies in ``box``."""
    ranges = grid.center_range(box)
    if any(lo >= hi for lo, hi in ranges):
        return np.empty(0, dtype=np.int64)
    flat = np.zeros(1, dtype=np.int64)
    for lo, hi in ranges:
        flat = (flat[:, None] * grid.n_axis + np.arange(lo, hi)[None, :]).ravel()
    return flat


def center_mask(grid: GridSpec, box: Box) -> np.ndarray:
    mask = np.zeros(grid.ncell, dtype=bool)
    mask[cells_in_box(grid, box)] = True
    return mask


@dataclass(frozen=True, eq=False)
class CellSet:
    grid: GridSpec
    members: np.ndarray

    def __post_init__(self) -> None:
        m = np.unique(np.asarray(self.members, dtype=np.int64))
        if len(m) and (m[0] < 0 or m[-1] >= self.grid.ncell):
            raise ValueError("cell index out of range")
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def measure(self) -> Fraction:
        return len(self.members) * self.grid.cell_measure

    def isdisjoint(self, other: "CellSet") -> bool:
        return len(np.intersect1d(self.members, other.members, assume_unique=True)) == 0

    def issubset(self, other: "CellSet") -> bool:
        return bool(np.isin(self.members, other.members, assume_unique=True).all())

    def __eq__(self, other) -> bool:
        return isinstance(other, CellSet) and self.grid == other.grid and np.array_equal(self.members, other.members)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A cellwise-constant map into ``(R^n, l^q)``; zero outside the root."""

    grid: GridSpec
    values: np.ndarray
    q: float = 2.0

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.ncell:
            raise ValueError(f"expected {self.grid.ncell} cell values, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "q", parse_q(self.q))

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def scalar(self) -> np.ndarray:
        if self.n != 1:
            raise ValueError("field is vector-valued")
        return self.values[:, 0]

    def norms(self) -> np.ndarray:
        return lq_norm(self.values, self.q)

    def with_values(self, values: np.ndarray) -> "SampledFunction":
        return SampledFunction(self.grid, values, self.q)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        return self.with_values(self.values - other.values)

    def __mul__(self, c: float) -> "SampledFunction":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    @cached_property
    def _sat(self) -> np.ndarray:
        """Zero-padded summed-area table of the first component."""
        g = self.values[:, 0].reshape(self.grid.shape)
        sat = np.zeros(tuple(s + 1 for s in g.shape))
        inner = g
        for ax in range(g.ndim):
            inner = np.cumsum(inner, axis=ax)
        sat[(slice(1, None),) * g.ndim] = inner
        return sat

    def block_sum(self, start: Sequence[int], stop: Sequence[int]) -> float:
        """Sum of the first component over the index block ``[start, stop)``."""
        sat = self._sat
        total = 0.0
        for corner in itertools.product((0, 1), repeat=len(start)):
            idx = tuple(stop[i] if c else start[i] for i, c in enumerate(corner))
            sign = (-1) ** (len(start) - sum(corner))
            total += sign * sat[idx]
        return total


def norm_field(f: SampledFunction) -> SampledFunction:
    """The scalar field ``x -> ||f(x)||_q``."""
    return SampledFunction(f.grid, f.norms()[:, None], 2.0)


def box_integral(g: SampledFunction, box: Box) -> float:
    """Integral of a scalar field over a rational box, exact in the overlap weights."""
    grid = g.grid
    segs = grid.overlap_segments(box)
    if any(not s for s in segs):
        return 0.0
    total = 0.0
    for combo in itertools.product(*segs):
        weight = 1.0
        for _, _, wgt in combo:
            weight *= float(wgt)
        total += weight * g.block_sum([c[0] for c in combo], [c[1] for c in combo])
    return total * float(grid.cell_measure)


def box_average(g: SampledFunction, box: Box | DyadicCube) -> float:
    """Mean of a scalar field over ``box``, with the field extended by zero."""
    b = box.box if isinstance(box, DyadicCube) else box
    return box_integral(g, b) / float(b.measure)


def superlevel_set(g: SampledFunction, box: Box | DyadicCube, r: float) -> CellSet:
    """Cells centered in ``box`` where the scalar ``g`` strictly exceeds ``r``."""
    b = box.box if isinstance(box, DyadicCube) else box
    idx = cells_in_box(g.grid, b)
    vals = g.values[idx, 0] if g.n == 1 else g.norms()[idx]
    return CellSet(g.grid, idx[vals > r])


def decreasing_rearrangement(f: SampledFunction, t) -> float:
    """``min{r >= 0 : |{||f|| > r}| <= t}`` for the cellwise norms of ``f``."""
    t = Fraction(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    allowed = math.floor(t / f.grid.cell_measure)
    norms = np.sort(f.norms())[::-1]
    if allowed >= len(norms):
        return 0.0
    return max(float(norms[allowed]), 0.0)


def restrict(f: SampledFunction, box: Box | DyadicCube) -> SampledFunction:
    """``f * 1_box`` with the indicator evaluated at cell centers."""
    b = box.box if isinstance(box, DyadicCube) else box
    mask = center_mask(f.grid, b)
    return f.with_values(np.where(mask[:, None], f.values, 0.0))
