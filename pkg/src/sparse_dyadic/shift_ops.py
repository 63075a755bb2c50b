"""Positive dyadic shifts evaluated at the cell centers of a standard grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dyadic_grid import DyadicCube, ancestor
from .sampled_field import SampledFunction, box_average, cells_in_box


@dataclass(frozen=True)
class ShiftSpec:
    """The operator ``g -> sum_{Q in cubes} 1_Q <g>_{Q^{(k)}}``."""

    cubes: tuple[DyadicCube, ...]
    k: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "cubes", tuple(self.cubes))
        if self.k < 0:
            raise ValueError("complexity k must be nonnegative")
        if len({c.u for c in self.cubes}) > 1:
            raise ValueError("all cubes of a shift must share one translation")

    def to_json(self) -> dict:
        return {"k": self.k, "cubes": [c.to_json() for c in self.cubes]}

    @classmethod
    def from_json(cls, obj: dict) -> "ShiftSpec":
        return cls(tuple(DyadicCube.from_json(c) for c in obj["cubes"]), int(obj["k"]))


@dataclass(frozen=True)
class ShiftTerm:
    Q: DyadicCube
    R: DyadicCube
    S: DyadicCube
    a: float = 1.0


@dataclass(frozen=True)
class GeneralShiftSpec:
    """``g -> sum a_QRS 1_R <g>_S`` with ``R, S ⊂ Q`` at relative depths ``m`` and ``n``."""

    terms: tuple[ShiftTerm, ...]
    m: int
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.m < 0 or self.n < 0:
            raise ValueError("m and n must be nonnegative")
        for t in self.terms:
            if not 0 <= t.a <= 1:
                raise ValueError(f"coefficient {t.a} outside [0, 1]")
            if not (t.Q.contains(t.R) and t.Q.contains(t.S)):
                raise ValueError("R and S must lie inside Q")
            if t.R.side * 2**self.m != t.Q.side or t.S.side * 2**self.n != t.Q.side:
                raise ValueError("side lengths do not match the complexity (m, n)")

    @property
    def complexity(self) -> int:
        return max(1, self.m, self.n)


def _check_nonnegative(g: SampledFunction) -> None:
    if g.n != 1:
        raise ValueError("shift operators act on scalar fields")
    if (g.scalar < 0).any():
        raise ValueError("shift operators act on nonnegative fields")


def apply_A(spec: ShiftSpec, g: SampledFunction) -> SampledFunction:
    _check_nonnegative(g)
    out = np.zeros(g.grid.ncell)
    for Q in spec.cubes:
        idx = cells_in_box(g.grid, Q.box)
        if len(idx):
            out[idx] += box_average(g, ancestor(Q, spec.k))
    return SampledFunction(g.grid, out[:, None])


def apply_general(spec: GeneralShiftSpec, g: SampledFunction) -> SampledFunction:
    _check_nonnegative(g)
    out = np.zeros(g.grid.ncell)
    for t in spec.terms:
        if t.a == 0:
            continue
        idx = cells_in_box(g.grid, t.R.box)
        if len(idx):
            out[idx] += t.a * box_average(g, t.S)
    return SampledFunction(g.grid, out[:, None])


def as_general(spec: ShiftSpec) -> GeneralShiftSpec:
    """Encode ``A_{S,k}`` with ``a_QRS = 1`` exactly for ``(R, S) = (R, R^{(k)})``, ``Q = R^{(k)}``."""
    terms = []
    for R in spec.cubes:
        top = ancestor(R, spec.k)
        terms.append(ShiftTerm(Q=top, R=R, S=top, a=1.0))
    return GeneralShiftSpec(tuple(terms), m=spec.k, n=0)


def inner(g: SampledFunction, h: SampledFunction) -> float:
    return float(np.dot(g.scalar, h.scalar) * float(g.grid.cell_measure))


def adjoint_pairing_check(spec: ShiftSpec, g: SampledFunction, h: SampledFunction) -> tuple[float, float]:
    """``(<A g, h>, <g, A h>)`` for ``k = 0`` on cubes made of whole grid cells."""
    if spec.k != 0:
        raise ValueError("the pairing is symmetric only for k = 0")
    for Q in spec.cubes:
        if not g.grid.contains_cube(Q):
            raise ValueError(f"{Q} is not a union of grid cells")
    return inner(apply_A(spec, g), h), inner(g, apply_A(spec, h))


def overlap_count(grid, cubes: Sequence[DyadicCube]) -> np.ndarray:
    """Number of cubes containing each cell center."""
    out = np.zeros(grid.ncell, dtype=np.int64)
    for Q in cubes:
        out[cells_in_box(grid, Q.box)] += 1
    return out
