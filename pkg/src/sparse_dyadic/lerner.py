"""Stopping-time decomposition of a vector-valued field into a sparse family.

One step takes a cube ``Q`` with center ``c = c_kappa(f; Q)`` and radius
``rho = rho_lam(f - c; Q)`` and selects the maximal dyadic subcubes having a
child on which ``||f - c|| > rho`` holds on more than a ``kappa`` fraction.
Iterating with ``lam = (1 - nu) 2^{-d-2}`` and ``kappa = 1/4`` gives a
``nu``-sparse collection whose ``3 rho`` terms telescope to a pointwise bound
on ``||f - c_kappa(f; Q0)||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dyadic_grid import DyadicCube, format_rational, parse_rational
from .oscillation import center_grid, distances, least_bound, optimal_bound_oracle, pseudomedian
from .sampled_field import EPS, CellSet, GridSpec, SampledFunction, cells_in_box

KAPPA = Fraction(1, 4)


class MismatchedCollectionError(ValueError):
    """The collection was built on a different grid than the field."""


class ResolutionError(ValueError):
    """A cube is not resolved by the field's grid."""


def default_lambda(d: int, nu: Fraction) -> Fraction:
    return (1 - Fraction(nu)) / 2 ** (d + 2)


def _block_slices(grid: GridSpec, Q: DyadicCube) -> tuple[slice, ...]:
    if not grid.contains_cube(Q):
        raise ResolutionError(f"{Q} is not a resolved subcube of the grid root")
    depth = grid.cell_level - Q.j
    scale = 2 ** (Q.j - grid.root.j)
    out = []
    for mq, mr in zip(Q.m, grid.root.m):
        start = (mq - mr * scale) * 2**depth
        out.append(slice(start, start + 2**depth))
    return tuple(out)


def _pool(a: np.ndarray) -> np.ndarray:
    """Sum 2 x ... x 2 blocks of a d-dim array."""
    d = a.ndim
    shape = []
    for s in a.shape:
        shape += [s // 2, 2]
    return a.reshape(shape).sum(axis=tuple(range(1, 2 * d, 2)))


def _any_pool(a: np.ndarray) -> np.ndarray:
    return _pool(a.astype(np.int64)) > 0


def _upsample(a: np.ndarray) -> np.ndarray:
    for ax in range(a.ndim):
        a = np.repeat(a, 2, axis=ax)
    return a


def stopping_children(f: SampledFunction, Q: DyadicCube, lam, kappa, c, rho: float) -> list[DyadicCube]:
    """Maximal dyadic subcubes of ``Q`` with a child whose exceedance fraction is above ``kappa``.

    The comparison ``|C ∩ {||f - c|| > rho}| > kappa |C|`` is done on integer
    cell counts. Single cells have no children and are never selected.
    """
    lam, kappa = Fraction(lam), Fraction(kappa)
    if not 0 < lam <= kappa < Fraction(1, 2):
        raise ValueError("need 0 < lam <= kappa < 1/2")
    grid = f.grid
    sl = _block_slices(grid, Q)
    depth = grid.cell_level - Q.j
    if depth == 0:
        return []
    dist = distances(f, np.arange(grid.ncell), c).reshape(grid.shape)[sl]
    counts = [None] * (depth + 1)
    counts[depth] = (dist > rho).astype(np.int64)
    for lvl in range(depth - 1, -1, -1):
        counts[lvl] = _pool(counts[lvl + 1])
    d = grid.d
    blocked = np.zeros((1,) * d, dtype=bool)
    picked: list[DyadicCube] = []
    for lvl in range(depth):
        child_cells = 2 ** ((depth - lvl - 1) * d)
        hot_child = counts[lvl + 1] * kappa.denominator > kappa.numerator * child_cells
        trigger = _any_pool(hot_child)
        sel = trigger & ~blocked
        base = [m * 2**lvl for m in Q.m]
        for pos in np.argwhere(sel):
            picked.append(DyadicCube(Q.u, Q.j + lvl, tuple(int(b + p) for b, p in zip(base, pos))))
        blocked = _upsample(blocked | sel)
    return picked


@dataclass(frozen=True, eq=False)
class SparseEntry:
    cube: DyadicCube
    generation: int
    witness: CellSet
    center: np.ndarray
    rho: float
    omega_bound: float
    parent: int | None = None
    children: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "cube": self.cube.to_json(),
            "generation": self.generation,
            "parent": self.parent,
            "children": list(self.children),
            "center": [float(x) for x in self.center],
            "rho": float(self.rho),
            "omega_bound": float(self.omega_bound),
            "witness": [int(i) for i in self.witness.members],
        }


@dataclass(frozen=True, eq=False)
class SparseCollection:
    grid: GridSpec
    root: DyadicCube
    nu: Fraction
    lam: Fraction
    kappa: Fraction
    entries: tuple[SparseEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def generation(self, k: int) -> list[SparseEntry]:
        return [e for e in self.entries if e.generation == k]

    @property
    def depth(self) -> int:
        return max(e.generation for e in self.entries) + 1

    def cubes(self) -> list[DyadicCube]:
        return [e.cube for e in self.entries]

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "root": self.root.to_json(),
            "nu": format_rational(self.nu),
            "lambda": format_rational(self.lam),
            "kappa": format_rational(self.kappa),
            "entries": [e.to_json() for e in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SparseCollection":
        grid = GridSpec.from_json(obj["grid"])
        entries = tuple(
            SparseEntry(
                cube=DyadicCube.from_json(e["cube"]),
                generation=int(e["generation"]),
                witness=CellSet(grid, np.asarray(e["witness"], dtype=np.int64)),
                center=np.asarray(e["center"], dtype=np.float64),
                rho=float(e["rho"]),
                omega_bound=float(e["omega_bound"]),
                parent=e.get("parent"),
                children=tuple(e.get("children", ())),
            )
            for e in obj["entries"]
        )
        return cls(
            grid,
            DyadicCube.from_json(obj["root"]),
            parse_rational(obj["nu"]),
            parse_rational(obj["lambda"]),
            parse_rational(obj["kappa"]),
            entries,
        )

    def csv_rows(self) -> list[dict]:
        return [
            {
                "cube": str(e.cube),
                "generation": e.generation,
                "rho": e.rho,
                "witness_fraction": float(e.witness.measure / e.cube.measure),
            }
            for e in self.entries
        ]


def _cube_key(Q: DyadicCube):
    return (Q.lower, Q.j)


def decompose(f: SampledFunction, Q0: DyadicCube, nu=Fraction(1, 2)) -> SparseCollection:
    """Iterate the stopping-time step from ``Q0`` until no cube is selected."""
    nu = Fraction(nu)
    if not 0 < nu < 1:
        raise ValueError("nu must lie in (0, 1)")
    grid = f.grid
    if not grid.contains_cube(Q0):
        raise ResolutionError(f"{Q0} is not a resolved subcube of the grid root")
    lam = default_lambda(grid.d, nu)
    kappa = KAPPA

    records: list[dict] = []
    frontier: list[tuple[DyadicCube, int | None]] = [(Q0, None)]
    gen = 0
    while frontier:
        if gen > grid.J + 1:
            raise AssertionError("stopping-time recursion failed to refine")
        nxt: list[tuple[DyadicCube, int | None]] = []
        for Q, parent in frontier:
            cert = pseudomedian(f, Q, kappa)
            rho = least_bound(f, Q, lam, cert.center)
            kids = stopping_children(f, Q, lam, kappa, cert.center, rho)
            if kids == [Q]:
                raise AssertionError(f"stopping step selected its own cube {Q}")
            me = len(records)
            records.append(dict(cube=Q, generation=gen, center=cert.center, rho=rho, parent=parent, children=[]))
            if parent is not None:
                records[parent]["children"].append(me)
            nxt.extend((K, me) for K in kids)
        nxt.sort(key=lambda item: _cube_key(item[0]))
        frontier = nxt
        gen += 1

    owner = np.full(grid.ncell, -1, dtype=np.int64)
    for i, r in enumerate(records):
        owner[cells_in_box(grid, r["cube"].box)] = i
    entries = tuple(
        SparseEntry(
            cube=r["cube"],
            generation=r["generation"],
            witness=CellSet(grid, np.flatnonzero(owner == i)),
            center=r["center"],
            rho=r["rho"],
            omega_bound=3.0 * r["rho"],
            parent=r["parent"],
            children=tuple(r["children"]),
        )
        for i, r in enumerate(records)
    )
    return SparseCollection(grid, Q0, nu, lam, kappa, entries)


def coverage_sum(S: SparseCollection, weights) -> np.ndarray:
    """``sum_{Q in S} weights[Q] * 1_Q`` at every cell center of the grid."""
    out = np.zeros(S.grid.ncell)
    for e, wgt in zip(S.entries, weights):
        out[cells_in_box(S.grid, e.cube.box)] += wgt
    return out


@dataclass
class VerificationReport:
    max_violation: float
    holds: bool
    worst_cell: int | None
    lemma_parent_child: float = 0.0
    lemma_uncovered: float = 0.0
    omega_max_violation: float | None = None
    omega_holds: bool | None = None
    sparse_violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.holds and not self.sparse_violations and self.omega_holds is not False

    def to_json(self) -> dict:
        return {
            "max_violation": self.max_violation,
            "holds": self.holds,
            "worst_cell": self.worst_cell,
            "lemma_parent_child": self.lemma_parent_child,
            "lemma_uncovered": self.lemma_uncovered,
            "omega_max_violation": self.omega_max_violation,
            "omega_holds": self.omega_holds,
            "sparse_violations": list(self.sparse_violations),
        }


def check_sparse(S: SparseCollection) -> list[str]:
    """Exact checks of the sparseness structure; returns human-readable violations."""
    out: list[str] = []
    grid = S.grid
    d = grid.d
    seen = np.full(grid.ncell, -1, dtype=np.int64)
    for i, e in enumerate(S.entries):
        inside = cells_in_box(grid, e.cube.box)
        if not np.isin(e.witness.members, inside).all():
            out.append(f"entry {i} {e.cube}: witness leaves the cube")
        clash = seen[e.witness.members]
        if (clash >= 0).any():
            out.append(f"entry {i} {e.cube}: witness overlaps entry {int(clash[clash >= 0][0])}")
        seen[e.witness.members] = i
        if e.witness.measure < S.nu * e.cube.measure:
            out.append(f"entry {i} {e.cube}: |E| = {e.witness.measure} < nu |Q| = {S.nu * e.cube.measure}")
        kids = [S.entries[c].cube for c in e.children]
        bound = 2**d * (S.lam / S.kappa) * e.cube.measure
        total = sum((K.measure for K in kids), Fraction(0))
        if total > bound:
            out.append(f"entry {i} {e.cube}: children measure {total} > {bound}")
        for K in kids:
            if not e.cube.contains(K) or K == e.cube:
                out.append(f"entry {i} {e.cube}: child {K} is not a proper subcube")
    gens = sorted({e.generation for e in S.entries})
    top = S.root.measure
    for k in gens:
        cubes = [e.cube for e in S.generation(k)]
        covered = np.zeros(grid.ncell, dtype=np.int64)
        for Q in cubes:
            covered[cells_in_box(grid, Q.box)] += 1
        if (covered > 1).any():
            out.append(f"generation {k}: cubes overlap")
        mass = sum((Q.measure for Q in cubes), Fraction(0))
        if mass > (1 - S.nu) ** k * top:
            out.append(f"generation {k}: |Omega^k| = {mass} > (1-nu)^k |Q0|")
        if k > 0:
            prev = [e.cube for e in S.generation(k - 1)]
            for Q in cubes:
                if not any(P.contains(Q) for P in prev):
                    out.append(f"generation {k}: {Q} not inside a generation-{k - 1} cube")
    return out


def lemma_gaps(f: SampledFunction, S: SparseCollection) -> tuple[float, float]:
    """Largest excess in the parent/child center bound and the uncovered-cell bound.

    Returns ``max(||c_parent - c_child|| - 3 rho_parent)`` over entry pairs and
    ``max(||f(x) - c_Q|| - 3 rho_Q)`` over cells of ``Q`` outside its selected
    children; both are ``<= 0`` up to rounding for a valid collection.
    """
    from .kernels import lq_norm

    pc = -np.inf
    unc = -np.inf
    for e in S.entries:
        for c in e.children:
            kid = S.entries[c]
            gap = float(lq_norm((e.center - kid.center)[None, :], f.q)[0]) - 3 * e.rho
            pc = max(pc, gap)
        inside = cells_in_box(f.grid, e.cube.box)
        mask = np.ones(len(inside), dtype=bool)
        for c in e.children:
            mask &= ~np.isin(inside, cells_in_box(f.grid, S.entries[c].cube.box))
        if mask.any():
            unc = max(unc, float((distances(f, inside[mask], e.center) - 3 * e.rho).max()))
    return (pc if np.isfinite(pc) else 0.0), (unc if np.isfinite(unc) else 0.0)


def verify_decomposition(f: SampledFunction, S: SparseCollection, oracle: bool = False, eps: float = EPS) -> VerificationReport:
    """Check ``||f(x) - c(Q0)|| <= sum_{Q ∋ x} 3 rho_Q`` at every cell of ``Q0``.

    With ``oracle=True`` (scalar or ``n <= 3`` fields only) also checks the
    form with constant 12 against brute-force oscillations on each cube.
    """
    if S.grid != f.grid:
        raise MismatchedCollectionError("collection and field live on different grids")
    grid = f.grid
    root = S.entries[0]
    cells = cells_in_box(grid, S.root.box)
    lhs = distances(f, cells, root.center)
    rhs = coverage_sum(S, [3.0 * e.rho for e in S.entries])[cells]
    excess = lhs - rhs
    worst = int(np.argmax(excess))
    max_violation = max(float(excess[worst]), 0.0)
    pc, unc = lemma_gaps(f, S)
    report = VerificationReport(
        max_violation=max_violation,
        holds=max_violation <= eps,
        worst_cell=int(cells[worst]) if max_violation > 0 else None,
        lemma_parent_child=pc,
        lemma_uncovered=unc,
        sparse_violations=check_sparse(S),
    )
    if oracle:
        omegas = [optimal_bound_oracle(f, e.cube, S.lam, center_grid(f, e.cube)) for e in S.entries]
        rhs12 = coverage_sum(S, [12.0 * w for w in omegas])[cells]
        v12 = max(float((lhs - rhs12).max()), 0.0)
        report.omega_max_violation = v12
        report.omega_holds = v12 <= eps
    return report
