"""Pointwise sparse domination of ``Tf`` and the weighted-norm experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cz_operator import KernelSpec, apply_T
from .dyadic_grid import DyadicCube, dilate, format_rational, shifted_cover
from .lerner import SparseCollection, check_sparse, decompose
from .oscillation import pseudomedian
from .sampled_field import GridSpec, SampledFunction, box_average, cells_in_box, norm_field
from .shift_ops import ShiftSpec, apply_A, overlap_count
from .weights import admissible_power, ap_characteristic, power_weight, weighted_norm


def _u_key(u) -> str:
    return ",".join(format_rational(x) for x in u)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise ``num / den`` with ``0 / 0 = 0`` and ``x / 0 = inf`` for ``x > 0``."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros(np.broadcast(num, den).shape)
    pos = den > 0
    out[pos] = num[pos] / den[pos]
    out[~pos & (num > 0)] = np.inf
    return out


@dataclass
class DominationReport:
    collections: dict[tuple[str, int], ShiftSpec]
    rhs_field: SampledFunction
    lhs_field: SampledFunction
    C_emp: float
    per_k_mass: list[float]
    tail_bound: float
    decomposition: SparseCollection
    worst_cell: int | None = None
    violations: list[str] = field(default_factory=list)

    @property
    def sparse_ok(self) -> bool:
        return not self.violations

    def mass_decay_ratios(self) -> list[float]:
        m = self.per_k_mass
        return [float(_safe_ratio(m[k + 1], m[k])) for k in range(len(m) - 1)]

    def to_json(self) -> dict:
        return {
            "C_emp": self.C_emp,
            "worst_cell": self.worst_cell,
            "per_k_mass": list(self.per_k_mass),
            "tail_bound": self.tail_bound,
            "entries": len(self.decomposition),
            "collections": [
                {"u": u, "k": k, "count": len(spec.cubes)} for (u, k), spec in sorted(self.collections.items(), key=lambda kv: (kv[0][1], kv[0][0]))
            ],
            "violations": list(self.violations),
        }

    def csv_rows(self) -> list[dict]:
        grid = self.rhs_field.grid
        return [
            {"cell": i, "x": ";".join(f"{v:.17g}" for v in grid.centers[i]), "lhs": float(a), "rhs": float(b)}
            for i, (a, b) in enumerate(zip(self.lhs_field.scalar, self.rhs_field.scalar))
        ]


def dominate(spec: KernelSpec, f: SampledFunction, Q0: DyadicCube, nu=Fraction(1, 2), K: int = 8) -> DominationReport:
    """Bound ``||Tf||`` on ``Q0`` by ``sum_k 2^{-alpha k} sum_u A_{S^u_k, k} ||f||``.

    ``Tf`` is decomposed on ``Q0``; each selected cube ``Q`` and each ``k <= K``
    gives ``R(Q, k)`` from :func:`shifted_cover`, and the cubes sharing a
    translation ``u`` form ``S^u_k``. Each ``R`` is witnessed by ``E(Q)`` of the
    first ``Q`` that produced it, and the witnesses are checked exactly.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    grid = f.grid
    outside = np.ones(grid.ncell, dtype=bool)
    outside[cells_in_box(grid, Q0.box)] = False
    if np.any(f.values[outside]):
        raise ValueError("f must be supported in Q0")
    Tf = apply_T(spec, f)
    S = decompose(Tf, Q0, nu)
    d = grid.d
    ratio = Fraction(1, 2 * 6**d)
    g = norm_field(f)
    violations = check_sparse(S)

    collections: dict[tuple[str, int], ShiftSpec] = {}
    rhs = np.zeros(grid.ncell)
    per_k_mass = []
    cm = float(grid.cell_measure)
    for k in range(K + 1):
        groups: dict[tuple, dict[DyadicCube, int]] = {}
        all_R = []
        for i, e in enumerate(S.entries):
            R, u = shifted_cover(e.cube, k)
            all_R.append(R)
            groups.setdefault(u, {}).setdefault(R, i)
        term = np.zeros(grid.ncell)
        distinct = []
        for u in sorted(groups):
            owners = groups[u]
            cubes = tuple(sorted(owners, key=lambda c: (c.j, c.m)))
            distinct.extend(cubes)
            for R in cubes:
                E = S.entries[owners[R]].witness
                if E.measure < ratio * R.measure:
                    violations.append(f"k={k} u={_u_key(u)}: |E| < |R|/(2*6^d) for {R}")
                if not all(R.contains(grid.cell_cube(int(c))) for c in E.members):
                    violations.append(f"k={k} u={_u_key(u)}: witness leaves {R}")
            seen: dict[int, DyadicCube] = {}
            for R in cubes:
                for c in S.entries[owners[R]].witness.members:
                    if int(c) in seen:
                        violations.append(f"k={k} u={_u_key(u)}: witnesses of {seen[int(c)]} and {R} overlap")
                    seen[int(c)] = R
            A = ShiftSpec(cubes, k)
            collections[(_u_key(u), k)] = A
            term += apply_A(A, g).scalar
        term *= 2.0 ** (-spec.alpha * k)
        rhs += term
        per_k_mass.append(float(term.sum() * cm))
        lhs_count = overlap_count(grid, all_R)
        rhs_count = overlap_count(grid, distinct)
        bad = np.flatnonzero(lhs_count > 4**d * rhs_count)
        if len(bad):
            violations.append(f"k={k}: overlap bound fails at cell {int(bad[0])}")

    mask = np.zeros(grid.ncell, dtype=bool)
    mask[cells_in_box(grid, Q0.box)] = True
    lhs = np.where(mask, Tf.norms(), 0.0)
    rhs = np.where(mask, rhs, 0.0)
    r = _safe_ratio(lhs, rhs)
    worst = int(np.argmax(r))
    C = float(r[worst])
    a = spec.alpha
    tail = float(g.scalar.max(initial=0.0)) * 2.0 ** (-a * (K + 1)) / (1 - 2.0 ** (-a))
    return DominationReport(
        collections=collections,
        rhs_field=SampledFunction(grid, rhs[:, None]),
        lhs_field=SampledFunction(grid, lhs[:, None]),
        C_emp=C,
        per_k_mass=per_k_mass,
        tail_bound=tail,
        decomposition=S,
        worst_cell=worst if C > 0 else None,
        violations=violations,
    )


# ---------------------------------------------------------------------------
# weighted norms against power weights


@dataclass
class A2Row:
    a: float
    characteristic: float
    ratio: float
    p: float
    best_function: str

    def to_json(self) -> dict:
        return {"a": self.a, "characteristic": self.characteristic, "ratio": self.ratio, "p": self.p, "best_function": self.best_function}


@dataclass
class A2Experiment:
    rows: list[A2Row]
    fitted_slope: float
    p: float
    exponent: float

    def to_json(self) -> dict:
        return {"p": self.p, "predicted_exponent": self.exponent, "fitted_slope": self.fitted_slope, "rows": [r.to_json() for r in self.rows]}

    def csv_rows(self) -> list[dict]:
        return [r.to_json() for r in self.rows]


class InadmissibleExponentError(ValueError):
    """The power weight is not in ``A_p``."""


def test_bank(grid: GridSpec, seed: int = 0) -> list[tuple[str, np.ndarray]]:
    """Twelve scalar test functions: four indicators, four bumps and four seeded random fields.

    The shapes are placed relative to the root center, where power weights
    put their singularity.
    """
    lo = float(grid.root.lower[0])
    side = float(grid.root.side)
    x = (grid.centers[:, 0] - lo) / side  # in [0, 1), singularity at 1/2
    bank = []
    for name, (a, b) in {
        "ind_right_half": (0.5, 1.0),
        "ind_left_quarter": (0.25, 0.5),
        "ind_centered": (0.375, 0.625),
        "ind_near_center": (0.5, 0.5 + 1 / 64),
    }.items():
        bank.append((name, ((x >= a) & (x < b)).astype(float)))
    for name, (c, r) in {
        "bump_center": (0.5, 0.25),
        "bump_right": (0.625, 0.125),
        "bump_left": (0.3, 0.2),
        "bump_narrow": (0.52, 0.03),
    }.items():
        t = np.clip(1 - ((x - c) / r) ** 2, 0, None)
        bank.append((name, t**2))
    rng = np.random.Generator(np.random.PCG64(seed))
    for i in range(4):
        v = rng.uniform(-1, 1, grid.ncell)
        if i % 2:
            v = np.repeat(rng.uniform(-1, 1, grid.ncell // 16), 16)
        bank.append((f"random_{i}", v))
    return [(n, v) for n, v in bank if np.any(v)]


def a2_experiment(spec: KernelSpec, p: float, exponents, J: int = 10, seed: int = 0) -> A2Experiment:
    """Largest ``||Tf||_{L^p_w} / ||f||_{L^p_w}`` over :func:`test_bank` for each power weight."""
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    if spec.d != 1 or spec.n != 1:
        raise ValueError("the power-weight experiment is scalar and one-dimensional")
    for a in exponents:
        if abs(a) >= p - 1 or not admissible_power(a, p, 1):
            raise InadmissibleExponentError(f"|x|^{a} is not an A_{p} weight")
    grid = GridSpec.unit(1, J, j=-1)
    bank = [(name, SampledFunction(grid, v[:, None])) for name, v in test_bank(grid, seed)]
    images = [apply_T(spec, f) for _, f in bank]
    rows = []
    for a in exponents:
        w = power_weight(grid, float(a))
        char = ap_characteristic(w, p).value
        best, best_name = -1.0, ""
        for (name, f), Tf in zip(bank, images):
            r = weighted_norm(Tf, w, p) / weighted_norm(f, w, p)
            if r > best:
                best, best_name = r, name
        rows.append(A2Row(float(a), char, best, p, best_name))
    rows.sort(key=lambda r: (r.characteristic, r.a))
    logx = np.log([r.characteristic for r in rows])
    logy = np.log([r.ratio for r in rows])
    slope = float(np.polyfit(logx, logy, 1)[0]) if np.ptp(logx) > 0 else 0.0
    return A2Experiment(rows, slope, p, max(1.0, 1.0 / (p - 1)))


# ---------------------------------------------------------------------------
# oscillation of Tf against dilated averages


@dataclass
class OscillationRow:
    cube: DyadicCube
    omega_hat: float
    series: float
    ratio: float

    def to_json(self) -> dict:
        return {"cube": self.cube.to_json(), "omega_hat": self.omega_hat, "series": self.series, "ratio": self.ratio}


def dilated_series(g: SampledFunction, Q: DyadicCube, alpha: float, K: int) -> float:
    """``sum_{k<=K} 2^{-alpha k} avg_{2^k Q} g`` plus the tail bound ``sum_{k>K} 2^{-alpha k} sup g``."""
    total = sum(2.0 ** (-alpha * k) * box_average(g, dilate(Q, k)) for k in range(K + 1))
    return total + float(g.scalar.max(initial=0.0)) * 2.0 ** (-alpha * (K + 1)) / (1 - 2.0 ** (-alpha))


def oscillation_kernel_report(spec: KernelSpec, f: SampledFunction, cubes, lam=Fraction(1, 8), K: int = 8) -> list[OscillationRow]:
    """Pseudomedian radius of ``Tf`` on each cube over the dilated-average series of ``||f||``."""
    lam = Fraction(lam)
    if not 0 < lam < Fraction(1, 2):
        raise ValueError("lam must lie in (0, 1/2)")
    Tf = apply_T(spec, f)
    g = norm_field(f)
    rows = []
    for Q in cubes:
        om = pseudomedian(Tf, Q, lam).radius
        s = dilated_series(g, Q, spec.alpha, K)
        rows.append(OscillationRow(Q, om, s, float(_safe_ratio(om, s))))
    return rows


def center_bound_ratio(spec: KernelSpec, f: SampledFunction, Q0: DyadicCube, lam=Fraction(1, 8)) -> float:
    """``||c_lam(Tf; Q0)|| / avg_{Q0} ||f||`` for ``f`` supported in ``Q0``."""
    Tf = apply_T(spec, f)
    c = pseudomedian(Tf, Q0, Fraction(lam)).center
    from .kernels import lq_norm

    num = float(lq_norm(c[None, :], f.q)[0])
    return float(_safe_ratio(num, box_average(norm_field(f), Q0)))
