"""Truncated singular kernels and their midpoint-quadrature operators.

Kernels are evaluated in the max metric ``|z| = max_i |z_i|``; in ``d = 1`` this
is the usual absolute value. Pairs closer than ``eps_trunc`` contribute nothing,
and with the default truncation of one cell side this drops exactly the
self-cell from the quadrature sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .sampled_field import GridSpec, SampledFunction

KINDS = ("hilbert_truncated", "power_truncated", "matrix_composed", "diagonal_family", "zero")


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A truncated singular kernel into ``n x n`` matrices.

    ``power_truncated`` is ``z_axis / |z|^{d+1}`` times the identity.
    ``matrix_composed`` multiplies the base scalar kernel (Hilbert in ``d = 1``,
    power otherwise) by ``G``. ``diagonal_family`` puts ``scales[i]`` times the
    power kernel along axis ``i mod d`` on the ``i``-th diagonal entry.
    """

    kind: str
    d: int = 1
    n: int = 1
    alpha: float = 1.0
    eps_trunc: float | None = None
    axis: int = 0
    G: np.ndarray | None = None
    scales: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "hilbert_truncated" and self.d != 1:
            raise ValueError("the Hilbert kernel lives in d = 1")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.eps_trunc is not None and not self.eps_trunc > 0:
            raise ValueError("truncation radius must be positive")
        if not 0 <= self.axis < self.d:
            raise ValueError("axis out of range")
        if self.kind == "matrix_composed":
            if self.G is None:
                raise ValueError("matrix_composed needs G")
            G = np.array(self.G, dtype=np.float64)
            if G.shape != (self.n, self.n):
                raise ValueError(f"G must be {self.n}x{self.n}")
            if np.linalg.norm(G, 2) > 1 + 1e-12:
                raise ValueError("G must have operator norm at most 1")
            G.setflags(write=False)
            object.__setattr__(self, "G", G)
        if self.kind == "diagonal_family":
            scales = tuple(float(s) for s in (self.scales if self.scales is not None else (1.0,) * self.n))
            if len(scales) != self.n or any(abs(s) > 1 for s in scales):
                raise ValueError("diagonal_family needs n scales in [-1, 1]")
            object.__setattr__(self, "scales", scales)

    def truncation(self, grid: GridSpec | None = None) -> float:
        if self.eps_trunc is not None:
            return float(self.eps_trunc)
        if grid is None:
            raise ValueError("default truncation is one cell side and needs a grid")
        return float(grid.cell_side)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "d": self.d, "n": self.n, "alpha": self.alpha, "axis": self.axis}
        if self.eps_trunc is not None:
            out["eps_trunc"] = self.eps_trunc
        if self.G is not None:
            out["G"] = self.G.tolist()
        if self.scales is not None:
            out["scales"] = list(self.scales)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "KernelSpec":
        return cls(
            kind=obj["kind"],
            d=int(obj.get("d", 1)),
            n=int(obj.get("n", 1)),
            alpha=float(obj.get("alpha", 1.0)),
            eps_trunc=float(obj["eps_trunc"]) if obj.get("eps_trunc") is not None else None,
            axis=int(obj.get("axis", 0)),
            G=np.array(obj["G"]) if obj.get("G") is not None else None,
            scales=tuple(obj["scales"]) if obj.get("scales") is not None else None,
        )

    @classmethod
    def hilbert(cls, n: int = 1, **kw) -> "KernelSpec":
        if n == 1:
            return cls("hilbert_truncated", d=1, n=1, **kw)
        return cls("matrix_composed", d=1, n=n, G=np.eye(n), **kw)


# ---------------------------------------------------------------------------
# scalar profiles on arrays of offsets z = x - y, shape (..., d)


def _maxnorm(z: np.ndarray) -> np.ndarray:
    return np.abs(z).max(axis=-1)


def _hilbert(z: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / (math.pi * z[..., 0])


def _power(z: np.ndarray, axis: int) -> np.ndarray:
    d = z.shape[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return z[..., axis] / _maxnorm(z) ** (d + 1)


def _base(spec: KernelSpec, z: np.ndarray) -> np.ndarray:
    return _hilbert(z) if spec.d == 1 else _power(z, spec.axis)


def scalar_profiles(spec: KernelSpec, z: np.ndarray, eps: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """``(values, matrix)`` pairs with ``K(z) = sum values * matrix``, truncated at ``eps``."""
    z = np.asarray(z, dtype=np.float64)
    keep = _maxnorm(z) >= eps
    n = spec.n

    def cut(v: np.ndarray) -> np.ndarray:
        return np.where(keep, v, 0.0)

    if spec.kind == "zero":
        return [(np.zeros(z.shape[:-1]), np.zeros((n, n)))]
    if spec.kind == "hilbert_truncated":
        return [(cut(_hilbert(z)), np.eye(n))]
    if spec.kind == "power_truncated":
        return [(cut(_power(z, spec.axis)), np.eye(n))]
    if spec.kind == "matrix_composed":
        return [(cut(_base(spec, z)), spec.G)]
    out = []
    for i, s in enumerate(spec.scales):
        E = np.zeros((n, n))
        E[i, i] = s
        prof = _hilbert(z) if spec.d == 1 else _power(z, i % spec.d)
        out.append((cut(prof), E))
    return out


def kernel_eval(spec: KernelSpec, x, y, eps: float | None = None) -> np.ndarray:
    """``K(x, y)`` as an ``n x n`` matrix; zero when ``|x - y| < eps_trunc``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != (spec.d,) or y.shape != (spec.d,):
        raise ValueError(f"points must have dimension {spec.d}")
    e = spec.eps_trunc if eps is None else eps
    if e is None:
        raise ValueError("pass eps or set eps_trunc")
    out = np.zeros((spec.n, spec.n))
    for vals, M in scalar_profiles(spec, (x - y)[None, :], float(e)):
        out += vals[0] * M
    return out


def matrix_norm(M: np.ndarray, q: float = 2.0) -> float:
    """Operator norm on ``(R^n, l^q)``; exact for ``q`` in {1, 2, inf}, Riesz-Thorin bound otherwise."""
    M = np.atleast_2d(M)
    one = float(np.abs(M).sum(axis=0).max())
    inf = float(np.abs(M).sum(axis=1).max())
    if q == 1:
        return one
    if math.isinf(q):
        return inf
    if q == 2:
        return float(np.linalg.norm(M, 2))
    return one ** (1 / q) * inf ** (1 - 1 / q)


@dataclass
class KernelBounds:
    decay_const: float
    holder_const: float
    samples: int = 0
    holder_samples: int = 0

    def to_json(self) -> dict:
        return {
            "decay_const": self.decay_const,
            "holder_const": self.holder_const,
            "samples": self.samples,
            "holder_samples": self.holder_samples,
        }


def kernel_bounds_check(spec: KernelSpec, sample_pairs, q: float = 2.0, eps: float | None = None) -> KernelBounds:
    """Empirical size and Hölder constants over ``(x, x', y)`` triples.

    Triples violating ``0 < |x - x'| < |x - y| / 2`` (or inside the truncation)
    only feed the size estimate.
    """
    e = spec.eps_trunc if eps is None else eps
    e = 0.0 if e is None else float(e)
    decay = holder = 0.0
    ns = nh = 0
    d = spec.d
    for x, xp, y in sample_pairs:
        x, xp, y = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (x, xp, y))
        r = float(np.abs(x - y).max())
        if r < e or r == 0:
            continue
        K = kernel_eval(spec, x, y, eps=e)
        decay = max(decay, matrix_norm(K, q) * r**d)
        ns += 1
        h = float(np.abs(x - xp).max())
        if 0 < h < r / 2 and float(np.abs(xp - y).max()) >= e:
            Kp = kernel_eval(spec, xp, y, eps=e)
            holder = max(holder, matrix_norm(K - Kp, q) * r**d * (r / h) ** spec.alpha)
            nh += 1
    return KernelBounds(decay, holder, ns, nh)


def random_samples(spec: KernelSpec, count: int, rng: np.random.Generator, scale: float = 4.0):
    """Seeded ``(x, x', y)`` triples with ``|x - x'|`` a random fraction below ``|x - y| / 2``."""
    out = []
    for _ in range(count):
        x = rng.uniform(-scale, scale, spec.d)
        y = rng.uniform(-scale, scale, spec.d)
        r = float(np.abs(x - y).max())
        step = rng.uniform(-1, 1, spec.d)
        step *= rng.uniform(0.01, 0.49) * r / max(float(np.abs(step).max()), 1e-300)
        out.append((x, x + step, y))
    return out


# ---------------------------------------------------------------------------
# quadrature


def offset_table(spec: KernelSpec, grid: GridSpec) -> list[tuple[np.ndarray, np.ndarray]]:
    """Kernel profiles on every integer cell offset, flattened to ``(2N-1)^d`` entries."""
    N = grid.n_axis
    h = float(grid.cell_side)
    ticks = np.arange(-(N - 1), N) * h
    z = np.stack(np.meshgrid(*[ticks] * grid.d, indexing="ij"), axis=-1).reshape(-1, grid.d)
    return scalar_profiles(spec, z, spec.truncation(grid))


def apply_T(spec: KernelSpec, f: SampledFunction) -> SampledFunction:
    """``Tf(x_c) = sum_{c'} K(x_c, x_{c'}) f(x_{c'}) |cell|`` with truncated pairs omitted."""
    grid = f.grid
    if grid.d != spec.d:
        raise ValueError(f"kernel is {spec.d}-dimensional, field is {grid.d}-dimensional")
    if f.n != spec.n:
        raise ValueError(f"kernel acts on R^{spec.n}, field takes values in R^{f.n}")
    vol = float(grid.cell_measure)
    out = np.zeros_like(f.values)
    if np.any(f.values):
        for table, M in offset_table(spec, grid):
            if not np.any(M):
                continue
            conv = kernels.convolve(table, grid.multi_index, grid.n_axis, np.ascontiguousarray(f.values))
            out += conv @ M.T
    return f.with_values(out * vol)


def hilbert_indicator_oracle(x: np.ndarray, a: float, b: float) -> np.ndarray:
    """Hilbert transform of ``1_[a, b)`` off the interval: ``(1/pi) log|(x - a)/(x - b)|``."""
    x = np.asarray(x, dtype=np.float64)
    return np.log(np.abs((x - a) / (x - b))) / math.pi
