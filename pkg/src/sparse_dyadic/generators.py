"""Seeded field and weight generators driven by short spec strings.

Examples::

    constant value=2
    indicator lo=1/4 hi=1/2
    bump c=1/2 r=1/4
    random-piecewise blocks=12 noise=0.05
    power a=0.6 domain=[-1,1] J=10

Coordinates ``lo``, ``hi``, ``c`` and ``r`` are relative to the root, so
``[0, 1)`` spans it along every axis. All randomness comes from the
generator passed in, normally ``numpy.random.Generator(PCG64(seed))``.
"""

from __future__ import annotations

import math
import shlex
from fractions import Fraction

import numpy as np

from .dyadic_grid import DyadicCube
from .sampled_field import GridSpec, SampledFunction
from .weights import Weight, power_weight


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def parse_spec(text: str) -> tuple[str, dict[str, str]]:
    parts = shlex.split(text)
    if not parts:
        raise ValueError("empty generator spec")
    params = {}
    for p in parts[1:]:
        if "=" not in p:
            raise ValueError(f"expected key=value, got {p!r}")
        k, v = p.split("=", 1)
        params[k.strip()] = v.strip()
    return parts[0], params


def _num(params: dict, key: str, default: float) -> float:
    return float(Fraction(params[key])) if key in params else default


def _relative(grid: GridSpec) -> np.ndarray:
    lo = np.array([float(x) for x in grid.root.lower])
    return (grid.centers - lo) / float(grid.root.side)


def random_piecewise(grid: GridSpec, n: int, rng: np.random.Generator, blocks: int = 12, noise: float = 0.05) -> np.ndarray:
    """Sum of random vectors on random dyadic blocks at every scale, plus cellwise noise."""
    values = np.zeros((grid.ncell, n))
    shape = grid.shape
    for _ in range(blocks):
        depth = int(rng.integers(1, grid.J + 1))
        cells = 2 ** (grid.J - depth)
        pos = rng.integers(0, 2**depth, grid.d)
        sl = tuple(slice(int(p) * cells, (int(p) + 1) * cells) for p in pos)
        vec = rng.normal(0, 1, n) * (1 + depth / 2)
        block = np.zeros(shape + (n,))
        block[sl] = vec
        values += block.reshape(grid.ncell, n)
    values += noise * rng.normal(0, 1, (grid.ncell, n))
    return values


def make_field(spec: str, grid: GridSpec, n: int = 1, q: float = 2.0, rng: np.random.Generator | None = None) -> SampledFunction:
    kind, params = parse_spec(spec)
    x = _relative(grid)
    if kind == "constant":
        vals = np.full((grid.ncell, n), _num(params, "value", 1.0))
    elif kind == "indicator":
        lo, hi = _num(params, "lo", 0.25), _num(params, "hi", 0.5)
        mask = np.all((x >= lo) & (x < hi), axis=1)
        vals = np.repeat(mask[:, None].astype(float), n, axis=1) * _num(params, "value", 1.0)
    elif kind == "bump":
        c, r = _num(params, "c", 0.5), _num(params, "r", 0.25)
        t = np.clip(1 - (((x - c) / r) ** 2).sum(axis=1), 0, None) ** 2
        vals = np.repeat(t[:, None], n, axis=1)
    elif kind == "random-piecewise":
        if rng is None:
            raise ValueError("random-piecewise needs a seeded generator")
        vals = random_piecewise(grid, n, rng, int(_num(params, "blocks", 12)), _num(params, "noise", 0.05))
    else:
        raise ValueError(f"unknown field generator {kind!r}")
    return SampledFunction(grid, vals, q)


def _parse_domain(text: str) -> tuple[Fraction, Fraction]:
    inner = text.strip().strip("[]()")
    lo, hi = (Fraction(s.strip()) for s in inner.split(","))
    if not hi > lo:
        raise ValueError(f"empty domain {text!r}")
    return lo, hi


def make_weight(spec: str, d: int = 1, rng: np.random.Generator | None = None) -> Weight:
    """``power a=.. domain=[lo,hi] J=..`` or ``lognormal sigma=.. J=..``.

    A dyadic root never has 0 in its interior, so the power domain is
    translated onto the standard root ``[0, hi - lo)^d`` and the singularity
    sits at the image of the origin.
    """
    kind, params = parse_spec(spec)
    J = int(params.get("J", 10))
    if kind == "power":
        lo, hi = _parse_domain(params.get("domain", "[-1,1]"))
        side = hi - lo
        j = -round(math.log2(side))
        if Fraction(2) ** (-j) != side:
            raise ValueError("domain length must be a power of two")
        if not lo <= 0 <= hi:
            raise ValueError("domain must contain the singularity at 0")
        grid = GridSpec(DyadicCube.standard(j, (0,) * d), J)
        return power_weight(grid, _num(params, "a", 0.5), origin=(-lo,) * d)
    if kind == "lognormal":
        if rng is None:
            raise ValueError("lognormal weights need a seeded generator")
        grid = GridSpec.unit(d, J)
        sigma = _num(params, "sigma", 0.5)
        return Weight(SampledFunction(grid, np.exp(sigma * random_piecewise(grid, 1, rng, noise=1.0))))
    raise ValueError(f"unknown weight generator {kind!r}")
