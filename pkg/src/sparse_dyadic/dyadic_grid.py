"""Exact geometry of standard and one-third-translated dyadic cubes.

A cube of the translated system ``D^u`` is the half-open set
``2^{-j}([0,1)^d + m + (-1)^j u)`` with ``u`` in ``{0, 1/3, 2/3}^d``. All
corners are rationals with denominator dividing ``3 * 2^j``, so every
containment and measure test here runs on :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

THIRDS = (Fraction(0), Fraction(1, 3), Fraction(2, 3))


def _pow2(j: int) -> Fraction:
    return Fraction(2) ** j


def parse_rational(text: str | int | Fraction) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Box:
    """Half-open product of intervals ``[lower_i, upper_i)``."""

    lower: tuple[Fraction, ...]
    upper: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        lo = tuple(Fraction(x) for x in self.lower)
        hi = tuple(Fraction(x) for x in self.upper)
        if len(lo) != len(hi):
            raise ValueError("corner dimensions differ")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate box {lo} .. {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> tuple[Fraction, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def measure(self) -> Fraction:
        out = Fraction(1)
        for s in self.sides:
            out *= s
        return out

    @property
    def center(self) -> tuple[Fraction, ...]:
        return tuple((a + b) / 2 for a, b in zip(self.lower, self.upper))

    def contains_box(self, other: "Box") -> bool:
        return all(
            a <= c and e <= b
            for a, b, c, e in zip(self.lower, self.upper, other.lower, other.upper)
        )

    def contains_point(self, x: Sequence[Fraction]) -> bool:
        return all(a <= t < b for a, b, t in zip(self.lower, self.upper, x))

    def intersects(self, other: "Box") -> bool:
        return all(
            max(a, c) < min(b, e)
            for a, b, c, e in zip(self.lower, self.upper, other.lower, other.upper)
        )

    def intersection(self, other: "Box") -> "Box | None":
        if not self.intersects(other):
            return None
        return Box(
            tuple(max(a, c) for a, c in zip(self.lower, other.lower)),
            tuple(min(b, e) for b, e in zip(self.upper, other.upper)),
        )

    def to_json(self) -> dict:
        return {
            "lower": [format_rational(x) for x in self.lower],
            "upper": [format_rational(x) for x in self.upper],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Box":
        return cls(
            tuple(parse_rational(x) for x in obj["lower"]),
            tuple(parse_rational(x) for x in obj["upper"]),
        )


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Cube ``2^{-j}([0,1)^d + m + (-1)^j u)`` of the translated system ``D^u``."""

    u: tuple[Fraction, ...]
    j: int
    m: tuple[int, ...]

    def __post_init__(self) -> None:
        u = tuple(Fraction(x) for x in self.u)
        if any(x not in THIRDS for x in u):
            raise ValueError(f"translation must lie in {{0,1/3,2/3}}^d, got {u}")
        m = tuple(int(x) for x in self.m)
        if len(u) != len(m):
            raise ValueError("u and m dimensions differ")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "j", int(self.j))

    @classmethod
    def standard(cls, j: int, m: Sequence[int]) -> "DyadicCube":
        return cls((Fraction(0),) * len(m), j, tuple(m))

    @property
    def d(self) -> int:
        return len(self.m)

    @property
    def is_standard(self) -> bool:
        return all(x == 0 for x in self.u)

    @property
    def side(self) -> Fraction:
        return _pow2(-self.j)

    @property
    def measure(self) -> Fraction:
        return self.side**self.d

    @property
    def lower(self) -> tuple[Fraction, ...]:
        sign = 1 if self.j % 2 == 0 else -1
        h = self.side
        return tuple(h * (mi + sign * ui) for mi, ui in zip(self.m, self.u))

    @property
    def box(self) -> Box:
        lo = self.lower
        h = self.side
        return Box(lo, tuple(a + h for a in lo))

    @property
    def center(self) -> tuple[Fraction, ...]:
        return self.box.center

    def children(self) -> list["DyadicCube"]:
        return children(self)

    def parent(self) -> "DyadicCube":
        return ancestor(self, 1)

    def ancestor(self, k: int) -> "DyadicCube":
        return ancestor(self, k)

    def contains(self, other: "DyadicCube | Box") -> bool:
        b = other.box if isinstance(other, DyadicCube) else other
        return self.box.contains_box(b)

    def to_json(self) -> dict:
        return {"u": [format_rational(x) for x in self.u], "j": self.j, "m": list(self.m)}

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicCube":
        return cls(tuple(parse_rational(x) for x in obj["u"]), int(obj["j"]), tuple(obj["m"]))

    def __str__(self) -> str:
        lo, hi = self.box.lower, self.box.upper
        spans = " x ".join(f"[{a},{b})" for a, b in zip(lo, hi))
        return spans if self.is_standard else f"{spans} (u={','.join(map(str, self.u))})"


def _position_at(lower: Sequence[Fraction], u: Sequence[Fraction], j: int) -> tuple[int, ...]:
    """Integer position of the level-``j`` cube of ``D^u`` containing the point ``lower``."""
    sign = 1 if j % 2 == 0 else -1
    scale = _pow2(j)
    return tuple(math.floor(x * scale - sign * ui) for x, ui in zip(lower, u))


def children(Q: DyadicCube) -> list[DyadicCube]:
    """The ``2^d`` cubes of level ``j+1`` partitioning ``Q``, row-major order."""
    lo = Q.lower
    half = Q.side / 2
    sign = 1 if (Q.j + 1) % 2 == 0 else -1
    scale = _pow2(Q.j + 1)
    out = []
    for offs in itertools.product((0, 1), repeat=Q.d):
        corner = [a + o * half for a, o in zip(lo, offs)]
        m = []
        for x, ui in zip(corner, Q.u):
            pos = x * scale - sign * ui
            assert pos.denominator == 1, "translated systems must nest"
            m.append(int(pos))
        out.append(DyadicCube(Q.u, Q.j + 1, tuple(m)))
    return out


def ancestor(Q: DyadicCube, k: int) -> DyadicCube:
    """The unique cube of ``D^u`` at level ``j - k`` containing ``Q``."""
    if k < 0:
        raise ValueError("ancestor order must be nonnegative")
    if k == 0:
        return Q
    jj = Q.j - k
    return DyadicCube(Q.u, jj, _position_at(Q.lower, Q.u, jj))


def dilate(Q: DyadicCube | Box, k: int) -> Box:
    """Concentric box with side lengths multiplied by ``2^k``."""
    if k < 0:
        raise ValueError("dilation exponent must be nonnegative")
    b = Q.box if isinstance(Q, DyadicCube) else Q
    f = Fraction(2) ** k
    c = b.center
    half = tuple(s * f / 2 for s in b.sides)
    return Box(tuple(ci - hi for ci, hi in zip(c, half)), tuple(ci + hi for ci, hi in zip(c, half)))


class NoCoverError(RuntimeError):
    """No translated cube satisfies the shifted-cover conditions."""


def _axis_covers(a: Fraction, h: Fraction, j: int, k: int) -> Iterator[tuple[Fraction, int]]:
    """Valid (u_i, m_i) for one axis of ``shifted_cover``, in (u, m) order.

    The interval is ``[a, a + h)`` of a standard level-``j`` cube. The cover
    sits at level ``j - 2`` (side ``4h``) and its ``k``-th ancestor must hold
    the concentric interval of length ``2^k h``.
    """
    jr = j - 2
    side_r = 4 * h
    sign = 1 if jr % 2 == 0 else -1
    scale = _pow2(jr)
    c = a + h / 2
    dil_lo = c - h * Fraction(2) ** k / 2
    dil_hi = c + h * Fraction(2) ** k / 2
    for u in THIRDS:
        # lower corner of R is side_r * (m + sign*u); need lower <= a and lower + side_r >= a + h
        m_lo = math.ceil((a + h - side_r) * scale - sign * u)
        m_hi = math.floor(a * scale - sign * u)
        for m in range(m_lo, m_hi + 1):
            R = DyadicCube((u,), jr, (m,))
            if not R.box.contains_box(Box((a,), (a + h,))):
                continue
            P = ancestor(R, k).box
            if P.lower[0] <= dil_lo and dil_hi <= P.upper[0]:
                yield u, m


def shifted_cover(Q: DyadicCube, k: int) -> tuple[DyadicCube, tuple[Fraction, ...]]:
    """Translated cube ``R`` with ``Q ⊂ R``, ``2^k Q ⊂ R^{(k)}`` and side ``4 * side(Q)``.

    Cubes are products of intervals and ``D^u`` is a product of one-dimensional
    systems, so the search over ``u`` in ``{0,1/3,2/3}^d`` factorizes by axis;
    taking the first valid ``u_i`` and then the first valid ``m_i`` on each axis
    gives the lexicographically smallest ``(u, m)``.
    """
    if not Q.is_standard:
        raise ValueError("shifted_cover expects a standard dyadic cube")
    if k < 0:
        raise ValueError("k must be nonnegative")
    us, ms = [], []
    for a in Q.lower:
        options = list(_axis_covers(a, Q.side, Q.j, k))
        if not options:
            raise NoCoverError(f"no translated cover for {Q} at k={k}")
        u0 = options[0][0]
        us.append(u0)
        ms.append(min(m for u, m in options if u == u0))
    R = DyadicCube(tuple(us), Q.j - 2, tuple(ms))
    return R, R.u


def cubes_at_level(root: DyadicCube, level: int) -> list[DyadicCube]:
    """Same-system descendants of ``root`` at an absolute level, row-major."""
    depth = level - root.j
    if depth < 0:
        raise ValueError("level above root")
    if not root.is_standard:
        out = [root]
        for _ in range(depth):
            out = [c for q in out for c in children(q)]
        return out
    n = 2**depth
    base = tuple(mi * n for mi in root.m)
    return [
        DyadicCube(root.u, level, tuple(b + i for b, i in zip(base, idx)))
        for idx in itertools.product(range(n), repeat=root.d)
    ]
