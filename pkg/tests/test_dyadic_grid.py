from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import shifted_cover_exhaustive
from sparse_dyadic.dyadic_grid import (
    THIRDS,
    Box,
    DyadicCube,
    ancestor,
    children,
    dilate,
    format_rational,
    parse_rational,
    shifted_cover,
)


def std(j, *m):
    return DyadicCube.standard(j, m)


def test_children_halve_unit_interval():
    kids = children(std(0, 0))
    assert [k.box for k in kids] == [Box((F(0),), (F(1, 2),)), Box((F(1, 2),), (F(1),))]


def test_children_of_unit_square_are_quadrants():
    kids = children(std(0, 0, 0))
    assert len(kids) == 4
    assert {k.lower for k in kids} == {(F(0), F(0)), (F(0), F(1, 2)), (F(1, 2), F(0)), (F(1, 2), F(1, 2))}
    assert all(k.measure == F(1, 4) for k in kids)


def test_children_of_translated_cube():
    Q = DyadicCube((F(1, 3),), 0, (0,))
    assert Q.box == Box((F(1, 3),), (F(4, 3),))
    assert [k.box for k in children(Q)] == [Box((F(1, 3),), (F(5, 6),)), Box((F(5, 6),), (F(4, 3),))]


@pytest.mark.parametrize(
    "cube, k, expected",
    [(std(0, 0), 0, std(0, 0)), (std(0, 0), 1, std(-1, 0)), (std(1, 1), 2, std(-1, 0))],
)
def test_ancestor_examples(cube, k, expected):
    assert ancestor(cube, k) == expected


def test_dilate_examples():
    assert dilate(std(0, 0), 1) == Box((F(-1, 2),), (F(3, 2),))
    assert dilate(std(0, 0), 0) == Box((F(0),), (F(1),))
    # [2,4) has center 3; side 8 gives [-1, 7)
    assert dilate(std(-1, 1), 2) == Box((F(-1),), (F(7),))


def test_shifted_cover_examples():
    R, u = shifted_cover(std(0, 0), 0)
    assert R.box == Box((F(0),), (F(4),)) and u == (F(0),)
    R, _ = shifted_cover(std(0, 0), 3)
    assert dilate(std(0, 0), 3) == Box((F(-7, 2),), (F(9, 2),))
    assert ancestor(R, 3).side == 32
    assert ancestor(R, 3).box.contains_box(dilate(std(0, 0), 3))


cubes_1d = st.builds(lambda j, m: std(j, m), st.integers(-3, 6), st.integers(-40, 40))
cubes_2d = st.builds(lambda j, a, b: std(j, a, b), st.integers(-3, 6), st.integers(-40, 40), st.integers(-40, 40))
translated = st.builds(
    lambda u, j, m: DyadicCube((u,), j, (m,)), st.sampled_from(THIRDS), st.integers(-4, 6), st.integers(-30, 30)
)


@settings(max_examples=200, deadline=None)
@given(st.one_of(cubes_1d, cubes_2d), st.integers(0, 6))
def test_shifted_cover_postconditions(Q, k):
    R, u = shifted_cover(Q, k)
    assert R.u == u
    assert R.side == 4 * Q.side
    assert R.contains(Q)
    assert ancestor(R, k).box.contains_box(dilate(Q, k))


@settings(max_examples=60, deadline=None)
@given(st.one_of(cubes_1d, cubes_2d), st.integers(0, 5))
def test_shifted_cover_is_lexicographic_minimum_of_exhaustive_search(Q, k):
    hits = shifted_cover_exhaustive(Q, k)
    assert hits, "the one-third trick guarantees a cover"
    u, m, _ = min(hits, key=lambda t: (t[0], t[1]))
    R, _ = shifted_cover(Q, k)
    assert (R.u, R.m) == (u, m)


@settings(max_examples=200, deadline=None)
@given(translated)
def test_children_partition_parent(Q):
    kids = children(Q)
    assert sum(c.measure for c in kids) == Q.measure
    assert all(c.u == Q.u and c.j == Q.j + 1 and Q.contains(c) for c in kids)
    assert all(c.parent() == Q for c in kids)
    assert not kids[0].box.intersects(kids[1].box)


@settings(max_examples=300, deadline=None)
@given(translated, st.integers(-4, 6), st.integers(-30, 30))
def test_same_system_cubes_nest_or_are_disjoint(Q, j, m):
    P = DyadicCube(Q.u, j, (m,))
    assert P.contains(Q) or Q.contains(P) or not P.box.intersects(Q.box)


@settings(max_examples=200, deadline=None)
@given(translated, st.integers(0, 5))
def test_ancestor_contains_and_is_unique(Q, k):
    A = ancestor(Q, k)
    assert A.j == Q.j - k and A.u == Q.u and A.contains(Q)
    for dm in (-1, 1):
        assert not DyadicCube(A.u, A.j, (A.m[0] + dm,)).contains(Q)


def test_corners_have_denominator_three_times_power_of_two():
    Q = DyadicCube((F(2, 3), F(1, 3)), 3, (5, -2))
    for x in Q.lower:
        assert (3 * 2**Q.j) % x.denominator == 0


def test_json_roundtrip_and_rationals():
    Q = DyadicCube((F(1, 3), F(0)), -2, (4, -1))
    obj = Q.to_json()
    assert obj["u"] == ["1/3", "0/1"]
    assert DyadicCube.from_json(obj) == Q
    assert parse_rational("2/6") == F(1, 3) and format_rational(F(-3, 4)) == "-3/4"
    b = Q.box
    assert Box.from_json(b.to_json()) == b


def test_invalid_translation_rejected():
    with pytest.raises(ValueError):
        DyadicCube((F(1, 2),), 0, (0,))
    with pytest.raises(ValueError):
        shifted_cover(DyadicCube((F(1, 3),), 0, (0,)), 0)
    with pytest.raises(ValueError):
        dilate(std(0, 0), -1)
