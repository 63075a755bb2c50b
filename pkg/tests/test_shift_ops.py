from fractions import Fraction as F

import numpy as np
import pytest

import oracles
from sparse_dyadic.dyadic_grid import THIRDS, DyadicCube, ancestor
from sparse_dyadic.sampled_field import GridSpec, SampledFunction
from sparse_dyadic.shift_ops import (
    GeneralShiftSpec,
    ShiftSpec,
    ShiftTerm,
    adjoint_pairing_check,
    apply_A,
    apply_general,
    as_general,
    overlap_count,
)

G = GridSpec.unit(1, 4)


def std(j, m):
    return DyadicCube.standard(j, (m,))


def random_spec(rng, grid, k=None, shifted=True):
    u = tuple(rng.choice(THIRDS) for _ in range(grid.d)) if shifted else (F(0),) * grid.d
    lvl = grid.root.j + int(rng.integers(0, grid.J + 1))
    cubes = set()
    for _ in range(int(rng.integers(1, 6))):
        m = tuple(int(x) for x in rng.integers(-1, 2 ** (lvl - grid.root.j) + 1, grid.d))
        cubes.add(DyadicCube(u, lvl, m))
    return ShiftSpec(tuple(sorted(cubes)), int(rng.integers(0, 4)) if k is None else k)


def test_apply_A_examples():
    one = SampledFunction(G, np.ones(G.ncell))
    out = apply_A(ShiftSpec((std(0, 0),), 0), one).scalar
    assert np.array_equal(out, np.ones(G.ncell))
    g = SampledFunction(G, (G.centers[:, 0] >= 0.5).astype(float))
    out = apply_A(ShiftSpec((std(1, 0),), 1), g).scalar
    assert np.allclose(out[:8], 0.5) and np.all(out[8:] == 0)
    assert not apply_A(ShiftSpec((), 2), g).scalar.any()


def test_shift_spec_validation():
    with pytest.raises(ValueError):
        ShiftSpec((std(0, 0), DyadicCube((F(1, 3),), 0, (0,))), 0)
    with pytest.raises(ValueError):
        ShiftSpec((std(0, 0),), -1)
    with pytest.raises(ValueError):
        GeneralShiftSpec((ShiftTerm(std(0, 0), std(1, 0), std(0, 0), 1.5),), 1, 0)
    with pytest.raises(ValueError):
        GeneralShiftSpec((ShiftTerm(std(0, 0), std(2, 0), std(0, 0), 1.0),), 1, 0)
    with pytest.raises(ValueError):
        apply_A(ShiftSpec((), 0), SampledFunction(G, -np.ones(G.ncell)))
    spec = ShiftSpec((DyadicCube((F(2, 3),), 3, (1,)),), 2)
    assert ShiftSpec.from_json(spec.to_json()) == spec


def test_apply_A_matches_oracle(rng):
    for _ in range(20):
        spec = random_spec(rng, G)
        v = rng.random(G.ncell)
        g = SampledFunction(G, v)
        expected = np.zeros(G.ncell)
        for Q in spec.cubes:
            P = ancestor(Q, spec.k)
            avg = oracles.box_average(v, G, P.lower, P.box.upper)
            for i in oracles.cells_with_center_in(G, Q.lower, Q.box.upper):
                expected[i] += avg
        assert np.allclose(apply_A(spec, g).scalar, expected, atol=1e-12)


def test_general_encoding_reproduces_A(rng):
    for _ in range(20):
        spec = random_spec(rng, GridSpec.unit(2, 3))
        g = SampledFunction(GridSpec.unit(2, 3), rng.random(64))
        gen = as_general(spec)
        assert gen.m == spec.k and gen.n == 0 and gen.complexity == max(1, spec.k)
        assert np.allclose(apply_general(gen, g).scalar, apply_A(spec, g).scalar, atol=1e-12)


def test_general_zero_and_linearity(rng):
    g = SampledFunction(G, rng.random(G.ncell))
    t1 = ShiftTerm(std(0, 0), std(1, 0), std(2, 3), 0.7)
    t2 = ShiftTerm(std(0, 0), std(1, 1), std(2, 0), 0.4)
    assert not apply_general(GeneralShiftSpec((ShiftTerm(std(0, 0), std(1, 0), std(2, 1), 0.0),), 1, 2), g).scalar.any()
    both = apply_general(GeneralShiftSpec((t1, t2), 1, 2), g).scalar
    one = apply_general(GeneralShiftSpec((t1,), 1, 2), g).scalar
    two = apply_general(GeneralShiftSpec((t2,), 1, 2), g).scalar
    assert np.allclose(both, one + two)


def test_adjoint_pairing(rng):
    g = SampledFunction(G, rng.random(G.ncell))
    h = SampledFunction(G, rng.random(G.ncell))
    for _ in range(10):
        spec = random_spec(rng, G, k=0, shifted=False)
        spec = ShiftSpec(tuple(Q for Q in spec.cubes if G.contains_cube(Q)), 0)
        a, b = adjoint_pairing_check(spec, g, h)
        assert a == pytest.approx(b, abs=1e-9)
    a, b = adjoint_pairing_check(ShiftSpec((std(1, 1),), 0), g, g)
    assert a == b
    assert adjoint_pairing_check(ShiftSpec((), 0), g, h) == (0.0, 0.0)
    with pytest.raises(ValueError):
        adjoint_pairing_check(ShiftSpec((std(1, 0),), 1), g, h)


def test_monotone(rng):
    for _ in range(20):
        spec = random_spec(rng, G)
        lo = rng.random(G.ncell)
        hi = lo + rng.random(G.ncell)
        a = apply_A(spec, SampledFunction(G, lo)).scalar
        b = apply_A(spec, SampledFunction(G, hi)).scalar
        assert np.all(a <= b + 1e-12)


def test_overlap_count():
    cubes = [std(0, 0), std(1, 0), std(2, 1)]
    count = overlap_count(G, cubes)
    assert count[0] == 2 and count[5] == 3 and count[15] == 1
