import dataclasses
from fractions import Fraction as F

import numpy as np
import pytest

from sparse_dyadic.dyadic_grid import DyadicCube, children
from sparse_dyadic.kernels import lq_norm
from sparse_dyadic.lerner import (
    KAPPA,
    MismatchedCollectionError,
    ResolutionError,
    SparseCollection,
    check_sparse,
    decompose,
    default_lambda,
    stopping_children,
    verify_decomposition,
)
from sparse_dyadic.oscillation import least_bound, pseudomedian
from sparse_dyadic.sampled_field import CellSet, GridSpec, SampledFunction, cells_in_box


def multiscale(rng, d, J, n, q):
    g = GridSpec.unit(d, J)
    v = 0.05 * rng.normal(size=(g.ncell, n))
    shape = g.shape
    for _ in range(10):
        depth = int(rng.integers(1, J + 1))
        cells = 2 ** (J - depth)
        pos = rng.integers(0, 2**depth, d)
        block = np.zeros(shape + (n,))
        block[tuple(slice(int(p) * cells, (int(p) + 1) * cells) for p in pos)] = rng.normal(size=n) * 3
        v += block.reshape(g.ncell, n)
    return SampledFunction(g, v, q)


def reference_stopping(f, Q, kappa, c, rho):
    """Recursive top-down selection straight from the definition."""
    grid = f.grid

    def exceed(C):
        idx = cells_in_box(grid, C.box)
        return np.count_nonzero(lq_norm(f.values[idx] - c, f.q) > rho) * kappa.denominator > kappa.numerator * len(idx)

    out = []

    def walk(P):
        if P.j >= grid.cell_level:
            return
        if any(exceed(C) for C in children(P)):
            out.append(P)
            return
        for C in children(P):
            walk(C)

    walk(Q)
    return out


def test_default_parameters():
    assert default_lambda(1, F(1, 2)) == F(1, 16)
    assert default_lambda(2, F(1, 2)) == F(1, 32)
    assert KAPPA == F(1, 4)


def test_stopping_children_constant_field():
    g = GridSpec.unit(1, 4)
    f = SampledFunction(g, np.full(g.ncell, 3.0))
    assert stopping_children(f, g.root, F(1, 16), F(1, 4), np.array([3.0]), 0.0) == []


def test_stopping_children_half_indicator():
    g = GridSpec.unit(1, 4)
    f = SampledFunction(g, (g.centers[:, 0] < 0.5).astype(float))
    picked = stopping_children(f, g.root, F(1, 16), F(1, 4), np.array([1.0]), 0.0)
    assert picked == reference_stopping(f, g.root, F(1, 4), np.array([1.0]), 0.0)
    total = sum(P.measure for P in picked)
    assert total <= g.root.measure


def test_stopping_children_matches_reference(rng):
    for _ in range(30):
        d = int(rng.integers(1, 3))
        f = multiscale(rng, d, 4 if d == 1 else 3, int(rng.integers(1, 3)), 2.0)
        Q = f.grid.root
        lam = default_lambda(d, F(1, 2))
        c = pseudomedian(f, Q, KAPPA).center
        rho = least_bound(f, Q, lam, c)
        picked = stopping_children(f, Q, lam, KAPPA, c, rho)
        assert sorted(picked) == sorted(reference_stopping(f, Q, KAPPA, c, rho))
        assert sum((P.measure for P in picked), F(0)) <= 2**d * (lam / KAPPA) * Q.measure
        for a in picked:
            for b in picked:
                assert a == b or not a.box.intersects(b.box)


def test_stopping_children_rejects_bad_parameters():
    g = GridSpec.unit(1, 3)
    f = SampledFunction(g, np.zeros(g.ncell))
    with pytest.raises(ValueError):
        stopping_children(f, g.root, F(1, 2), F(1, 4), np.zeros(1), 0.0)
    with pytest.raises(ResolutionError):
        stopping_children(f, DyadicCube.standard(5, (0,)), F(1, 16), F(1, 4), np.zeros(1), 0.0)


def test_decompose_constant_is_single_entry():
    g = GridSpec.unit(2, 3)
    f = SampledFunction(g, np.tile([1.0, -2.0], (g.ncell, 1)))
    S = decompose(f, g.root)
    assert len(S) == 1 and S.entries[0].rho == 0.0
    rep = verify_decomposition(f, S)
    assert rep.holds and rep.max_violation == 0.0 and rep.ok


@pytest.mark.parametrize("d, J, n, q", [(1, 4, 1, 2.0), (1, 6, 2, 1.0), (2, 3, 4, np.inf), (2, 4, 1, 2.0)])
def test_decompose_invariants(rng, d, J, n, q):
    for _ in range(5):
        f = multiscale(rng, d, J, n, q)
        S = decompose(f, f.grid.root)
        assert check_sparse(S) == []
        assert S.depth <= J + 1
        rep = verify_decomposition(f, S)
        assert rep.holds, rep
        pc, unc = rep.lemma_parent_child, rep.lemma_uncovered
        assert pc <= 1e-9 and unc <= 1e-9
        # witness is Q minus the strictly smaller entries
        for e in S.entries:
            inside = set(cells_in_box(f.grid, e.cube.box).tolist())
            for o in S.entries:
                if o.cube != e.cube and e.cube.contains(o.cube):
                    inside -= set(cells_in_box(f.grid, o.cube.box).tolist())
            assert set(e.witness.members.tolist()) == inside
        for k in range(S.depth):
            assert sum((e.cube.measure for e in S.generation(k)), F(0)) <= (1 - S.nu) ** k * f.grid.root.measure


def test_decompose_on_subcube_and_other_nu(rng):
    f = multiscale(rng, 1, 6, 1, 2.0)
    Q0 = DyadicCube.standard(2, (1,))
    S = decompose(f, Q0, F(1, 3))
    assert S.lam == F(2, 3) / 8
    assert check_sparse(S) == []
    assert verify_decomposition(f, S).holds
    with pytest.raises(ValueError):
        decompose(f, Q0, F(1))


def test_omega_form_small_scalar(rng):
    for _ in range(5):
        f = multiscale(rng, 1, 4, 1, 2.0)
        rep = verify_decomposition(f, decompose(f, f.grid.root), oracle=True)
        assert rep.omega_holds


def test_negative_controls(rng):
    f = multiscale(rng, 1, 5, 1, 2.0)
    S = decompose(f, f.grid.root)
    assert len(S) > 1
    # inject a witness overlap
    e1 = S.entries[1]
    stolen = CellSet(f.grid, np.concatenate([e1.witness.members, S.entries[0].witness.members[:1]]))
    bad = dataclasses.replace(S, entries=(S.entries[0], dataclasses.replace(e1, witness=stolen)) + S.entries[2:])
    assert check_sparse(bad)
    assert not verify_decomposition(f, bad).ok
    # shrink every radius: the certificate must break
    shrunk = dataclasses.replace(S, entries=tuple(dataclasses.replace(e, rho=0.0) for e in S.entries))
    assert not verify_decomposition(f, shrunk).holds
    other = SampledFunction(GridSpec.unit(1, 4), np.zeros(16))
    with pytest.raises(MismatchedCollectionError):
        verify_decomposition(other, S)


def test_json_roundtrip(rng):
    f = multiscale(rng, 2, 3, 2, 1.0)
    S = decompose(f, f.grid.root)
    back = SparseCollection.from_json(S.to_json())
    assert back.to_json() == S.to_json()
    assert verify_decomposition(f, back).holds
    rows = S.csv_rows()
    assert len(rows) == len(S) and all(r["witness_fraction"] >= 0.5 for r in rows)
