import math

import numpy as np
import pytest

import oracles
from sparse_dyadic import _accel
from sparse_dyadic.cz_operator import (
    KernelSpec,
    apply_T,
    hilbert_indicator_oracle,
    kernel_bounds_check,
    kernel_eval,
    matrix_norm,
    random_samples,
)
from sparse_dyadic.sampled_field import GridSpec, SampledFunction

ROT = np.array([[0.0, -1.0], [1.0, 0.0]]) * 0.8


def test_kernel_eval_examples():
    H = KernelSpec.hilbert()
    assert kernel_eval(H, [1.0], [0.0], eps=0.1)[0, 0] == pytest.approx(1 / math.pi)
    assert kernel_eval(H, [0.0], [1.0], eps=0.1)[0, 0] == pytest.approx(-1 / math.pi)
    assert not kernel_eval(H, [0.0], [0.05], eps=0.1).any()
    M = KernelSpec("matrix_composed", n=3, G=np.eye(3))
    assert np.allclose(kernel_eval(M, [2.0], [0.5], eps=0.1), np.eye(3) / (1.5 * math.pi))
    P = KernelSpec("power_truncated", d=2, axis=1, eps_trunc=0.01)
    assert kernel_eval(P, [0.0, 2.0], [0.0, 0.0])[0, 0] == pytest.approx(2 / 8)


def test_spec_validation_and_json():
    with pytest.raises(ValueError):
        KernelSpec("hilbert_truncated", d=2)
    with pytest.raises(ValueError):
        KernelSpec("matrix_composed", n=2, G=np.eye(2) * 1.5)
    with pytest.raises(ValueError):
        KernelSpec("bogus")
    with pytest.raises(ValueError):
        KernelSpec("diagonal_family", n=2, scales=(1.0, 2.0))
    with pytest.raises(ValueError):
        KernelSpec.hilbert(alpha=0.0)
    for spec in (KernelSpec.hilbert(), KernelSpec("matrix_composed", n=2, G=ROT, eps_trunc=0.5), KernelSpec("diagonal_family", d=2, n=3, scales=(1, -0.5, 0.25))):
        back = KernelSpec.from_json(spec.to_json())
        assert back.to_json() == spec.to_json()


@pytest.mark.parametrize("q", [1.0, 2.0, np.inf, 3.0])
def test_matrix_norm(q):
    M = np.array([[1.0, -2.0], [0.5, 0.25]])
    x = np.random.default_rng(0).normal(size=(2000, 2))
    ratios = [oracles.lq(M @ v, q) / oracles.lq(v, q) for v in x]
    assert max(ratios) <= matrix_norm(M, q) + 1e-12
    if q in (1.0, 2.0, np.inf):
        assert max(ratios) >= matrix_norm(M, q) * 0.95


def test_hilbert_kernel_constants(rng):
    H = KernelSpec.hilbert()
    b = kernel_bounds_check(H, random_samples(H, 3000, rng), eps=1e-9)
    assert b.decay_const <= 1 / math.pi + 1e-12
    assert b.decay_const == pytest.approx(1 / math.pi)
    assert b.holder_const <= 2 / math.pi + 1e-12
    assert b.holder_samples > 0


def test_zero_and_power_kernel_constants(rng):
    Z = KernelSpec("zero", d=2)
    b = kernel_bounds_check(Z, random_samples(Z, 200, rng), eps=1e-9)
    assert (b.decay_const, b.holder_const) == (0.0, 0.0)
    P = KernelSpec("diagonal_family", d=2, n=2, scales=(1.0, 0.5))
    b = kernel_bounds_check(P, random_samples(P, 2000, rng), q=np.inf, eps=1e-9)
    assert b.decay_const <= 1 + 1e-12 and math.isfinite(b.holder_const)


@pytest.mark.parametrize(
    "spec, d, n",
    [
        (KernelSpec.hilbert(), 1, 1),
        (KernelSpec("matrix_composed", n=2, G=ROT), 1, 2),
        (KernelSpec("power_truncated", d=2), 2, 1),
        (KernelSpec("diagonal_family", d=2, n=2, scales=(1.0, -0.5)), 2, 2),
    ],
)
@pytest.mark.parametrize("use_numba", [False, True])
def test_apply_T_matches_double_loop(rng, monkeypatch, spec, d, n, use_numba):
    if use_numba and not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_accel, "USE_NUMBA", use_numba)
    g = GridSpec.unit(d, 4 if d == 1 else 2, j=-1)
    f = SampledFunction(g, rng.normal(size=(g.ncell, n)))
    eps = float(g.cell_side)
    expected = oracles.quadrature(lambda x, y: kernel_eval(spec, x, y, eps=eps), g, f.values)
    assert np.allclose(apply_T(spec, f).values, expected, atol=1e-12)


def test_hilbert_of_indicator_matches_closed_form():
    g = GridSpec.unit(1, 10, j=-2)  # [0, 4); the unit interval is [1, 2)
    x = g.centers[:, 0]
    Tf = apply_T(KernelSpec.hilbert(), SampledFunction(g, ((x >= 1) & (x < 2)).astype(float))).scalar
    exact = hilbert_indicator_oracle(x, 1.0, 2.0)
    far = np.minimum(np.abs(x - 1), np.abs(x - 2)) >= 0.1
    assert np.max(np.abs(Tf[far] - exact[far]) / np.abs(exact[far])) <= 0.05


def test_antisymmetry_and_linearity(rng):
    g = GridSpec.unit(1, 7, j=-1)  # [0, 2), reflect about 1
    half = rng.normal(size=g.ncell // 2)
    odd = np.concatenate([-half[::-1], half])
    Tf = apply_T(KernelSpec.hilbert(), SampledFunction(g, odd)).scalar
    assert np.allclose(Tf, Tf[::-1], atol=1e-12)  # odd kernel, odd f: Tf is even
    even = np.concatenate([half[::-1], half])
    Te = apply_T(KernelSpec.hilbert(), SampledFunction(g, even)).scalar
    assert np.allclose(Te, -Te[::-1], atol=1e-12)
    a, b = rng.normal(size=g.ncell), rng.normal(size=g.ncell)
    H = KernelSpec.hilbert()
    lhs = apply_T(H, SampledFunction(g, 2 * a - b)).scalar
    rhs = 2 * apply_T(H, SampledFunction(g, a)).scalar - apply_T(H, SampledFunction(g, b)).scalar
    assert np.allclose(lhs, rhs, atol=1e-12)
    assert not apply_T(H, SampledFunction(g, np.zeros(g.ncell))).values.any()


def test_matrix_kernel_commutes(rng):
    g = GridSpec.unit(1, 6)
    f = rng.normal(size=(g.ncell, 2))
    T_G = apply_T(KernelSpec("matrix_composed", n=2, G=ROT), SampledFunction(g, f)).values
    T_s = np.stack([apply_T(KernelSpec.hilbert(), SampledFunction(g, f[:, i])).scalar for i in range(2)], axis=1)
    assert np.allclose(T_G, T_s @ ROT.T, atol=1e-13)


def test_dimension_mismatch():
    g = GridSpec.unit(1, 3)
    with pytest.raises(ValueError):
        apply_T(KernelSpec.hilbert(n=2), SampledFunction(g, np.zeros(8)))
    with pytest.raises(ValueError):
        apply_T(KernelSpec("power_truncated", d=2), SampledFunction(g, np.zeros(8)))
