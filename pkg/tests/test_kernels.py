"""The numba and numpy twins of every hot kernel agree with each other and with brute force."""

import numpy as np
import pytest

import oracles
from sparse_dyadic import _accel, kernels
from sparse_dyadic.sampled_field import GridSpec

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@pytest.mark.parametrize("q", [1.0, 2.0, 3.0, np.inf])
def test_kth_distances(rng, q):
    pts = rng.normal(size=(40, 3))
    ctr = rng.normal(size=(7, 3))
    for k in (1, 13, 40):
        a = kernels.kth_distances_np(pts, ctr, q, k)
        b = kernels.kth_distances_nb(pts, ctr, q, k)
        brute = [np.sort([oracles.lq(p - c, q) for p in pts])[k - 1] for c in ctr]
        assert np.allclose(a, brute) and np.allclose(b, brute)


@pytest.mark.parametrize("d, J", [(1, 5), (2, 3)])
def test_convolve(rng, d, J):
    g = GridSpec.unit(d, J)
    table = rng.normal(size=(2 * g.n_axis - 1) ** d)
    f = rng.normal(size=(g.ncell, 2))
    a = kernels.convolve_np(table, g.multi_index, g.n_axis, f)
    b = kernels.convolve_nb(table, g.multi_index, g.n_axis, f)
    brute = np.zeros_like(f)
    width = 2 * g.n_axis - 1
    for c in range(g.ncell):
        for cp in range(g.ncell):
            off = g.multi_index[c] - g.multi_index[cp] + g.n_axis - 1
            brute[c] += table[np.ravel_multi_index(tuple(off), (width,) * d)] * f[cp]
    assert np.allclose(a, brute) and np.allclose(b, brute)


def test_interval_sweeps(rng):
    w = np.exp(rng.normal(size=12))
    s = w ** -1.0
    for p in (1.5, 2.0, 3.0):
        ref = oracles.interval_ap(list(w), list(w ** (-1 / (p - 1))), p)
        assert kernels.interval_ap_np(w, w ** (-1 / (p - 1)), p)[0] == pytest.approx(ref)
        assert kernels.interval_ap_nb(w, w ** (-1 / (p - 1)), p)[0] == pytest.approx(ref)
    assert np.allclose(kernels.interval_maximal_np(w), oracles.interval_maximal(list(w)))
    assert np.allclose(kernels.interval_maximal_nb(w), oracles.interval_maximal(list(w)))
    ref = oracles.interval_ainf(list(w))
    assert kernels.interval_ainf_np(w)[0] == pytest.approx(ref)
    assert kernels.interval_ainf_nb(w)[0] == pytest.approx(ref)
    assert kernels.interval_ap_np(w, s, 2.0)[1:] == kernels.interval_ap_nb(w, s, 2.0)[1:]


def test_backend_flag(monkeypatch):
    assert _accel.backend() in ("numba", "numpy")
    monkeypatch.setenv("SPARSE_DYADIC_NUMBA", "0")
    assert not _accel._env_flag()
    monkeypatch.setenv("SPARSE_DYADIC_THREADS", "1")
    _accel.set_threads()


def test_dispatch_follows_flag(rng, monkeypatch):
    w = np.exp(rng.normal(size=10))
    monkeypatch.setattr(_accel, "USE_NUMBA", False)
    a = kernels.interval_ainf(w)
    monkeypatch.setattr(_accel, "USE_NUMBA", True)
    b = kernels.interval_ainf(w)
    assert a[0] == pytest.approx(b[0]) and a[1:] == b[1:]
