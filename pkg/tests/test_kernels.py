"""Backend equality and hand oracles for the low-level kernels."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import pitik._kernels as K
from pitik._kernels import _ref


pytestmark = pytest.mark.skipif(False, reason="")

HAVE_CYTHON = "cython" in K.available_backends()


def _rand_case(seed, m=64):
    rng = np.random.default_rng(seed)
    g = rng.uniform(0.0, 3.0, m)
    counts = rng.poisson(2.0, m).astype(np.int64)
    dens = rng.uniform(0.0, 4.0, m)
    return g, counts, dens


def test_poisson_value_oracle():
    # frozen hand value: single cell, g=1, 2 counts, t=2, h=1, sigma=1:
    # 1 - (2/2)ln 2 - 1*ln 2 = 1 - 2 ln 2
    g = np.array([1.0])
    counts = np.array([2], dtype=np.int64)
    v = _ref.poisson_value(g, counts, 2.0, 1.0, 1.0)
    assert v == pytest.approx(1 - 2 * np.log(2), abs=1e-14)


def test_poisson_value_zero_shift_infinite():
    g = np.array([0.0, 1.0])
    counts = np.array([1, 0], dtype=np.int64)
    assert _ref.poisson_value(g, counts, 1.0, 0.5, 0.0) == np.inf
    # uncounted zero cell is fine when sigma = 0
    counts = np.array([0, 2], dtype=np.int64)
    assert np.isfinite(_ref.poisson_value(g, counts, 1.0, 0.5, 0.0))


def test_poisson_grad_oracle():
    g = np.array([1.0, 3.0])
    dens = np.array([2.0, 0.0])
    out = np.empty(2)
    _ref.poisson_grad(g, dens, 1.0, out)
    np.testing.assert_allclose(out, [1 - 3.0 / 2.0, 1 - 1.0 / 4.0], atol=1e-15)


def test_kl_value_oracle():
    # KL(2,1) per unit cell with sigma=0: 2-1-ln 2 = 1-ln 2
    g = np.array([2.0])
    gdag = np.array([1.0])
    assert _ref.kl_value(g, gdag, 0.0, 1.0) == pytest.approx(1 - np.log(2), abs=1e-14)
    # outside the support of gdag+sigma nothing accumulates
    g = np.array([2.0, 5.0])
    gdag = np.array([1.0, 0.0])
    assert _ref.kl_value(g, gdag, 0.0, 1.0) == pytest.approx(1 - np.log(2), abs=1e-14)
    # zero shifted g on the support is infinite
    g = np.array([0.0])
    assert _ref.kl_value(g, gdag[:1], 0.0, 1.0) == np.inf


def test_entropy_prox_oracle():
    # fixed point: u - v + step(ln u + 1) = 0; v = e + 2, step = 1 -> u = e
    v = np.array([np.e + 2.0])
    out = np.empty(1)
    _ref.entropy_prox(v, 1.0, 0.0, np.inf, out)
    assert out[0] == pytest.approx(np.e, rel=1e-12)


def test_entropy_prox_box_clip():
    v = np.array([100.0, -100.0])
    out = np.empty(2)
    _ref.entropy_prox(v, 1.0, 0.5, 2.0, out)
    assert out[0] == pytest.approx(2.0)
    assert out[1] == pytest.approx(0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 10.0))
def test_entropy_prox_solves_stationarity(seed, step):
    rng = np.random.default_rng(seed)
    v = rng.uniform(-5, 5, 16)
    out = np.empty(16)
    _ref.entropy_prox(v, step, 0.0, np.inf, out)
    assert np.all(out >= 0)
    pos = out > 0
    res = out[pos] - v[pos] + step * (np.log(out[pos]) + 1.0)
    np.testing.assert_allclose(res, 0.0, atol=1e-9)
    # an exact zero only happens when the positive root underflows
    if np.any(~pos):
        assert np.all((v[~pos] - step) / step < -700.0)


@pytest.mark.skipif(not HAVE_CYTHON, reason="compiled backend unavailable")
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(0.1, 50.0))
def test_backends_agree(seed, sigma, t):
    from pitik._kernels import _core

    g, counts, dens = _rand_case(seed)
    hd = 1.0 / g.size
    v1 = _ref.poisson_value(g, counts, t, hd, sigma)
    v2 = _core.poisson_value(g, counts, t, hd, sigma)
    assert v1 == pytest.approx(v2, rel=1e-13, abs=1e-13)

    o1, o2 = np.empty(g.size), np.empty(g.size)
    _ref.poisson_grad(g, dens, sigma + 1e-6, o1)
    _core.poisson_grad(g, dens, sigma + 1e-6, o2)
    np.testing.assert_allclose(o1, o2, rtol=1e-13)

    k1 = _ref.kl_value(g, dens, sigma, hd)
    k2 = _core.kl_value(g, dens, sigma, hd)
    assert k1 == pytest.approx(k2, rel=1e-12, abs=1e-13)

    _ref.entropy_prox(g - 1.5, 0.3 + t / 100, 0.0, np.inf, o1)
    _core.entropy_prox(g - 1.5, 0.3 + t / 100, 0.0, np.inf, o2)
    np.testing.assert_allclose(o1, o2, rtol=1e-11)


def test_backend_switch_roundtrip():
    start = K.BACKEND
    try:
        K.use_backend("numpy")
        assert K.BACKEND == "numpy"
        with pytest.raises(ValueError):
            K.use_backend("fortran")
    finally:
        K.use_backend(start)
