"""Gegenbauer table checks against independent references."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_chebyt, eval_gegenbauer

from twodist.gegenbauer import GegenbauerTable, gegenbauer_coeffs


def test_base_cases():
    tab = gegenbauer_coeffs(5, 1)
    assert tab[0] == (Fraction(1),)
    assert tab[1] == (Fraction(0), Fraction(1))


def test_degree_two_closed_form():
    # G_2(t) = (n t^2 - 1)/(n - 1)
    for n in [2, 3, 7, 23, 50]:
        row = gegenbauer_coeffs(n, 2)[2]
        assert row == (Fraction(-1, n - 1), Fraction(0), Fraction(n, n - 1))


def test_normalized_at_one():
    for n in [2, 3, 8, 23]:
        tab = GegenbauerTable.build(n, 8)
        for k in range(9):
            assert tab.eval_exact(k, Fraction(1)) == 1


def test_parity():
    tab = gegenbauer_coeffs(9, 10)
    for k, row in enumerate(tab):
        for d, c in enumerate(row):
            if (k - d) % 2 == 1:
                assert c == 0


@pytest.mark.parametrize("n", [3, 5, 12, 23, 40])
def test_matches_scipy_gegenbauer(n):
    # G_k^{(n)}(t) = C_k^lambda(t) / C_k^lambda(1) with lambda = (n-2)/2
    lam = (n - 2) / 2
    tab = GegenbauerTable.build(n, 7)
    ts = np.linspace(-1, 1, 41)
    for k in range(8):
        ours = tab.eval(k, ts)
        ref = eval_gegenbauer(k, lam, ts) / eval_gegenbauer(k, lam, 1.0)
        assert np.allclose(ours, ref, atol=1e-12)


def test_dim_two_is_chebyshev():
    tab = GegenbauerTable.build(2, 9)
    ts = np.linspace(-1, 1, 31)
    for k in range(10):
        assert np.allclose(tab.eval(k, ts), eval_chebyt(k, ts), atol=1e-12)


@given(st.integers(2, 30), st.integers(0, 9))
def test_exact_and_float_eval_agree(n, k):
    tab = GegenbauerTable.build(n, k)
    for t in [Fraction(0), Fraction(1, 3), Fraction(-4, 5), Fraction(1)]:
        assert tab.eval(k, float(t)) == pytest.approx(float(tab.eval_exact(k, t)), abs=1e-12)


@settings(deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_positive_definite_on_random_point_sets(seed):
    # sum_{x,y} G_k(<x,y>) >= 0 for points on the sphere
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    m = int(rng.integers(2, 12))
    pts = rng.standard_normal((m, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    tab = GegenbauerTable.build(n, 6)
    for k in range(7):
        assert tab.eval(k, gram).sum() >= -1e-7 * m * m


def test_scalar_eval_returns_float():
    tab = GegenbauerTable.build(7, 3)
    out = tab.eval(3, 0.25)
    assert isinstance(out, float)


def test_bad_inputs_rejected():
    with pytest.raises(ValueError):
        gegenbauer_coeffs(1, 3)
    with pytest.raises(ValueError):
        gegenbauer_coeffs(5, -1)
    tab = GegenbauerTable.build(5, 2)
    with pytest.raises(ValueError):
        tab.eval(3, 0.0)
