"""Polynomial layer checks: arithmetic homomorphisms and the interval map."""

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twodist.polys import TriPoly, UniPoly, interval_to_line, lrs_affine

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=6)
coeff_lists = st.lists(rationals, min_size=0, max_size=6)


def random_tripoly(draw):
    n_terms = draw(st.integers(0, 5))
    terms = {}
    for _ in range(n_terms):
        e = (draw(st.integers(0, 3)), draw(st.integers(0, 3)), draw(st.integers(0, 3)))
        terms[e] = terms.get(e, Fraction(0)) + draw(rationals)
    return TriPoly(terms)


tripolys = st.composite(random_tripoly)()


@given(coeff_lists, coeff_lists, rationals)
def test_unipoly_ring_ops(ca, cb, x):
    p, q = UniPoly.from_coeffs(ca), UniPoly.from_coeffs(cb)
    assert (p + q).eval_exact(x) == p.eval_exact(x) + q.eval_exact(x)
    assert (p - q).eval_exact(x) == p.eval_exact(x) - q.eval_exact(x)
    assert (p * q).eval_exact(x) == p.eval_exact(x) * q.eval_exact(x)
    assert (Fraction(3, 2) * p).eval_exact(x) == Fraction(3, 2) * p.eval_exact(x)


@given(coeff_lists, rationals, rationals, rationals)
def test_unipoly_compose_affine(ca, c0, c1, x):
    p = UniPoly.from_coeffs(ca)
    assert p.compose_affine(c0, c1).eval_exact(x) == p.eval_exact(c0 + c1 * x)


@given(coeff_lists)
def test_unipoly_trims_and_degree(ca):
    p = UniPoly.from_coeffs(ca)
    if p.coeffs:
        assert p.coeffs[-1] != 0
    assert p.degree == len(p.coeffs) - 1


def test_unipoly_float_eval_vectorized():
    p = UniPoly.from_coeffs([1, -2, 3])
    xs = np.array([0.0, 0.5, -1.0])
    assert np.allclose(p(xs), 1 - 2 * xs + 3 * xs**2)
    assert isinstance(p(0.5), float)


@given(tripolys, tripolys, rationals, rationals, rationals)
def test_tripoly_ring_ops(p, q, u, v, t):
    args = (u, v, t)
    assert (p + q).eval_exact(*args) == p.eval_exact(*args) + q.eval_exact(*args)
    assert (p - q).eval_exact(*args) == p.eval_exact(*args) - q.eval_exact(*args)
    assert (p * q).eval_exact(*args) == p.eval_exact(*args) * q.eval_exact(*args)


@given(tripolys, st.integers(0, 4), rationals, rationals, rationals)
def test_tripoly_pow(p, k, u, v, t):
    assert (p**k).eval_exact(u, v, t) == p.eval_exact(u, v, t) ** k


@given(tripolys, st.permutations([0, 1, 2]), rationals, rationals, rationals)
def test_tripoly_permute(p, perm, u, v, t):
    perm = tuple(perm)
    w = (u, v, t)
    q = p.permute(perm)
    assert q.eval_exact(*w) == p.eval_exact(w[perm[0]], w[perm[1]], w[perm[2]])


@given(tripolys, rationals, rationals, st.tuples(rationals, rationals, rationals,
                                                 rationals, rationals, rationals))
def test_tripoly_substitute_affine(p, x, _unused, subs6):
    subs = [(subs6[0], subs6[1]), (subs6[2], subs6[3]), (subs6[4], subs6[5])]
    q = p.substitute_affine(subs)
    expect = p.eval_exact(*(c0 + c1 * x for c0, c1 in subs))
    assert q.eval_exact(x) == expect


def test_tripoly_float_eval_broadcasts():
    p = TriPoly({(1, 1, 0): Fraction(2), (0, 0, 2): Fraction(-1)})
    u = np.array([0.1, 0.2])
    out = p(u, 0.5, np.array([1.0, 2.0]))
    assert np.allclose(out, 2 * u * 0.5 - np.array([1.0, 4.0]))


@given(coeff_lists, rationals)
def test_interval_map_identity(ca, xr)  :
    p = UniPoly.from_coeffs(ca)
    lo, hi = Fraction(1, 5), Fraction(3, 4)
    m = max(p.degree, 0) + 1
    q = interval_to_line(p, lo, hi, m)
    x = xr
    arg = (lo + hi * x * x) / (1 + x * x)
    assert q.eval_exact(x) == (1 + x * x) ** m * p.eval_exact(arg)


@given(coeff_lists, coeff_lists, rationals)
def test_interval_map_linear(ca, cb, lam):
    p, q = UniPoly.from_coeffs(ca), UniPoly.from_coeffs(cb)
    m = max(p.degree, q.degree, 0) + 1
    lo, hi = Fraction(-1, 3), Fraction(1, 2)
    lhs = interval_to_line(p + lam * q, lo, hi, m)
    rhs = interval_to_line(p, lo, hi, m) + lam * interval_to_line(q, lo, hi, m)
    assert lhs.coeffs == rhs.coeffs


def _min_on_interval(p, lo, hi):
    cs = [float(c) for c in p.coeffs]
    dps = np.polyder(np.array(cs[::-1]))
    crit = [lo, hi]
    if dps.size:
        roots = np.roots(dps)
        crit += [float(r.real) for r in roots if abs(r.imag) < 1e-9 and lo <= r.real <= hi]
    return min(p(x) for x in crit)


def _min_on_line(q):
    cs = [float(c) for c in q.coeffs]
    if len(cs) <= 1:
        return cs[0] if cs else 0.0
    if (len(cs) - 1) % 2 == 1 or cs[-1] < 0:
        return -np.inf
    dps = np.polyder(np.array(cs[::-1]))
    vals = [q(0.0)]
    for r in np.roots(dps):
        if abs(r.imag) < 1e-9:
            vals.append(q(float(r.real)))
    return min(vals)


@settings(deadline=None, max_examples=60)
@given(st.lists(st.integers(-6, 6), min_size=1, max_size=5))
def test_interval_map_preserves_sign(ica):
    # independent oracle: minimum via critical points of p on [lo,hi]
    # and of the transformed polynomial on the line
    p = UniPoly.from_coeffs([Fraction(c) for c in ica])
    lo, hi = Fraction(0), Fraction(1, 2)
    q = interval_to_line(p, lo, hi, max(p.degree, 0))
    m_int = _min_on_interval(p, float(lo), float(hi))
    m_line = _min_on_line(q)
    if abs(m_int) > 1e-8:
        assert (m_int > 0) == (m_line > -1e-12 * max(1.0, abs(m_line)))


def test_interval_map_rejects_low_degree_bound():
    p = UniPoly.from_coeffs([1, 2, 3])
    with pytest.raises(ValueError):
        interval_to_line(p, Fraction(0), Fraction(1), 1)


def test_lrs_affine_endpoint_antisymmetry():
    # at a = 1/(2k-1) the two inner products are negatives of each other
    for k in range(2, 8):
        c0, c1 = lrs_affine(k)
        a = Fraction(1, 2 * k - 1)
        assert c0 + c1 * a == -a
        # b < a strictly for a < 1
        for a2 in [Fraction(0), Fraction(1, 10), Fraction(1, 2)]:
            assert c0 + c1 * a2 < a2


def test_lrs_affine_rejects_k_below_two():
    with pytest.raises(ValueError):
        lrs_affine(1)


def test_tripoly_max_degree():
    p = TriPoly({(1, 2, 0): Fraction(1), (0, 0, 4): Fraction(2)})
    assert p.max_degree() == 4
    assert TriPoly().max_degree() == -1


def test_substitute_affine_all_exponents():
    # direct cross-check on a dense cubic against itertools expansion
    terms = {}
    val = Fraction(1)
    for e in itertools.product(range(2), repeat=3):
        terms[e] = val
        val += 1
    p = TriPoly(terms)
    subs = [(Fraction(1, 2), Fraction(1)), (Fraction(0), Fraction(2)), (Fraction(-1), Fraction(3))]
    q = p.substitute_affine(subs)
    for x in [Fraction(0), Fraction(2, 3), Fraction(-5, 4)]:
        u, v, t = (c0 + c1 * x for c0, c1 in subs)
        assert q.eval_exact(x) == p.eval_exact(u, v, t)
