"""Zonal matrix checks: symmetry, anchor values, positive-definiteness."""

from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twodist.gegenbauer import GegenbauerTable
from twodist.polys import TriPoly
from twodist.zonal import symmetrized_zonal_matrix, zonal_entry, zonal_family, zonal_matrix


def test_entry_at_origin_recovers_gegenbauer():
    # u=v=0: the square-root factor is 1, so entry (0,0) is G_k(t) one dimension down
    tab = GegenbauerTable.build(22, 5)
    for k in range(6):
        e = zonal_entry(23, k, 0, 0)
        for t in [Fraction(0), Fraction(1, 3), Fraction(-2, 5)]:
            assert e.eval_exact(0, 0, t) == tab.eval_exact(k, t)


def test_entry_prefactor_powers():
    # entry (i,j) carries u^i v^j against entry (0,0)
    base = zonal_entry(9, 3, 0, 0)
    shifted = zonal_entry(9, 3, 2, 1)
    assert shifted == TriPoly.monomial(2, 1, 0) * base


def test_zonal_entry_matches_radical_definition():
    # numeric check of the square-root form on strictly interior points
    rng = np.random.default_rng(7)
    tab = GegenbauerTable.build(12, 4)
    for k in range(5):
        e = zonal_entry(13, k, 1, 2)
        for _ in range(20):
            u, v, t = rng.uniform(-0.9, 0.9, size=3)
            r = np.sqrt((1 - u * u) * (1 - v * v))
            ref = u * 1 * v**2 * r**k * tab.eval(k, (t - u * v) / r)
            assert e(u, v, t) == pytest.approx(ref, abs=1e-12)


def test_symmetrized_is_permutation_invariant():
    S = symmetrized_zonal_matrix(8, 2, 3)
    for row in S.entries:
        for p in row:
            for perm in permutations((0, 1, 2)):
                assert p.permute(perm) == p


def test_symmetrized_vanishes_at_ones():
    for k in range(1, 5):
        S = symmetrized_zonal_matrix(23, k, 6 - k)
        M = S.eval_exact(1, 1, 1)
        assert all(c == 0 for row in M for c in row)


def test_symmetrized_k0_at_ones_is_all_ones():
    S = symmetrized_zonal_matrix(23, 0, 6)
    M = S.eval_exact(1, 1, 1)
    assert all(c == 1 for row in M for c in row)


def test_family_sizes():
    fam = zonal_family(23, 5)
    assert len(fam) == 6
    for k, S in enumerate(fam):
        assert S.size == 5 - k + 1


def test_eval_shapes():
    S = symmetrized_zonal_matrix(7, 1, 3)
    out = S.eval(0.1, 0.2, 0.3)
    assert out.shape == (3, 3)
    u = np.linspace(-0.5, 0.5, 4)
    out = S.eval(u, 0.2, 0.3)
    assert out.shape == (4, 3, 3)
    assert np.allclose(out[1], S.eval(u[1], 0.2, 0.3))


def test_unsymmetrized_matrix_layout():
    Y = zonal_matrix(9, 2, 3)
    assert Y.size == 3
    assert Y.entries[1][2] == zonal_entry(9, 2, 1, 2)


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_triple_sum_positive_semidefinite(seed):
    # sum of S_k over all ordered triples of a random point set is PSD
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 8))
    m = int(rng.integers(2, 7))
    pts = rng.standard_normal((m, n))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    gram = np.clip(pts @ pts.T, -1.0, 1.0)
    U = gram[:, None, :] * np.ones((1, m, 1))          # <x_i, x_l>
    V = gram[None, :, :] * np.ones((m, 1, 1))          # <x_j, x_l>
    T = gram[:, :, None] * np.ones((1, 1, m))          # <x_i, x_j>
    for k, S in enumerate(zonal_family(n, 3)):
        total = S.eval(U, V, T).sum(axis=(0, 1, 2))
        w = np.linalg.eigvalsh(total)
        assert w.min() >= -1e-7 * max(1.0, abs(w).max())


def test_low_dimension_rejected():
    with pytest.raises(ValueError):
        zonal_entry(2, 1, 0, 0)
