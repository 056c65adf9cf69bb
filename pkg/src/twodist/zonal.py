"""Zonal matrices for three-point positive-definiteness on the sphere.

For points x, y, z on S^{dim-1} with pairwise inner products
u = <x,z>, v = <y,z>, t = <x,y>, the matrix family

    Y_k(u, v, t)_{ij} = u^i v^j ((1-u^2)(1-v^2))^{k/2}
                        * G_k((t - u v) / sqrt((1-u^2)(1-v^2)))

built on the one-dimension-lower Gegenbauer polynomials G_k is positive
definite averaged over the sphere.  Expanding G_k degree by degree
removes the square roots: every entry is a polynomial in (u, v, t) with
rational coefficients, because G_k only has terms of degrees k, k-2, ...

S_k averages Y_k over the six orderings of (u, v, t).  Summing
S_k(<x,z>, <y,z>, <x,y>) over all ordered triples of a finite point set
gives a positive semidefinite matrix, which is the constraint family
behind the three-point bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations

import numpy as np

from .gegenbauer import gegenbauer_coeffs
from .polys import TriPoly

__all__ = ["ZonalMatrix", "zonal_entry", "zonal_matrix", "symmetrized_zonal_matrix",
           "zonal_family"]


def zonal_entry(dim: int, k: int, i: int, j: int) -> TriPoly:
    """Entry (i, j) of Y_k on S^{dim-1}, as an exact polynomial."""
    if dim < 3:
        raise ValueError(f"dimension must be >= 3 for zonal matrices, got {dim}")
    g = gegenbauer_coeffs(dim - 1, k)[k]
    t_minus_uv = TriPoly({(0, 0, 1): Fraction(1), (1, 1, 0): Fraction(-1)})
    one_minus_u2 = TriPoly({(0, 0, 0): Fraction(1), (2, 0, 0): Fraction(-1)})
    one_minus_v2 = TriPoly({(0, 0, 0): Fraction(1), (0, 2, 0): Fraction(-1)})
    radsq = one_minus_u2 * one_minus_v2
    acc = TriPoly()
    for l in range(k // 2 + 1):
        d = k - 2 * l
        c = g[d]
        if c == 0:
            continue
        acc = acc + c * t_minus_uv**d * radsq**l
    return TriPoly.monomial(i, j, 0) * acc


@dataclass(frozen=True)
class ZonalMatrix:
    """Square matrix of trivariate polynomials with evaluation helpers."""

    dim: int
    k: int
    entries: tuple[tuple[TriPoly, ...], ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    def eval(self, u, v, t) -> np.ndarray:
        """Evaluate to floats; scalar args give (size, size), arrays broadcast
        to (..., size, size)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        t = np.asarray(t, dtype=float)
        lead = np.broadcast_shapes(u.shape, v.shape, t.shape)
        out = np.zeros(lead + (self.size, self.size))
        for i, row in enumerate(self.entries):
            for j, p in enumerate(row):
                out[..., i, j] = p(u, v, t)
        return out

    def eval_exact(self, u, v, t) -> list[list[Fraction]]:
        return [[p.eval_exact(u, v, t) for p in row] for row in self.entries]


def zonal_matrix(dim: int, k: int, size: int) -> ZonalMatrix:
    """Unsymmetrized Y_k with rows and columns 0..size-1."""
    entries = tuple(tuple(zonal_entry(dim, k, i, j) for j in range(size))
                    for i in range(size))
    return ZonalMatrix(dim, k, entries)


def symmetrized_zonal_matrix(dim: int, k: int, size: int) -> ZonalMatrix:
    """S_k: the average of Y_k over all six orderings of (u, v, t)."""
    sixth = Fraction(1, 6)
    entries = []
    for i in range(size):
        row = []
        for j in range(size):
            y = zonal_entry(dim, k, i, j)
            acc = TriPoly()
            for perm in permutations((0, 1, 2)):
                acc = acc + y.permute(perm)
            row.append(sixth * acc)
        entries.append(tuple(row))
    return ZonalMatrix(dim, k, tuple(entries))


@lru_cache(maxsize=None)
def zonal_family(dim: int, p: int) -> tuple[ZonalMatrix, ...]:
    """S_0 .. S_p with the truncation sizes used by the three-point bound.

    S_k is (p - k + 1) x (p - k + 1), so the family's total degree
    budget stays at p.
    """
    return tuple(symmetrized_zonal_matrix(dim, k, p - k + 1) for k in range(p + 1))
