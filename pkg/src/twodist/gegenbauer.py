"""Gegenbauer polynomials for the unit sphere, normalized to 1 at t=1.

Coefficients are exact rationals from the three-term recurrence

    G_0 = 1,  G_1 = t,
    G_k = ((2k + n - 4) t G_{k-1} - (k - 1) G_{k-2}) / (k + n - 3),

where n is the ambient dimension (points live on S^{n-1}).  These are the
positive-definite zonal kernels on the sphere: for any finite point set
X on S^{n-1}, sum_{x,y in X} G_k(<x,y>) >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = ["GegenbauerTable", "gegenbauer_coeffs"]


@lru_cache(maxsize=None)
def gegenbauer_coeffs(dim: int, max_degree: int) -> tuple[tuple[Fraction, ...], ...]:
    """Exact coefficient rows for G_0 .. G_{max_degree} on S^{dim-1}.

    Row k lists coefficients of t^0 .. t^k; entries of the wrong parity
    are zero.  Results are cached since the tables are reused heavily.
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if max_degree < 0:
        raise ValueError(f"max_degree must be >= 0, got {max_degree}")
    rows: list[tuple[Fraction, ...]] = [(Fraction(1),)]
    if max_degree >= 1:
        rows.append((Fraction(0), Fraction(1)))
    for k in range(2, max_degree + 1):
        prev, prev2 = rows[k - 1], rows[k - 2]
        c1 = Fraction(2 * k + dim - 4, k + dim - 3)
        c2 = Fraction(k - 1, k + dim - 3)
        row = [Fraction(0)] * (k + 1)
        for d, v in enumerate(prev):
            row[d + 1] += c1 * v
        for d, v in enumerate(prev2):
            row[d] -= c2 * v
        rows.append(tuple(row))
    return tuple(rows)


@dataclass(frozen=True)
class GegenbauerTable:
    """Table of exact Gegenbauer coefficients up to a fixed degree."""

    dim: int
    max_degree: int
    coeffs: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def build(cls, dim: int, max_degree: int) -> "GegenbauerTable":
        return cls(dim, max_degree, gegenbauer_coeffs(dim, max_degree))

    def eval(self, k: int, t):
        """Evaluate G_k at a float or ndarray t by Horner's rule."""
        if not 0 <= k <= self.max_degree:
            raise ValueError(f"degree {k} outside table range 0..{self.max_degree}")
        acc = np.zeros_like(np.asarray(t, dtype=float))
        for c in reversed(self.coeffs[k]):
            acc = acc * t + float(c)
        if np.isscalar(t) or np.ndim(t) == 0:
            return float(acc)
        return acc

    def eval_exact(self, k: int, t: Fraction) -> Fraction:
        """Evaluate G_k at a rational point in exact arithmetic."""
        acc = Fraction(0)
        for c in reversed(self.coeffs[k]):
            acc = acc * t + c
        return acc
