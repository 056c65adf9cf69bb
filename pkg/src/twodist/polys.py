"""Exact polynomial arithmetic over the rationals.

Univariate polynomials are coefficient tuples (degree 0 first);
trivariate polynomials in (u, v, t) are sparse exponent dictionaries.
Both keep fractions.Fraction coefficients so that constraint data for
the certification pipeline stays exact until the final solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from numbers import Rational

import numpy as np

__all__ = ["UniPoly", "TriPoly", "interval_to_line", "lrs_affine"]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Rational):
        return Fraction(c)
    raise TypeError(f"expected a rational coefficient, got {type(c).__name__}")


def _trim(coeffs: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    n = len(coeffs)
    while n > 0 and coeffs[n - 1] == 0:
        n -= 1
    return coeffs[:n]


@dataclass(frozen=True)
class UniPoly:
    """Dense univariate polynomial; coeffs[d] multiplies x^d."""

    coeffs: tuple[Fraction, ...]

    @classmethod
    def from_coeffs(cls, coeffs) -> "UniPoly":
        return cls(_trim(tuple(_as_fraction(c) for c in coeffs)))

    @classmethod
    def constant(cls, c) -> "UniPoly":
        return cls.from_coeffs([c])

    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __add__(self, other: "UniPoly") -> "UniPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for d, c in enumerate(b):
            out[d] += c
        return UniPoly(_trim(tuple(out)))

    def __neg__(self) -> "UniPoly":
        return UniPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def __mul__(self, other) -> "UniPoly":
        if isinstance(other, UniPoly):
            if not self.coeffs or not other.coeffs:
                return UniPoly(())
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return UniPoly(_trim(tuple(out)))
        c = _as_fraction(other)
        return UniPoly(_trim(tuple(c * a for a in self.coeffs)))

    __rmul__ = __mul__

    def compose_affine(self, c0, c1) -> "UniPoly":
        """Return p(c0 + c1 * x) by Horner over the affine argument."""
        c0, c1 = _as_fraction(c0), _as_fraction(c1)
        acc = UniPoly(())
        lin = UniPoly(_trim((c0, c1)))
        for c in reversed(self.coeffs):
            acc = acc * lin + UniPoly.constant(c)
        return acc

    def eval_exact(self, x) -> Fraction:
        x = _as_fraction(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __call__(self, x):
        """Float Horner evaluation; x may be a scalar or ndarray."""
        acc = np.zeros_like(np.asarray(x, dtype=float))
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        if np.ndim(x) == 0:
            return float(acc)
        return acc


class TriPoly:
    """Sparse polynomial in (u, v, t) with Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[tuple[int, int, int], Fraction] | None = None):
        self.terms = {e: c for e, c in (terms or {}).items() if c != 0}

    @classmethod
    def constant(cls, c) -> "TriPoly":
        return cls({(0, 0, 0): _as_fraction(c)})

    @classmethod
    def monomial(cls, eu: int, ev: int, et: int, c=1) -> "TriPoly":
        return cls({(eu, ev, et): _as_fraction(c)})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, TriPoly) and self.terms == other.terms

    def __add__(self, other: "TriPoly") -> "TriPoly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, Fraction(0)) + c
            if s:
                out[e] = s
            elif e in out:
                del out[e]
        return TriPoly(out)

    def __neg__(self) -> "TriPoly":
        return TriPoly({e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "TriPoly") -> "TriPoly":
        return self + (-other)

    def __mul__(self, other) -> "TriPoly":
        if isinstance(other, TriPoly):
            out: dict[tuple[int, int, int], Fraction] = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                    out[e] = out.get(e, Fraction(0)) + c1 * c2
            return TriPoly(out)
        c = _as_fraction(other)
        return TriPoly({e: c * v for e, v in self.terms.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "TriPoly":
        if k < 0:
            raise ValueError("negative power")
        out = TriPoly.constant(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def permute(self, perm: tuple[int, int, int]) -> "TriPoly":
        """Relabel variables: slot i of each exponent moves to slot perm[i]."""
        out: dict[tuple[int, int, int], Fraction] = {}
        for e, c in self.terms.items():
            ne = [0, 0, 0]
            for pos in range(3):
                ne[perm[pos]] += e[pos]
            key = tuple(ne)
            out[key] = out.get(key, Fraction(0)) + c
        return TriPoly(out)

    def substitute_affine(self, subs) -> UniPoly:
        """Substitute each variable by an affine form (c0, c1) in one variable x.

        subs is a triple of (c0, c1) pairs for u, v, t respectively.
        """
        pairs = [(_as_fraction(c0), _as_fraction(c1)) for c0, c1 in subs]
        out: dict[int, Fraction] = {}
        for e, c in self.terms.items():
            poly = {0: c}
            for exp, (c0, c1) in zip(e, pairs):
                for _ in range(exp):
                    nxt: dict[int, Fraction] = {}
                    for d, v in poly.items():
                        if c0:
                            nxt[d] = nxt.get(d, Fraction(0)) + v * c0
                        if c1:
                            nxt[d + 1] = nxt.get(d + 1, Fraction(0)) + v * c1
                    poly = nxt
            for d, v in poly.items():
                out[d] = out.get(d, Fraction(0)) + v
        if not out:
            return UniPoly(())
        deg = max(out)
        return UniPoly(_trim(tuple(out.get(d, Fraction(0)) for d in range(deg + 1))))

    def eval_exact(self, u, v, t) -> Fraction:
        u, v, t = _as_fraction(u), _as_fraction(v), _as_fraction(t)
        acc = Fraction(0)
        for (eu, ev, et), c in self.terms.items():
            acc += c * u**eu * v**ev * t**et
        return acc

    def __call__(self, u, v, t):
        """Float evaluation; arguments may be scalars or broadcastable arrays."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        t = np.asarray(t, dtype=float)
        acc = np.zeros(np.broadcast_shapes(u.shape, v.shape, t.shape))
        for (eu, ev, et), c in self.terms.items():
            acc = acc + float(c) * u**eu * v**ev * t**et
        if acc.ndim == 0:
            return float(acc)
        return acc

    def max_degree(self) -> int:
        """Largest total degree among the terms (-1 for the zero polynomial)."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)


def interval_to_line(poly: UniPoly, lo, hi, m: int) -> UniPoly:
    """Map nonnegativity on [lo, hi] to nonnegativity on the whole line.

    Returns q(x) = (1 + x^2)^m * poly((lo + hi x^2)/(1 + x^2)), a
    polynomial of degree at most 2m.  For m >= deg(poly), poly >= 0 on
    [lo, hi] iff q >= 0 on R, and q is then a sum of two squares.  The
    map is linear in poly, so it can be applied term by term to
    constraint families whose coefficients depend on decision variables.
    """
    lo, hi = _as_fraction(lo), _as_fraction(hi)
    if m < poly.degree:
        raise ValueError(f"degree bound {m} below polynomial degree {poly.degree}")
    out = [Fraction(0)] * (2 * m + 1)
    for d, fd in enumerate(poly.coeffs):
        if fd == 0:
            continue
        # (lo + hi x^2)^d * (1 + x^2)^(m-d), both expanded over even powers
        p1 = [Fraction(comb(d, j)) * lo ** (d - j) * hi**j for j in range(d + 1)]
        p2 = [Fraction(comb(m - d, j)) for j in range(m - d + 1)]
        for j1, c1 in enumerate(p1):
            if c1 == 0:
                continue
            for j2, c2 in enumerate(p2):
                out[2 * (j1 + j2)] += fd * c1 * c2
    return UniPoly(_trim(tuple(out)))


def lrs_affine(k: int) -> tuple[Fraction, Fraction]:
    """Affine map a -> b = (k a - 1)/(k - 1) tying the two inner products.

    When the smaller inner product b of a two-distance set is related to
    the larger one a with integer parameter k >= 2, b is this affine
    function of a.  Returned as (constant, slope).
    """
    if k < 2:
        raise ValueError(f"parameter k must be >= 2, got {k}")
    return Fraction(-1, k - 1), Fraction(k, k - 1)
