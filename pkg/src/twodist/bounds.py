"""Two-point LP and three-point SDP bounds for spherical two-distance sets.

A two-distance set with inner products a > b in dimension n has size at
most the optimum of a small LP over Gegenbauer coefficients, and at most
the optimum of a semidefinite program that adds three-point (zonal
matrix) constraints.  Both are built here; the SDP is solved with the
interior-point solver from the conic module, the LP exactly by vertex
enumeration in rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .conic import ConicProblem, ConicSolution, SolveOptions, solve
from .gegenbauer import GegenbauerTable
from .polys import lrs_affine
from .zonal import zonal_family

__all__ = ["TwoDistanceInstance", "lp_bound", "build_lp_problem", "build_primal_sdp",
           "solve_primal_sdp", "sdp_value", "sweep", "sweep_csv", "SweepPoint",
           "lrs_interval_sup"]


def _rat(x) -> Fraction:
    """Exact rational image of the input (floats convert exactly)."""
    return Fraction(x) if not isinstance(x, Fraction) else x


def lrs_interval_sup(k: int) -> Fraction:
    """Right endpoint 1/(2k-1) of the admissible interval I_k for a."""
    if k < 2:
        raise ValueError(f"parameter k must be >= 2, got {k}")
    return Fraction(1, 2 * k - 1)


@dataclass(frozen=True)
class TwoDistanceInstance:
    """Dimension, the two inner products, optional LRS index, truncation order."""

    n: int
    a: Fraction
    b: Fraction
    k: int | None = None
    p: int = 5

    def __post_init__(self):
        object.__setattr__(self, "a", _rat(self.a))
        object.__setattr__(self, "b", _rat(self.b))
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got {self.n}")
        if self.p < 1:
            raise ValueError(f"truncation order must be >= 1, got {self.p}")
        if not (-1 <= self.b < self.a < 1):
            raise ValueError(f"need -1 <= b < a < 1, got a={self.a}, b={self.b}")
        if self.k is not None:
            c0, c1 = lrs_affine(self.k)
            if c0 + c1 * self.a != self.b:
                raise ValueError(f"b={self.b} is not (k a - 1)/(k - 1) for k={self.k}, "
                                 f"a={self.a}")

    @classmethod
    def from_lrs(cls, n: int, k: int, a, p: int = 5) -> "TwoDistanceInstance":
        a = _rat(a)
        c0, c1 = lrs_affine(k)
        return cls(n=n, a=a, b=c0 + c1 * a, k=k, p=p)


def _lp_rows(inst: TwoDistanceInstance) -> list[tuple[Fraction, Fraction]]:
    tab = GegenbauerTable.build(inst.n, inst.p)
    return [(tab.eval_exact(i, inst.a), tab.eval_exact(i, inst.b))
            for i in range(1, inst.p + 1)]


def lp_bound(inst: TwoDistanceInstance) -> float:
    """Exact optimum of max 1 + a1 + a2 over a1, a2 >= 0 with
    1 + a1 G_i(a) + a2 G_i(b) >= 0 for i = 1..p; +inf when unbounded.

    Solved by enumerating all vertices of the planar feasible region
    (pairwise intersections of constraint lines and axes) in exact
    rational arithmetic, after checking the recession cone for
    unbounded directions.
    """
    rows = _lp_rows(inst)

    def feasible_dir(d1: Fraction, d2: Fraction) -> bool:
        return all(ga * d1 + gb * d2 >= 0 for ga, gb in rows)

    # recession cone: any nonzero direction d >= 0 improving the objective
    candidates = [(Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))]
    for ga, gb in rows:
        for d in ((-gb, ga), (gb, -ga)):
            if d[0] >= 0 and d[1] >= 0 and (d[0] or d[1]):
                candidates.append(d)
    for d in candidates:
        if feasible_dir(*d):
            return math.inf

    # lines: a1 = 0, a2 = 0, and 1 + a1 ga + a2 gb = 0 per constraint
    lines = [(Fraction(1), Fraction(0), Fraction(0)),
             (Fraction(0), Fraction(1), Fraction(0))]
    lines += [(ga, gb, Fraction(1)) for ga, gb in rows]

    def feasible_point(a1: Fraction, a2: Fraction) -> bool:
        if a1 < 0 or a2 < 0:
            return False
        return all(1 + ga * a1 + gb * a2 >= 0 for ga, gb in rows)

    best = Fraction(1)  # origin is always feasible
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            p1, q1, r1 = lines[i]
            p2, q2, r2 = lines[j]
            det = p1 * q2 - p2 * q1
            if det == 0:
                continue
            a1 = (-r1 * q2 + r2 * q1) / det
            a2 = (-p1 * r2 + p2 * r1) / det
            if feasible_point(a1, a2):
                best = max(best, 1 + a1 + a2)
    return float(best)


def build_lp_problem(inst: TwoDistanceInstance) -> ConicProblem:
    """The same LP as a diagonal-block conic problem (for export and
    cross-checking against the interior-point solver)."""
    prob = ConicProblem(sense="max", constant=1.0)
    v1 = prob.add_variable("alpha1", "nonneg", 1.0)
    v2 = prob.add_variable("alpha2", "nonneg", 1.0)
    for i, (ga, gb) in enumerate(_lp_rows(inst), start=1):
        prob.add_block(np.array([[1.0]]),
                       {v1: np.array([[float(ga)]]), v2: np.array([[float(gb)]])})
    return prob


def build_primal_sdp(inst: TwoDistanceInstance) -> ConicProblem:
    """Three-point SDP: max 1 + (x1+x2)/3 over x >= 0 subject to the 2x2
    pair-count block, the p two-point rows, and the p+1 zonal matrix blocks."""
    n, p = inst.n, inst.p
    a, b = float(inst.a), float(inst.b)
    tab = GegenbauerTable.build(n, p)
    fam = zonal_family(n, p)
    prob = ConicProblem(sense="max", constant=1.0)
    xs = [prob.add_variable(f"x{j}", "nonneg", 1.0 / 3.0 if j <= 2 else 0.0)
          for j in range(1, 7)]
    pair = np.array([[0.0, 1.0 / 3.0], [1.0 / 3.0, 1.0 / 3.0]])
    tail = np.array([[0.0, 0.0], [0.0, 1.0]])
    prob.add_block(np.array([[1.0, 0.0], [0.0, 0.0]]),
                   {xs[0]: pair, xs[1]: pair,
                    xs[2]: tail, xs[3]: tail, xs[4]: tail, xs[5]: tail})
    for i in range(1, p + 1):
        prob.add_block(np.array([[3.0]]),
                       {xs[0]: np.array([[tab.eval(i, a)]]),
                        xs[1]: np.array([[tab.eval(i, b)]])})
    for i in range(p + 1):
        S = fam[i]
        prob.add_block(S.eval(1.0, 1.0, 1.0),
                       {xs[0]: S.eval(a, a, 1.0), xs[1]: S.eval(b, b, 1.0),
                        xs[2]: S.eval(a, a, a), xs[3]: S.eval(a, a, b),
                        xs[4]: S.eval(a, b, b), xs[5]: S.eval(b, b, b)})
    return prob


def solve_primal_sdp(inst: TwoDistanceInstance,
                     opts: SolveOptions | None = None) -> tuple[ConicProblem, ConicSolution]:
    prob = build_primal_sdp(inst)
    sol = solve(prob, opts)
    return prob, sol


def sdp_value(n: int, k: int, a, p: int = 5, opts: SolveOptions | None = None) -> float:
    """SDP(a): the three-point bound at b = (k a - 1)/(k - 1).

    Requires a in the closed admissible interval [0, 1/(2k-1)].  Returns
    +inf when the truncated program has a certified improving ray (the
    truncation order is too small to bound this point), mirroring
    lp_bound.
    """
    a = _rat(a)
    if not 0 <= a <= lrs_interval_sup(k):
        raise ValueError(f"a={a} outside [0, 1/{2 * k - 1}]")
    inst = TwoDistanceInstance.from_lrs(n, k, a, p)
    prob, sol = solve_primal_sdp(inst, opts)
    if sol.status == "unbounded":
        return math.inf
    if sol.status != "optimal":
        raise RuntimeError(f"SDP solve failed with status {sol.status} "
                           f"(n={n}, k={k}, a={float(a)}, p={p})")
    return sol.objective_value


@dataclass(frozen=True)
class SweepPoint:
    a: float
    value: float
    status: str


def sweep(n: int, k: int, p: int = 5, grid_points: int = 101,
          opts: SolveOptions | None = None) -> list[SweepPoint]:
    """SDP(a) at grid_points uniformly spaced a over the closed I_k.

    Individual solver failures are recorded per point (value nan) and
    the sweep continues.  Points are returned in grid order.
    """
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")
    sup = lrs_interval_sup(k)
    out = []
    for idx in range(grid_points):
        a = sup * idx / (grid_points - 1)
        try:
            val = sdp_value(n, k, a, p, opts)
            out.append(SweepPoint(float(a), val, "optimal"))
        except (RuntimeError, np.linalg.LinAlgError):
            out.append(SweepPoint(float(a), math.nan, "numerical-failure"))
    return out


def sweep_csv(points: list[SweepPoint]) -> str:
    lines = ["a,sdp_value,status"]
    for pt in points:
        lines.append(f"{pt.a:.17g},{pt.value:.17g},{pt.status}")
    return "\n".join(lines) + "\n"
