"""Rigorous interval bounds for the three-point SDP by dual sum-of-squares.

The dual of the three-point SDP has multipliers alpha_i >= 0 for the
two-point rows, a 2x2 PSD matrix beta for the pair-count block, and PSD
matrices F_i for the zonal blocks.  Its constraints ask six univariate
polynomials in a (one per primal variable, with b = (k a - 1)/(k - 1)
substituted) to be nonpositive, so any dual-feasible point bounds
SDP(a) from above simultaneously for every a it is feasible at.

To cover a whole segment [a1, a2] at once, each constraint polynomial
is mapped to the real line with f+(x) = (1 + x^2)^m f((a1 + a2 x^2) /
(1 + x^2)) and required to be a sum of squares, f+ = X Q X^t with
Q >= 0 over the monomial basis X = (1, x, ..., x^m).  The Gram matrix
Q is parametrized directly inside the conic problem: a canonical
placement of the f+ coefficients plus a basis of the anti-diagonal-sum
kernel, so coefficient matching holds by construction and the whole
certificate is one block-diagonal SDP.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bounds import lrs_interval_sup
from .conic import ConicProblem, SolveOptions, solve
from .gegenbauer import gegenbauer_coeffs
from .polys import UniPoly, interval_to_line, lrs_affine
from .zonal import zonal_family

__all__ = ["DualVariables", "SegmentCertificate", "IntervalCertificate",
           "build_dual_polynomials", "certify_segment", "certify_interval",
           "dual_feasibility_margin", "certificate_to_dict", "json_17g"]

# Substitution patterns for the six constraint families, keyed by the
# inner-product arguments of the zonal matrices after b = b_k(a).  The
# pair families carry the Gegenbauer terms and the -1 right-hand side;
# the triple families do not.
_PAIR_FAMILIES = ("aa1", "bb1")
_TRIPLE_FAMILIES = ("aaa", "aab", "abb", "bbb")


@dataclass(frozen=True)
class DualVariables:
    """Multipliers of the three-point SDP: alpha_i >= 0, beta and F_i PSD."""

    alpha: np.ndarray
    beta: np.ndarray
    F: list[np.ndarray]


@dataclass(frozen=True)
class ConstraintFamily:
    """One dual constraint as a polynomial in a, affine in the multipliers.

    The constraint is f(a) >= 0 on the segment, where f = const +
    sum_v pieces[v] * value(v) over the multiplier entries v.
    """

    name: str
    const: UniPoly
    pieces: dict[str, UniPoly]
    degree: int


@dataclass(frozen=True)
class SegmentCertificate:
    """Dual-feasible bound on SDP(a) over one segment of I_k.

    bound upper-bounds SDP(a) for every a in the segment by weak
    duality whenever status is "optimal" and grid_margin stays above
    the feasibility tolerance.  residuals holds per-family maxima of
    |coeff(f+) - antidiagonal sums of Q|; grid_margin the per-family
    minima of f on a uniform grid of the segment, an SOS-independent
    check of dual feasibility.
    """

    segment: tuple[float, float]
    bound: float
    dual_solution: DualVariables
    Q_matrices: list[np.ndarray]
    residuals: dict[str, float]
    grid_margin: dict[str, float]
    status: str


@dataclass(frozen=True)
class IntervalCertificate:
    """Aggregate of uniform-segment certificates over [0, 1/(2k-1)].

    bound is the max over segments and is only a valid interval bound
    when ok (every segment certified).
    """

    bound: float
    per_segment: list[SegmentCertificate]
    ok: bool


def _entry_weight(u: int, v: int) -> int:
    # <F, S> picks up off-diagonal entries twice
    return 1 if u == v else 2


def build_dual_polynomials(n: int, k: int, p: int) -> list[ConstraintFamily]:
    """The six dual constraint families as exact polynomials in a.

    Families "aa1" and "bb1" come from the pair variables: f(a) = -1 -
    2 beta_12 - beta_22 - sum_i alpha_i G_i(arg) - 3 sum_{i>=0} <F_i,
    S_i(arg, arg, 1)> with arg = a resp. b(a).  The zonal sum includes
    i = 0: S_0(a, a, 1) is nonzero, and dropping it would break weak
    duality against the primal, whose first zonal block multiplies x1
    and x2 as well.  Families "aaa".."bbb" come from the triple
    variables: f(a) = -beta_22 - sum_{i>=0} <F_i, S_i(y1, y2, y3)>.
    """
    if k < 2:
        raise ValueError(f"parameter k must be >= 2, got {k}")
    if p < 1:
        raise ValueError(f"truncation order must be >= 1, got {p}")
    gtab = gegenbauer_coeffs(n, p)
    fam = zonal_family(n, p)
    b0, b1 = lrs_affine(k)
    ident = (Fraction(0), Fraction(1))
    arg_of = {"a": ident, "b": (b0, b1), "1": (Fraction(1), Fraction(0))}
    families = []
    for name in _PAIR_FAMILIES + _TRIPLE_FAMILIES:
        subs = tuple(arg_of[c] for c in name)
        is_pair = name in _PAIR_FAMILIES
        pieces: dict[str, UniPoly] = {}
        pieces["beta_22"] = UniPoly.constant(-1)
        if is_pair:
            pieces["beta_12"] = UniPoly.constant(-2)
            arg = arg_of[name[0]]
            for i in range(1, p + 1):
                gi = UniPoly.from_coeffs(gtab[i]).compose_affine(*arg)
                pieces[f"alpha_{i}"] = -gi
        zonal_scale = Fraction(-3) if is_pair else Fraction(-1)
        for i, S in enumerate(fam):
            for u in range(S.size):
                for v in range(u, S.size):
                    q = S.entries[u][v].substitute_affine(subs)
                    if not q:
                        continue
                    w = zonal_scale * _entry_weight(u, v)
                    pieces[f"F{i}_{u}_{v}"] = w * q
        const = UniPoly.constant(-1) if is_pair else UniPoly(())
        degree = max([const.degree] + [q.degree for q in pieces.values()])
        families.append(ConstraintFamily(name, const, pieces, degree))
    return families


def _gram_placement(q: UniPoly, m: int) -> np.ndarray:
    """Canonical symmetric (m+1)x(m+1) matrix whose antidiagonal sums
    reproduce the coefficients of q (degree <= 2m)."""
    M = np.zeros((m + 1, m + 1))
    for d, c in enumerate(q.coeffs):
        if c == 0:
            continue
        if d % 2 == 0:
            M[d // 2, d // 2] += float(c)
        else:
            i, j = (d - 1) // 2, (d + 1) // 2
            M[i, j] += float(c) / 2.0
            M[j, i] += float(c) / 2.0
    return M


def _gram_kernel(m: int) -> list[np.ndarray]:
    """Basis of symmetric matrices with zero antidiagonal sums."""
    out = []
    for i in range(1, m):
        for j in range(i, m):
            N = np.zeros((m + 1, m + 1))
            N[i, j] += 1.0
            N[j, i] += 1.0
            N[i - 1, j + 1] -= 1.0
            N[j + 1, i - 1] -= 1.0
            out.append(N)
    return out


def _dual_value(name: str, x: np.ndarray, index: dict[str, int]) -> float:
    return float(x[index[name]])


def _zonal_sizes(p: int) -> list[int]:
    return [p - i + 1 for i in range(p + 1)]


def _build_certificate_problem(families: list[ConstraintFamily], n: int, p: int,
                               a1: Fraction, a2: Fraction):
    """Assemble the SOS certificate SDP for one segment.

    Returns (problem, index, fplus) where index maps multiplier names
    to variable indices and fplus maps family name -> (const UniPoly,
    {name: UniPoly}, m) for the transformed polynomials.
    """
    fam = zonal_family(n, p)
    prob = ConicProblem(sense="min", constant=1.0)
    index: dict[str, int] = {}
    for i in range(1, p + 1):
        index[f"alpha_{i}"] = prob.add_variable(f"alpha_{i}", "nonneg", 1.0)
    for name, obj in (("beta_11", 1.0), ("beta_12", 0.0), ("beta_22", 0.0)):
        index[name] = prob.add_variable(name, "free", obj)
    for i, S in enumerate(fam):
        S11 = S.eval(1.0, 1.0, 1.0)
        for u in range(S.size):
            for v in range(u, S.size):
                nm = f"F{i}_{u}_{v}"
                index[nm] = prob.add_variable(
                    nm, "free", _entry_weight(u, v) * S11[u, v])
    # beta >= 0
    E = np.zeros((2, 2))
    b11 = E.copy(); b11[0, 0] = 1.0
    b12 = E.copy(); b12[0, 1] = b12[1, 0] = 1.0
    b22 = E.copy(); b22[1, 1] = 1.0
    prob.add_block(np.zeros((2, 2)), {index["beta_11"]: b11,
                                      index["beta_12"]: b12,
                                      index["beta_22"]: b22})
    # F_i >= 0
    for i, S in enumerate(fam):
        A = {}
        for u in range(S.size):
            for v in range(u, S.size):
                M = np.zeros((S.size, S.size))
                M[u, v] = M[v, u] = 1.0
                A[index[f"F{i}_{u}_{v}"]] = M
        prob.add_block(np.zeros((S.size, S.size)), A)
    # one Gram block per family: placement of f+ coefficients plus the
    # antidiagonal kernel, so f+ = X Q X^t holds identically in the
    # multipliers and Q >= 0 is exactly the SOS condition
    fplus: dict[str, tuple[UniPoly, dict[str, UniPoly], int]] = {}
    for f in families:
        m = f.degree
        cplus = interval_to_line(f.const, a1, a2, m)
        pplus = {nm: interval_to_line(q, a1, a2, m) for nm, q in f.pieces.items()}
        fplus[f.name] = (cplus, pplus, m)
        A = {index[nm]: _gram_placement(q, m) for nm, q in pplus.items() if q}
        for h, N in enumerate(_gram_kernel(m)):
            A[prob.add_variable(f"lam_{f.name}_{h}", "free", 0.0)] = N
        prob.add_block(_gram_placement(cplus, m), A)
    return prob, index, fplus


def dual_feasibility_margin(families: list[ConstraintFamily], duals: dict[str, float],
                            a1: float, a2: float, grid: int = 1000) -> dict[str, float]:
    """Per-family min of f(a) over a uniform grid of [a1, a2].

    Reconstructs each constraint polynomial from the solved multiplier
    values and evaluates it directly, independent of the sum-of-squares
    machinery; nonnegative margins confirm dual feasibility pointwise.
    """
    ts = np.linspace(a1, a2, grid)
    out = {}
    for f in families:
        vals = f.const(ts) if f.const else np.zeros_like(ts)
        for nm, q in f.pieces.items():
            vals = vals + duals[nm] * q(ts)
        out[f.name] = float(vals.min())
    return out


def _extract_duals(x: np.ndarray, index: dict[str, int], p: int) -> DualVariables:
    alpha = np.array([_dual_value(f"alpha_{i}", x, index) for i in range(1, p + 1)])
    b11 = _dual_value("beta_11", x, index)
    b12 = _dual_value("beta_12", x, index)
    b22 = _dual_value("beta_22", x, index)
    beta = np.array([[b11, b12], [b12, b22]])
    F = []
    for i, sz in enumerate(_zonal_sizes(p)):
        M = np.zeros((sz, sz))
        for u in range(sz):
            for v in range(u, sz):
                M[u, v] = M[v, u] = _dual_value(f"F{i}_{u}_{v}", x, index)
        F.append(M)
    return DualVariables(alpha=alpha, beta=beta, F=F)


def certify_segment(n: int, k: int, p: int, a1, a2,
                    opts: SolveOptions | None = None,
                    grid: int = 1000) -> SegmentCertificate:
    """Certified upper bound on SDP(a) for every a in [a1, a2].

    Solves min 1 + sum(alpha) + beta_11 + <F_0, S_0(1,1,1)> over
    dual-feasible multipliers, with feasibility on the whole segment
    enforced through sum-of-squares Gram blocks.  The returned bound is
    valid by weak duality; residuals and grid_margin let the caller
    re-verify the certificate without trusting the solver.
    """
    a1, a2 = Fraction(a1), Fraction(a2)
    if not 0 <= a1 < a2 <= lrs_interval_sup(k):
        raise ValueError(f"segment [{a1}, {a2}] not inside [0, 1/{2 * k - 1}]")
    families = build_dual_polynomials(n, k, p)
    prob, index, fplus = _build_certificate_problem(families, n, p, a1, a2)
    sol = solve(prob, opts)
    x = sol.variable_values
    duals = _extract_duals(x, index, p)
    if sol.status != "optimal":
        return SegmentCertificate(
            segment=(float(a1), float(a2)), bound=math.nan, dual_solution=duals,
            Q_matrices=[], residuals={}, grid_margin={}, status=sol.status)
    # Gram blocks sit after beta and the p+1 zonal blocks
    Qs = []
    residuals = {}
    for fi, f in enumerate(families):
        blk = prob.blocks[1 + (p + 1) + fi]
        Q = blk.C.copy()
        for v, A in blk.A.items():
            Q = Q + x[v] * A
        Qs.append(Q)
        cplus, pplus, m = fplus[f.name]
        coeffs = np.zeros(2 * m + 1)
        for d, c in enumerate(cplus.coeffs):
            coeffs[d] += float(c)
        for nm, q in pplus.items():
            xv = x[index[nm]]
            for d, c in enumerate(q.coeffs):
                coeffs[d] += xv * float(c)
        sums = np.array([np.trace(Q[::-1], offset=m - d) for d in range(2 * m + 1)])
        residuals[f.name] = float(np.abs(coeffs - sums).max())
    dual_vals = {nm: float(x[i]) for nm, i in index.items()}
    margin = dual_feasibility_margin(families, dual_vals, float(a1), float(a2), grid)
    return SegmentCertificate(
        segment=(float(a1), float(a2)), bound=sol.objective_value,
        dual_solution=duals, Q_matrices=Qs, residuals=residuals,
        grid_margin=margin, status=sol.status)


def certify_interval(n: int, k: int, p: int, num_segments: int = 20,
                     opts: SolveOptions | None = None) -> IntervalCertificate:
    """Max of uniform-segment certificates over the whole of [0, 1/(2k-1)].

    The closed right endpoint only adds the a + b = 0 boundary case, so
    certifying the closure is conservative.  The aggregate bound is
    only valid when every segment certified (ok).
    """
    if num_segments < 1:
        raise ValueError(f"need at least one segment, got {num_segments}")
    sup = lrs_interval_sup(k)
    segs = []
    for s in range(num_segments):
        a1 = sup * s / num_segments
        a2 = sup * (s + 1) / num_segments
        segs.append(certify_segment(n, k, p, a1, a2, opts))
    ok = all(c.status == "optimal" for c in segs)
    bound = max((c.bound for c in segs if c.status == "optimal"), default=math.nan)
    return IntervalCertificate(bound=bound, per_segment=segs, ok=ok)


def _fmt(x: float) -> float:
    return float(f"{float(x):.17g}")


def _matrix_rows(M: np.ndarray) -> list[list[float]]:
    return [[_fmt(v) for v in row] for row in np.asarray(M, dtype=float)]


def certificate_to_dict(cert: SegmentCertificate) -> dict:
    """JSON-ready view of a segment certificate for third-party checking."""
    d = cert.dual_solution
    return {
        "segment": [_fmt(cert.segment[0]), _fmt(cert.segment[1])],
        "bound": _fmt(cert.bound),
        "status": cert.status,
        "alpha": [_fmt(v) for v in d.alpha],
        "beta": _matrix_rows(d.beta),
        "F": [_matrix_rows(M) for M in d.F],
        "Q": [_matrix_rows(M) for M in cert.Q_matrices],
        "residuals": {nm: _fmt(v) for nm, v in cert.residuals.items()},
        "grid_margin": {nm: _fmt(v) for nm, v in cert.grid_margin.items()},
    }


def json_17g(obj) -> str:
    """Serialize with every float rendered at 17 significant digits."""

    def render(o) -> str:
        if isinstance(o, dict):
            items = (f"{json.dumps(str(k))}: {render(v)}" for k, v in o.items())
            return "{" + ", ".join(items) + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(render(v) for v in o) + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            v = float(o)
            if math.isnan(v) or math.isinf(v):
                return json.dumps(str(v))
            return f"{v:.17g}"
        return json.dumps(o)

    return render(obj)
