"""Small dense block-diagonal semidefinite programming in LMI form.

A problem optimizes obj . x + const over scalar variables x subject to

    C_b + sum_v A_{b,v} x_v  >=  0   (positive semidefinite, per block b),

with each variable declared free or nonnegative.  Nonnegative variables
are folded into extra 1x1 blocks at solve time, so the core algorithm
only sees an LMI in free variables.

The solver is a primal-dual path-following interior-point method with
Nesterov-Todd scaling and an infeasible start, dense linear algebra per
block.  Blocks in this application are tiny (at most a few dozen rows),
so there is no sparsity handling.  Solves are deterministic: no
randomness, fixed iteration rules.

Duality convention, stated for a maximization problem: a dual point is
one PSD matrix Z_b per block with sum_b <A_{b,v}, Z_b> = -obj_v for free
variables (<= -obj_v for nonnegative ones), and then
sum_b <C_b, Z_b> + const upper-bounds every feasible objective value.
For minimization the inequalities flip through obj -> -obj.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np

_TRACE = bool(os.environ.get("TWODIST_TRACE"))

__all__ = ["LmiBlock", "ConicProblem", "ConicSolution", "SolveOptions", "solve",
           "check_certificate", "export_sdpa", "import_sdpa"]


@dataclass
class LmiBlock:
    """One PSD constraint C + sum_v A[v] x_v >= 0; A keyed by variable index."""

    C: np.ndarray
    A: dict[int, np.ndarray]

    @property
    def size(self) -> int:
        return self.C.shape[0]


@dataclass
class ConicProblem:
    """Block-diagonal SDP in LMI form with signed scalar variables."""

    sense: str = "max"
    names: list[str] = field(default_factory=list)
    signs: list[str] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    constant: float = 0.0
    blocks: list[LmiBlock] = field(default_factory=list)

    def add_variable(self, name: str, sign: str = "free", objective: float = 0.0) -> int:
        if sign not in ("free", "nonneg"):
            raise ValueError(f"unknown sign {sign!r}")
        self.names.append(name)
        self.signs.append(sign)
        self.objective.append(float(objective))
        return len(self.names) - 1

    def add_block(self, C, A: dict[int, np.ndarray]) -> int:
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("block constant must be square")
        rows = C.shape[0]
        A_clean = {}
        for v, mat in A.items():
            mat = np.asarray(mat, dtype=float)
            if mat.shape != C.shape:
                raise ValueError(f"coefficient for variable {v} has shape {mat.shape}, "
                                 f"block is {C.shape}")
            if not 0 <= v < len(self.names):
                raise ValueError(f"unknown variable index {v}")
            if np.any(mat != mat.T) and not np.allclose(mat, mat.T, atol=1e-14):
                raise ValueError("coefficient matrices must be symmetric")
            if np.any(mat):
                A_clean[v] = 0.5 * (mat + mat.T)
        if not np.allclose(C, C.T, atol=1e-14):
            raise ValueError("block constant must be symmetric")
        if rows > 64:
            raise ValueError(f"block size {rows} exceeds the supported 64")
        self.blocks.append(LmiBlock(0.5 * (C + C.T), A_clean))
        return len(self.blocks) - 1

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def validate(self) -> None:
        if self.num_vars < 1:
            raise ValueError("problem needs at least one variable")
        if not self.blocks:
            raise ValueError("problem needs at least one block")
        if self.sense not in ("max", "min"):
            raise ValueError(f"unknown sense {self.sense!r}")


@dataclass
class SolveOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iters: int = 200
    # Facial reduction presolve: restrict each block to the common range of
    # {C, A_v} before solving.  LMIs whose coefficient matrices share a
    # nontrivial null space have no strictly feasible point, which defeats
    # path-following; the reduction is exact because the range containment
    # holds identically in the variables, and duals lift back as B Yhat B^T.
    presolve: bool = True


@dataclass
class ConicSolution:
    # status: "optimal", "infeasible", "unbounded", or "numerical-failure";
    # for "unbounded", variable_values holds a certified improving ray
    status: str
    objective_value: float
    variable_values: np.ndarray
    dual_matrices: list[np.ndarray]
    reduced_costs: np.ndarray
    duality_gap: float
    max_residual: float
    iterations: int


def _floored_eigh(X: np.ndarray):
    """Eigendecomposition with eigenvalues floored against division blowup.

    The relative floor (condition 1e30) only engages in catastrophic
    states; legitimate late-stage spectra are many orders above it.
    Keeping iterates off the cone boundary is the job of the
    neighborhood test on step acceptance, not of this floor.
    """
    w, Q = np.linalg.eigh(np.asarray(X, dtype=np.float64))
    return np.maximum(w, max(w[-1] * 1e-30, 1e-200)), Q


def _nt_scaling(X: np.ndarray, Y: np.ndarray):
    """Nesterov-Todd point W with W Y W = X.

    Returns (Winv, Whalf, Winvhalf, Yinv) with symmetric PSD square
    roots, used by the Newton system (Winv) and by the second-order
    corrector, which works in the scaled space V = Winvhalf X Winvhalf.
    """
    wx, Qx = _floored_eigh(X)
    Gx = Qx * np.sqrt(wx)  # X = Gx Gx^T
    M = Gx.T @ Y @ Gx
    M = 0.5 * (M + M.T)
    d, U = _floored_eigh(M)
    root = U * np.sqrt(np.sqrt(d))
    # Winv = Gx^{-T} M^{1/2} Gx^{-1}
    GinvT = Qx / np.sqrt(wx)  # = Gx^{-T}
    Minv_half_T = GinvT @ root
    Winv = Minv_half_T @ Minv_half_T.T
    Winv = 0.5 * (Winv + Winv.T)
    w, Q = _floored_eigh(Winv)
    sq = np.sqrt(w)
    Winvhalf = (Q * sq) @ Q.T
    Whalf = (Q / sq) @ Q.T
    wy, Qy = _floored_eigh(Y)
    Yi = (Qy / wy) @ Qy.T
    return Winv, Whalf, Winvhalf, 0.5 * (Yi + Yi.T)


def _mehrotra_correction(X, Whalf, Winvhalf, dX_aff, dY_aff):
    """Second-order corrector term in the original space.

    In scaled space the complementarity linearization leaves a quadratic
    remainder sym(dVx dVy); mapping its Lyapunov preimage back through
    Whalf gives the term to subtract from the corrector target.
    """
    X = np.asarray(X, dtype=np.float64)
    dX_aff = np.asarray(dX_aff, dtype=np.float64)
    dY_aff = np.asarray(dY_aff, dtype=np.float64)
    V = Winvhalf @ X @ Winvhalf
    V = 0.5 * (V + V.T)
    dVx = Winvhalf @ dX_aff @ Winvhalf
    dVy = Whalf @ dY_aff @ Whalf
    S = dVx @ dVy
    S = 0.5 * (S + S.T)
    lam, Q = np.linalg.eigh(V)
    if lam[0] <= 1e-14 * max(lam[-1], 0.0):
        # scaled point too degenerate for a trustworthy second-order term;
        # the plain first-order corrector remains valid
        return np.zeros_like(X)
    T = Q.T @ S @ Q
    T = T / (0.5 * (lam[:, None] + lam[None, :]))
    corr = Whalf @ (Q @ T @ Q.T) @ Whalf
    return 0.5 * (corr + corr.T)


def _step_to_boundary(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest step alpha with X + alpha dX still PSD (inf if unconstrained)."""
    wx, Qx = _floored_eigh(X)
    G = Qx / np.sqrt(wx)  # G^T X G = I
    S = G.T @ np.asarray(dX, dtype=np.float64) @ G
    S = 0.5 * (S + S.T)
    lam = np.linalg.eigvalsh(S)[0]
    if lam >= 0:
        return np.inf
    return -1.0 / lam


def _neighborhood_ok(Xs, Ys, beta: float) -> bool:
    """Check every eigenvalue of X_b Y_b stays above beta times the mean.

    This is the wide neighborhood of the central path: it keeps the
    iterate centered enough that the scaling point and Newton system
    remain well conditioned, preventing the decentering collapse where
    one block's dual races to the boundary while mu is still large.
    """
    vals = []
    for X, Y in zip(Xs, Ys):
        try:
            L = np.linalg.cholesky(np.asarray(Y, dtype=np.float64))
        except np.linalg.LinAlgError:
            return False
        w = np.linalg.eigvalsh(L.T @ np.asarray(X, dtype=np.float64) @ L)
        if w[0] <= 0.0:
            return False
        vals.append(w)
    mu = sum(w.sum() for w in vals) / sum(len(w) for w in vals)
    return min(w[0] for w in vals) >= beta * mu


def _guarded_steps(Xs, dXs, Ys, dYs, ap: float, ad: float, beta: float):
    """Shrink fraction-to-boundary steps until inside the neighborhood."""
    for _ in range(30):
        if ap < 1e-13 and ad < 1e-13:
            return 0.0, 0.0
        Xn = [X + ap * D for X, D in zip(Xs, dXs)]
        Yn = [Y + ad * D for Y, D in zip(Ys, dYs)]
        if _neighborhood_ok(Xn, Yn, beta):
            return ap, ad
        ap *= 0.8
        ad *= 0.8
    return 0.0, 0.0


def _ruiz_scale(mats: list[np.ndarray], rounds: int = 8) -> np.ndarray:
    """Symmetric diagonal equilibration D with entries of D M D near unit size.

    Balances the entrywise max over all matrices of a block at once, so a
    single congruence works for C and every A_v.  Zonal data has entries
    spanning many orders of magnitude (powers of the inner products), and
    interior-point scaling matrices inherit that spread unless removed.
    """
    size = mats[0].shape[0]
    env = np.zeros((size, size))
    for M in mats:
        np.maximum(env, np.abs(M), out=env)
    d = np.ones(size)
    for _ in range(rounds):
        row = env.max(axis=1)
        row[row == 0.0] = 1.0
        s = 1.0 / np.sqrt(row)
        env = env * s[:, None] * s[None, :]
        d *= s
    return d


class _Instance:
    """Preprocessed solver data: canonical min form, folded signs, scaling.

    dtype sets the working precision of the stored data; the solver keeps
    its iterates in the same type.  Factorizations always run in float64
    (LAPACK), but residual and right-hand-side assembly in extended
    precision is what lets iterative refinement push the final accuracy
    past what float64 alone reaches on badly scaled data.
    """

    def __init__(self, problem: ConicProblem, dtype=np.float64):
        problem.validate()
        self.dtype = dtype
        n = problem.num_vars
        # canonical internal form: min cbar . x, blocks Cbar + sum Abar x >= 0
        g = np.asarray(problem.objective, dtype=float)
        self.flip = problem.sense == "max"
        c = -g if self.flip else g
        self.blocks: list[tuple[np.ndarray, dict[int, np.ndarray]]] = []
        self.diag: list[np.ndarray] = []
        self.user_block_count = len(problem.blocks)
        for blk in problem.blocks:
            d = _ruiz_scale([blk.C] + list(blk.A.values()))
            self.diag.append(d)
            D = d[:, None] * d[None, :]
            self.blocks.append((blk.C * D, {v: A * D for v, A in blk.A.items()}))
        # per-variable column scaling: x internal = nu * x user
        nu = np.ones(n)
        for v in range(n):
            m = max((np.abs(A[v]).max() for _, A in self.blocks if v in A),
                    default=0.0)
            if m > 0.0:
                nu[v] = m
        self.nu = nu
        for i, (C, A) in enumerate(self.blocks):
            self.blocks[i] = (C, {v: A[v] / nu[v] for v in A})
        c = c / nu
        self.gamma = max(1.0, np.abs(c).max())
        self.c = c / self.gamma
        for v, sign in enumerate(problem.signs):
            if sign == "nonneg":
                self.diag.append(np.ones(1))
                self.blocks.append((np.zeros((1, 1)), {v: np.ones((1, 1))}))
        self.c = self.c.astype(dtype)
        self.blocks = [(C.astype(dtype), {v: A.astype(dtype) for v, A in As.items()})
                       for C, As in self.blocks]
        self.sizes = [C.shape[0] for C, _ in self.blocks]
        self.N = sum(self.sizes)
        self.n = n
        # stacked per-block coefficient tensors for vectorized Schur assembly
        self.active: list[np.ndarray] = []
        self.stacks: list[np.ndarray] = []
        for C, A in self.blocks:
            vs = np.fromiter(sorted(A), dtype=int, count=len(A))
            self.active.append(vs)
            d = C.shape[0]
            stack = np.zeros((len(vs), d, d), dtype=dtype)
            for r, v in enumerate(vs):
                stack[r] = A[v]
            self.stacks.append(stack)


def _assemble_schur(inst: _Instance, Winvs: list[np.ndarray]):
    n = inst.n
    M = np.zeros((n, n), dtype=inst.dtype)
    # per block: B_i = Winv A_i Winv, M += <A_j, B_i> scattered to active vars
    Bs = []
    for bi, stack in enumerate(inst.stacks):
        if stack.shape[0] == 0:
            Bs.append(stack)
            continue
        Wi = Winvs[bi].astype(inst.dtype)
        B = np.einsum("ij,kjl,lm->kim", Wi, stack, Wi, optimize=True)
        Bs.append(B)
        vs = inst.active[bi]
        flatA = stack.reshape(len(vs), -1)
        flatB = B.reshape(len(vs), -1)
        M[np.ix_(vs, vs)] += flatA @ flatB.T
    return M, Bs


def _solve_newton(inst, factor, Bs, Winvs, P, Rs, dvec, Xs):
    """Newton step for given centering targets Rs (per block)."""
    rhs = -dvec.copy()
    mids = []
    for bi in range(len(inst.blocks)):
        Wi = Winvs[bi].astype(inst.dtype)
        mid = Wi @ (Rs[bi] - P[bi]) @ Wi
        mid = 0.5 * (mid + mid.T)
        mids.append(mid)
        vs = inst.active[bi]
        if len(vs):
            flatA = inst.stacks[bi].reshape(len(vs), -1)
            rhs[vs] += flatA @ mid.ravel()
    dx = _schur_solve(factor, rhs)
    dXs, dYs = [], []
    for bi in range(len(inst.blocks)):
        vs = inst.active[bi]
        if len(vs):
            combA = np.tensordot(dx[vs], inst.stacks[bi], axes=(0, 0))
            combB = np.tensordot(dx[vs], Bs[bi], axes=(0, 0))
        else:
            d = inst.sizes[bi]
            combA = np.zeros((d, d), dtype=inst.dtype)
            combB = combA
        dY = mids[bi] - combB
        dX = P[bi] + combA
        dYs.append(0.5 * (dY + dY.T))
        dXs.append(0.5 * (dX + dX.T))
    return dx, dXs, dYs


def _chol_solve(L, rhs):
    return np.linalg.solve(L.T, np.linalg.solve(L, rhs))


def _schur_solve(factor, rhs):
    """Solve M dx = rhs from a float64 Cholesky factor of M.

    Two rounds of iterative refinement with residuals accumulated in the
    working dtype of rhs; with extended-precision assembly this recovers
    digits the float64 factorization alone cannot deliver.
    """
    L, M = factor
    dx = _chol_solve(L, np.asarray(rhs, dtype=np.float64)).astype(rhs.dtype)
    for _ in range(2):
        r = rhs - M @ dx
        dx = dx + _chol_solve(L, np.asarray(r, dtype=np.float64))
    return dx


def _face_bases(problem: ConicProblem) -> list[np.ndarray | None]:
    """Per-block orthonormal basis of the common range of {C, A_v}.

    Returns None for full-rank blocks (no reduction) and an s x d matrix
    with d < s otherwise (d = 0 means the block constrains nothing).  The
    split uses the spectrum of C^2 + sum_v A_v^2, whose kernel is exactly
    the common null space; structural zeros sit many orders of magnitude
    below the kept eigenvalues, so a relative cut is reliable.
    """
    bases: list[np.ndarray | None] = []
    for blk in problem.blocks:
        K = blk.C @ blk.C
        for A in blk.A.values():
            K = K + A @ A
        w, V = np.linalg.eigh(K)
        if w[-1] <= 0.0:
            bases.append(np.zeros((blk.size, 0)))
            continue
        keep = w > w[-1] * 1e-12
        if int(keep.sum()) == blk.size:
            bases.append(None)
        else:
            bases.append(np.ascontiguousarray(V[:, keep]))
    return bases


def _reduce_problem(problem: ConicProblem, bases: list[np.ndarray | None]) -> ConicProblem:
    red = ConicProblem(sense=problem.sense, names=list(problem.names),
                       signs=list(problem.signs),
                       objective=list(problem.objective),
                       constant=problem.constant)
    for blk, B in zip(problem.blocks, bases):
        if B is None:
            red.add_block(blk.C, dict(blk.A))
        elif B.shape[1] > 0:
            red.add_block(B.T @ blk.C @ B,
                          {v: B.T @ A @ B for v, A in blk.A.items()})
    return red


def _polish_duals(problem: ConicProblem, x, duals):
    """Candidate minimal-norm corrections of the duals toward stationarity.

    Subtracts the stationarity defect along the span of the constraint
    matrices while pinning <S_b, Y_b>, so complementarity is untouched.
    No psd reprojection: dual iterates sit on the cone boundary, where
    clamping feeds the correction straight back into stationarity; small
    eigenvalue dips are within what the certificate tolerances allow.
    The rank cutoff trades fit against amplification along nearly
    dependent directions, so several cutoffs are returned and the caller
    keeps whichever candidate actually certifies best.
    """
    g = np.asarray(problem.objective, dtype=float)
    gmax = g if problem.sense == "max" else -g
    m = len(problem.names)
    x = np.asarray(x, dtype=float)
    xscale = max(1.0, np.abs(x).max())
    Ss = []
    for blk in problem.blocks:
        S = blk.C + sum(A * x[v] for v, A in blk.A.items())
        Ss.append(0.5 * (S + S.T))
    nb = len(problem.blocks)
    sizes = [blk.size for blk in problem.blocks]
    ius = [np.triu_indices(s) for s in sizes]
    wts = [np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0)) for iu in ius]
    offs = np.cumsum([0] + [len(iu[0]) for iu in ius])
    fam = [dict(blk.A) for blk in problem.blocks]
    # one row per block pinning <S_b, Y_b>, normalized onto one scale
    for bi, S in enumerate(Ss):
        fam[bi][m + bi] = S / max(1.0, np.abs(S).max())
    M = np.zeros((m + nb, offs[-1]))
    for bi in range(nb):
        for v, Av in fam[bi].items():
            M[v, offs[bi]:offs[bi + 1]] = Av[ius[bi]] * wts[bi]
    station = gmax.astype(float).copy()
    for bi, blk in enumerate(problem.blocks):
        for v, A in blk.A.items():
            station[v] += np.tensordot(A, duals[bi])
    delta = np.zeros(m + nb)
    for v, sign in enumerate(problem.signs):
        if sign == "free" or x[v] > 1e-9 * xscale:
            delta[v] = -station[v]
        else:
            delta[v] = -max(station[v], 0.0)
    for bi in range(nb):
        delta[m + bi] = -np.tensordot(fam[bi][m + bi], duals[bi])
    if np.abs(delta).max() <= 1e-16:
        return []
    U, sv, Vt = np.linalg.svd(M, full_matrices=False)
    coef = U.T @ delta
    cands = []
    for cut in (1e-4, 1e-6, 1e-8, 1e-10):
        keep = sv >= cut * sv[0]
        if not keep.any():
            continue
        dy = Vt.T @ np.where(keep, coef / np.where(keep, sv, 1.0), 0.0)
        cand = []
        for bi, s in enumerate(sizes):
            step = np.zeros((s, s))
            step[ius[bi]] = dy[offs[bi]:offs[bi + 1]] / wts[bi]
            cand.append(duals[bi] + step + np.triu(step, 1).T)
        cands.append(cand)
    return cands


def _package_solution(problem: ConicProblem, bases, status, x, core_duals,
                      iters) -> ConicSolution:
    """Lift core results to the original problem and assemble the solution."""
    if bases is None:
        user_duals = core_duals
    else:
        user_duals = []
        pos = 0
        for blk, B in zip(problem.blocks, bases):
            if B is None:
                user_duals.append(core_duals[pos])
                pos += 1
            elif B.shape[1] == 0:
                user_duals.append(np.zeros((blk.size, blk.size)))
            else:
                Z = B @ core_duals[pos] @ B.T
                user_duals.append(0.5 * (Z + Z.T))
                pos += 1
    g = np.asarray(problem.objective, dtype=float)
    gmax = g if problem.sense == "max" else -g

    def assemble(duals):
        # reduced cost in max form: <A_v, Z> + g_v (== 0 for free vars
        # at optimum)
        red = gmax.astype(float).copy()
        for bi, blk in enumerate(problem.blocks):
            for v, A in blk.A.items():
                red[v] += np.tensordot(A, duals[bi])
        if problem.sense == "min":
            red = -red
        pval = float(g @ x + problem.constant)
        dval_max = sum(np.tensordot(blk.C, duals[bi])
                       for bi, blk in enumerate(problem.blocks))
        if problem.sense == "max":
            dval = float(dval_max + problem.constant)
        else:
            dval = float(-dval_max + problem.constant)
        sol = ConicSolution(
            status=status,
            objective_value=pval,
            variable_values=np.asarray(x, dtype=float).copy(),
            dual_matrices=duals,
            reduced_costs=red,
            duality_gap=abs(pval - dval),
            max_residual=np.inf,
            iterations=iters,
        )
        if status == "optimal":
            report = check_certificate(problem, sol, tol=np.inf)
            sol.max_residual = report["max_residual"]
        return sol

    sol = assemble(user_duals)
    if status == "optimal" and sol.max_residual > 1e-12:
        for cand in _polish_duals(problem, x, user_duals):
            polished = assemble(cand)
            if polished.max_residual < sol.max_residual:
                sol = polished
    return sol


def _rescaled_problem(problem: ConicProblem, hint: np.ndarray) -> ConicProblem:
    """Substitute x_v = hint_v * x'_v; same feasible slacks, same duals."""
    scaled = ConicProblem(sense=problem.sense, constant=problem.constant)
    for v, name in enumerate(problem.names):
        scaled.add_variable(name, problem.signs[v],
                            problem.objective[v] * hint[v])
    for blk in problem.blocks:
        scaled.add_block(blk.C, {v: A * hint[v] for v, A in blk.A.items()})
    return scaled


def _ladder(problem: ConicProblem, opts: SolveOptions,
            rescale: int = 2, target: float | None = None) -> ConicSolution:
    """Run the core loop with restarts and a precision ladder on `problem`.

    Restarts at larger initial scales give instances whose optimizers sit
    far from the identity start room to grow both cones before the central
    path narrows; stalled iterates are accepted anyway when a from-scratch
    certificate already meets the target.  The first round runs in plain
    float64; later rounds assemble residuals in extended precision, which
    is what lets the refined Newton solves reach certificates float64
    stalls just above.  As a last resort a stalled run whose iterate has
    grown far from the identity reseeds one full retry with variables
    rescaled to the stalled magnitudes, which recenters optimizers that
    live at scale 1e3..1e5 back to order one.
    """
    default_target = 10.0 * min(opts.gap_tol, opts.feas_tol)
    if target is None:
        target = default_target
    # keep 10*min(tols) == target so the stall-acceptance gate, the round
    # tolerances, and the certificate goal stay consistent under overrides
    f = target / default_target
    gap_tol = max(opts.gap_tol * f, 1e-13)
    feas_tol = max(opts.feas_tol * f, 1e-13)
    best: ConicSolution | None = None
    sol = None
    total_iters = 0
    dtypes = (np.float64, np.longdouble, np.longdouble)
    for _refine in range(3):
        cur = SolveOptions(gap_tol=gap_tol, feas_tol=feas_tol,
                           max_iters=opts.max_iters, presolve=opts.presolve)
        rho = 1.0
        sol_round = None
        for attempt in range(4):
            status, x, core_duals, iters = _core_ipm(problem, cur, rho,
                                                     dtype=dtypes[_refine])
            total_iters += iters
            if status in ("optimal", "infeasible"):
                break
            trial = _package_solution(problem, None, "optimal", x,
                                      core_duals, total_iters)
            if trial.max_residual <= target:
                status, sol_round = "optimal", trial
                break
            # a stalled trial that is merely decent is still worth keeping
            # as a best effort: every downstream acceptance re-measures
            # residuals, and rescale retries need a candidate to map back
            if (trial.max_residual <= 1e-4
                    and (best is None
                         or trial.max_residual < best.max_residual)):
                best = trial
            rho *= 100.0
        if sol_round is None:
            sol_round = _package_solution(problem, None, status, x,
                                          core_duals, total_iters)
        if status == "infeasible":
            return sol_round
        if status == "optimal":
            if best is None or sol_round.max_residual <= best.max_residual:
                best = sol_round
            if best.max_residual <= target:
                return best
            gap_tol *= 1e-2
            feas_tol *= 1e-2
        # a failed round falls through: the next round runs at higher
        # working precision, which is the actual remedy for these stalls
        sol = sol_round
    out = best if best is not None else sol
    xs = out.variable_values
    if (rescale > 0 and (out.status != "optimal" or out.max_residual > target)
            and np.all(np.isfinite(xs)) and np.abs(xs).max() > 1e2):
        hint = np.clip(np.abs(xs), 1.0, 1e8)
        # residuals certified on the rescaled problem amplify by the scale
        # ratio of the objective when mapped back, so certify tighter there
        g = np.abs(np.asarray(problem.objective, dtype=float))
        amp = max(1.0, (g * hint).max()) / max(1.0, g.max())
        sub_t = max(target / amp, 1e-10)
        ssol = _ladder(_rescaled_problem(problem, hint), opts,
                       rescale=rescale - 1, target=sub_t)
        if _TRACE:
            print(f"    rescale retry: hmax={hint.max():.3e} "
                  f"sub_t={sub_t:.1e} -> {ssol.status} "
                  f"maxres={ssol.max_residual:.3e}")
        if ssol.status == "optimal":
            trial = _package_solution(problem, None, "optimal",
                                      hint * ssol.variable_values,
                                      ssol.dual_matrices,
                                      total_iters + ssol.iterations)
            if out.status != "optimal" or trial.max_residual <= out.max_residual:
                out = trial
    return out


def _build_work(problem: ConicProblem, bases, signs, keep):
    """Assemble the reduced working problem for the current reduction state.

    bases: per original block, None (identity), or an s x d basis (d = 0
    drops the block).  signs: effective sign per original variable (facial
    reduction can relax nonneg to free).  keep: original variable indices
    still present (variables proven zero are dropped).  Returns the work
    problem and the list mapping work block index -> original block index,
    or None when nothing usable remains.
    """
    if not keep:
        return None
    pos = {v: j for j, v in enumerate(keep)}
    work = ConicProblem(sense=problem.sense, constant=problem.constant)
    for v in keep:
        work.add_variable(problem.names[v], signs[v], problem.objective[v])
    wmap = []
    for bi, blk in enumerate(problem.blocks):
        B = bases[bi]
        if B is not None and B.shape[1] == 0:
            continue
        if B is None:
            C = blk.C
            A = {pos[v]: M for v, M in blk.A.items() if v in pos}
        else:
            C = B.T @ blk.C @ B
            A = {pos[v]: B.T @ M @ B for v, M in blk.A.items() if v in pos}
        work.add_block(C, A)
        wmap.append(bi)
    if not work.blocks:
        return None
    return work, wmap


def _slater_aux(work: ConicProblem):
    """Auxiliary SDP max t s.t. every block - tI >= 0, nonneg x_v >= t, t <= 1.

    Its optimum is the best attainable minimum eigenvalue across blocks
    and sign constraints; t* = 0 means the work problem has no strictly
    feasible point, and the auxiliary dual at t* = 0 is then exactly a
    facial-reduction certificate: Z >= 0 with <C, Z> = 0, zero adjoint on
    free variables and nonpositive adjoint on nonneg ones.
    """
    aux = ConicProblem(sense="max")
    for nm in work.names:
        aux.add_variable(nm, "free")
    ti = aux.add_variable("_t", "free", 1.0)
    for blk in work.blocks:
        A = dict(blk.A)
        A[ti] = -np.eye(blk.size)
        aux.add_block(blk.C, A)
    sign_rows = []
    one = np.ones((1, 1))
    for v, sg in enumerate(work.signs):
        if sg == "nonneg":
            aux.add_block(np.zeros((1, 1)), {v: one, ti: -one})
            sign_rows.append(v)
    aux.add_block(one, {ti: -one})
    return aux, ti, len(work.blocks), sign_rows


def _primal_face_cut(work: ConicProblem, opts: SolveOptions):
    """Facial-reduction cut from the Slater auxiliary problem, or None.

    Cuts the range of the auxiliary dual certificate out of each block and
    fixes to zero any nonneg variable whose sign multiplier is active in
    the certificate (its adjoint is strictly negative, so feasibility
    forces the variable to vanish).
    """
    aux, ti, n_lmi, sign_rows = _slater_aux(work)
    asol = _ladder(aux, opts)
    if _TRACE:
        print(f"    slater aux: {asol.status} t*={asol.objective_value:.3e}"
              f" maxres={asol.max_residual:.3e}")
    if asol.status != "optimal" or asol.max_residual > 1e-6:
        return None
    cmax = max(1.0, max(np.abs(blk.C).max() for blk in work.blocks))
    tstar = float(asol.variable_values[ti])
    if abs(tstar) > 1e-6 * cmax:
        return None
    Zs = asol.dual_matrices[:n_lmi]
    zs = [float(asol.dual_matrices[n_lmi + i][0, 0]) for i in range(len(sign_rows))]
    zmax = max([float(np.linalg.eigvalsh(Z)[-1]) for Z in Zs] + zs + [0.0])
    if zmax <= 0.0:
        return None
    cut_bases: list[np.ndarray | None] = []
    any_cut = False
    for Z in Zs:
        w, Q = np.linalg.eigh(Z)
        null = w <= 1e-5 * zmax
        if null.all():
            cut_bases.append(None)
        else:
            cut_bases.append(np.ascontiguousarray(Q[:, null]))
            any_cut = True
    fix = [sign_rows[i] for i, z in enumerate(zs) if z > 1e-5 * zmax]
    if not any_cut and not fix:
        return None
    return {"bases": cut_bases, "fix": fix, "free": [],
            "cert": [0.5 * (Z + Z.T) for Z in Zs] if fix else None}


def _recession_aux(work: ConicProblem):
    """Auxiliary SDP searching the recession cone for a dual-face certificate.

    Searches directions u supported on zero-objective nonneg variables
    (so the objective is constant along u by construction) with
    sum_v u_v A_{b,v} >= 0 in every block, normalized onto the simplex by
    eliminating the last support variable.  A PSD nonzero R(u) forces
    every dual solution to annihilate range(R(u)): it is a facial
    reduction of the dual, applied primally by restricting each block to
    the null space of R_b(u) and relaxing the supported signs to free.
    """
    g = np.asarray(work.objective, dtype=float)
    support = [v for v, sg in enumerate(work.signs)
               if sg == "nonneg" and g[v] == 0.0
               and any(v in blk.A for blk in work.blocks)]
    if not support:
        return None
    incl = [bi for bi, blk in enumerate(work.blocks)
            if any(v in blk.A for v in support)]
    if not incl:
        return None
    aux = ConicProblem(sense="max")
    nw = len(support) - 1
    for i in range(nw):
        aux.add_variable(f"_u{i}", "nonneg")
    ti = aux.add_variable("_t", "free", 1.0)
    last = support[-1]
    for bi in incl:
        blk = work.blocks[bi]
        zero = np.zeros((blk.size, blk.size))
        Alast = blk.A.get(last, zero)
        A = {ti: -np.eye(blk.size)}
        for i in range(nw):
            M = blk.A.get(support[i], zero) - Alast
            if np.any(M):
                A[i] = M
        aux.add_block(Alast, A)
    one = np.ones((1, 1))
    if nw:
        aux.add_block(one, {i: -one for i in range(nw)})
    aux.add_block(one, {ti: -one})
    return aux, support, ti


def _recession_cut(work: ConicProblem, opts: SolveOptions):
    """Dual facial-reduction cut from the recession auxiliary, or None."""
    built = _recession_aux(work)
    if built is None:
        if _TRACE:
            print("    recession aux: no support")
        return None
    aux, support, ti = built
    rsol = _ladder(aux, opts)
    if _TRACE:
        print(f"    recession aux: {rsol.status} t*={rsol.objective_value:.3e}"
              f" maxres={rsol.max_residual:.3e} support={support}")
    if rsol.status != "optimal" or rsol.max_residual > 1e-6:
        return None
    amax = max(1.0, max(np.abs(blk.A[v]).max()
                        for blk in work.blocks
                        for v in support if v in blk.A))
    if rsol.objective_value < -1e-6 * amax:
        return None
    w = np.clip(rsol.variable_values[:len(support) - 1], 0.0, None)
    u = np.append(w, max(0.0, 1.0 - w.sum()))
    if u.sum() <= 1e-9:
        return None
    u = u / u.sum()
    Rs = []
    for blk in work.blocks:
        R = np.zeros((blk.size, blk.size))
        for i, v in enumerate(support):
            if v in blk.A:
                R = R + u[i] * blk.A[v]
        Rs.append(0.5 * (R + R.T))
    lmax = max(float(np.linalg.eigvalsh(R)[-1]) for R in Rs)
    if lmax <= 0.0:
        return None
    cut_bases: list[np.ndarray | None] = []
    any_cut = False
    for R in Rs:
        wr, Q = np.linalg.eigh(R)
        null = wr <= 1e-7 * lmax
        if null.all():
            cut_bases.append(None)
        else:
            cut_bases.append(np.ascontiguousarray(Q[:, null]))
            any_cut = True
    freed = [support[i] for i in range(len(support))
             if u[i] > 1e-3 * u.max()]
    if not any_cut and not freed:
        return None
    return {"bases": cut_bases, "fix": [], "free": freed, "cert": None}


def _unbounded_ray(problem: ConicProblem, opts: SolveOptions):
    """Search for a certified improving ray; returns it or None.

    A direction d with <c_max, d> = 1, d_v >= 0 on nonneg variables, and
    sum_v A_bv d_v psd on every block keeps any feasible point feasible
    while improving the objective without bound.  The search maximizes
    the margin t with <c,d> fixed to 1 by eliminating the variable with
    the largest objective coefficient; a strictly positive optimum gives
    a ray, re-verified here in original coordinates before returning.
    """
    g = np.asarray(problem.objective, dtype=float)
    gmax = g if problem.sense == "max" else -g
    if not np.any(gmax):
        return None
    vstar = int(np.argmax(np.abs(gmax)))
    cs = gmax[vstar]
    m = len(problem.names)
    rest = [v for v in range(m) if v != vstar]
    aux = ConicProblem(sense="max")
    col = {}
    for v in rest:
        col[v] = aux.add_variable(f"_d{v}", "free")
    ti = aux.add_variable("_t", "free", 1.0)
    for blk in problem.blocks:
        zero = np.zeros((blk.size, blk.size))
        Astar = blk.A.get(vstar, zero)
        C = Astar / cs
        A = {ti: -np.eye(blk.size)}
        for v in rest:
            M = blk.A.get(v, zero) - (gmax[v] / cs) * Astar
            if np.any(M):
                A[col[v]] = M
        aux.add_block(C, A)
    one = np.ones((1, 1))
    for v in rest:
        if problem.signs[v] == "nonneg":
            aux.add_block(np.zeros((1, 1)), {col[v]: one, ti: -one})
    if problem.signs[vstar] == "nonneg":
        A = {col[v]: np.full((1, 1), -gmax[v] / cs)
             for v in rest if gmax[v] != 0.0}
        A[ti] = -one
        aux.add_block(np.full((1, 1), 1.0 / cs), A)
    aux.add_block(one, {ti: -one})
    rsol = _ladder(aux, opts)
    if _TRACE:
        print(f"    ray aux: {rsol.status} t*={rsol.objective_value:.3e}"
              f" maxres={rsol.max_residual:.3e}")
    # rays on the cone boundary (margin zero) still certify unboundedness;
    # the margin only screens out clearly ray-free problems, the extracted
    # direction is what gets verified
    if (rsol.status != "optimal" or rsol.max_residual > 1e-6
            or rsol.objective_value < -1e-4):
        return None
    d = np.zeros(m)
    for v in rest:
        d[v] = rsol.variable_values[col[v]]
    d[vstar] = (1.0 - sum(gmax[v] * d[v] for v in rest)) / cs
    dscale = max(1.0, np.abs(d).max())
    for v in range(m):
        if problem.signs[v] == "nonneg":
            if d[v] < -1e-7 * dscale:
                return None
            d[v] = max(d[v], 0.0)
    # re-verify in original coordinates: psd to tolerance on every block,
    # relative to the magnitude of the data entering it
    for blk in problem.blocks:
        R = sum((A * d[v] for v, A in blk.A.items()),
                np.zeros((blk.size, blk.size)))
        R = 0.5 * (R + R.T)
        rscale = max(1.0, np.abs(R).max())
        if np.linalg.eigvalsh(R)[0] < -1e-7 * rscale:
            return None
    if abs(gmax @ d - 1.0) > 1e-6:
        return None
    return d


def _lift_duals(problem: ConicProblem, bases, duals_work):
    """Map work-problem dual blocks back onto the original block list."""
    out = []
    pos = 0
    for bi, blk in enumerate(problem.blocks):
        B = bases[bi]
        if B is not None and B.shape[1] == 0:
            out.append(np.zeros((blk.size, blk.size)))
            continue
        Z = duals_work[pos]
        pos += 1
        if B is not None:
            Z = B @ Z @ B.T
        out.append(0.5 * (Z + Z.T))
    return out


def solve(problem: ConicProblem, opts: SolveOptions | None = None) -> ConicSolution:
    """Solve the problem; status optimal, infeasible, unbounded, or numerical-failure.

    An unbounded result carries a certified improving ray in
    variable_values, re-verified in original coordinates.

    Robustness layers around the core interior-point loop: facial
    reduction presolve, restarts from larger initial scales, a precision
    ladder, and - when path-following still stalls - iterated facial
    reduction driven by auxiliary solves.  A zero optimum of the Slater
    auxiliary yields a primal face cut (the reduced feasible set spans a
    smaller face than the data); a PSD recession direction with constant
    objective yields a dual face cut (the dual optimum is otherwise
    unattained and no certificate exists).  Every deepened solve is
    re-certified against the original problem, so an invalid cut can only
    produce an honest failure, never a wrong optimum.  An optimal status
    is returned only when the from-scratch certificate meets ten times
    the requested tolerances.
    """
    opts = opts or SolveOptions()
    problem.validate()
    m = problem.num_vars
    nb = len(problem.blocks)
    target = 10.0 * min(opts.gap_tol, opts.feas_tol)
    bases: list[np.ndarray | None]
    if opts.presolve:
        bases = _face_bases(problem)
        if all(B is not None and B.shape[1] == 0 for B in bases):
            bases = [None] * nb
    else:
        bases = [None] * nb
    signs = list(problem.signs)
    keep = list(range(m))
    fixed: list[int] = []
    shifts: list[list[np.ndarray]] = []
    gmax = np.asarray(problem.objective, dtype=float)
    if problem.sense == "min":
        gmax = -gmax
    best: ConicSolution | None = None
    last: ConicSolution | None = None
    xpool: list[np.ndarray] = []
    total_iters = 0
    for fr_pass in range(4):
        built = _build_work(problem, bases, signs, keep)
        if built is None:
            break
        work, wmap = built
        lsol = _ladder(work, opts)
        total_iters += lsol.iterations
        x = np.zeros(m)
        x[keep] = lsol.variable_values
        duals = _lift_duals(problem, bases, lsol.dual_matrices)
        # station repair for variables fixed to zero: their dual rows are
        # absent from the work problem, so push any positive adjoint back
        # under zero with the facial-reduction certificate that fixed them
        for cert in shifts:
            need = 0.0
            for v in fixed:
                st = gmax[v] + sum(np.tensordot(blk.A[v], duals[bi])
                                   for bi, blk in enumerate(problem.blocks)
                                   if v in blk.A)
                wv = sum(np.tensordot(blk.A[v], cert[bi])
                         for bi, blk in enumerate(problem.blocks)
                         if v in blk.A)
                if st > 0.0 and wv < -1e-12:
                    need = max(need, st / -wv)
            if need > 0.0:
                duals = [0.5 * (Z + need * C + (Z + need * C).T)
                         for Z, C in zip(duals, cert)]
        sol = _package_solution(problem, None, lsol.status, x, duals,
                                total_iters)
        # the primal side of a stalled direct solve often converges long
        # before the dual does; mix the best primal iterate over all
        # passes with the current (deeper-reduced, certifiable) dual
        if sol.status == "optimal":
            for xc in xpool:
                alt = _package_solution(problem, None, "optimal", xc, duals,
                                        total_iters)
                if alt.max_residual < sol.max_residual:
                    sol = alt
        xpool.append(x)
        last = sol
        if _TRACE:
            print(f"  fr_pass={fr_pass} dims={[b.size for b in work.blocks]}"
                  f" status={sol.status} maxres={sol.max_residual:.3e}"
                  f" obj={sol.objective_value:.6f}")
        if sol.status == "infeasible":
            return sol
        if sol.status == "optimal":
            if best is None or sol.max_residual <= best.max_residual:
                best = sol
            if best.max_residual <= target:
                return best
        if not opts.presolve:
            break
        cut = _primal_face_cut(work, opts)
        if _TRACE and cut is not None:
            print(f"    primal face cut: dims={[None if N is None else N.shape for N in cut['bases']]} fix={cut['fix']}")
        if cut is None:
            cut = _recession_cut(work, opts)
            if _TRACE and cut is not None:
                print(f"    recession cut: dims={[None if N is None else N.shape for N in cut['bases']]} free={cut['free']}")
        if cut is None:
            break
        # the certificate is in work coordinates: lift it with the bases
        # state it was computed under, before composing the new cut
        if cut["cert"] is not None:
            shifts.append(_lift_duals(problem, bases, cut["cert"]))
        for wi, N in enumerate(cut["bases"]):
            if N is None:
                continue
            bi = wmap[wi]
            B = bases[bi]
            bases[bi] = N.copy() if B is None else B @ N
        if cut["fix"]:
            drop = {keep[wj] for wj in cut["fix"]}
            fixed.extend(sorted(drop))
            keep = [v for v in keep if v not in drop]
        for wj in cut["free"]:
            signs[keep[wj]] = "free"
    out = best if best is not None else last
    if out is None:
        out = _package_solution(problem, None, "numerical-failure",
                                np.zeros(m), [np.zeros((blk.size, blk.size))
                                              for blk in problem.blocks], 0)
    if out.status == "optimal" and out.max_residual > target:
        out.status = "numerical-failure"
    if out.status == "numerical-failure":
        ray = _unbounded_ray(problem, opts)
        if ray is not None:
            return ConicSolution(
                status="unbounded",
                objective_value=np.inf if problem.sense == "max" else -np.inf,
                variable_values=ray,
                dual_matrices=[np.zeros((blk.size, blk.size))
                               for blk in problem.blocks],
                reduced_costs=np.zeros(m),
                duality_gap=np.inf,
                max_residual=np.inf,
                iterations=out.iterations,
            )
    return out


def _core_ipm(problem: ConicProblem, opts: SolveOptions, rho: float = 1.0,
              dtype=np.float64):
    """Interior-point loop; returns (status, x, per-block duals, iterations)."""
    inst = _Instance(problem, dtype=dtype)
    nb = len(inst.blocks)
    x = np.zeros(inst.n, dtype=dtype)
    Xs = [rho * np.eye(s, dtype=dtype) for s in inst.sizes]
    Ys = [rho * np.eye(s, dtype=dtype) for s in inst.sizes]
    cmax = max(1.0, max(np.abs(C).max() for C, _ in inst.blocks))
    status = "numerical-failure"
    iters = 0
    best_score = np.inf
    best_x = None
    best_Ys = None
    best_it = 0
    for it in range(1, opts.max_iters + 1):
        iters = it
        # residuals
        P = []
        for bi, (C, A) in enumerate(inst.blocks):
            S = C.copy()
            vs = inst.active[bi]
            if len(vs):
                S += np.tensordot(x[vs], inst.stacks[bi], axes=(0, 0))
            P.append(0.5 * (S + S.T) - Xs[bi])
        dvec = inst.c.copy()
        for bi in range(nb):
            vs = inst.active[bi]
            if len(vs):
                flatA = inst.stacks[bi].reshape(len(vs), -1)
                dvec[vs] -= flatA @ Ys[bi].ravel()
        mu = sum(np.tensordot(Xs[bi], Ys[bi]) for bi in range(nb)) / inst.N
        tau = min(0.99, max(0.95, 1.0 - mu))
        pobj = inst.c @ x
        dobj = -sum(np.tensordot(C, Ys[bi]) for bi, (C, _) in enumerate(inst.blocks))
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        pinf = max(np.abs(P[bi]).max() for bi in range(nb)) / cmax
        dinf = np.abs(dvec).max()
        mu_rel = mu / (1.0 + abs(pobj) + abs(dobj))
        score = max(gap, mu_rel, pinf, dinf)
        if _TRACE:
            print(f"    it={it:4d} mu={mu:9.3e} gap={gap:9.3e} pinf={pinf:9.3e}"
                  f" dinf={dinf:9.3e} pobj={pobj:14.6f} dobj={dobj:14.6f}")
        if score < best_score:
            best_score = score
            best_x = x.copy()
            best_Ys = [Y.copy() for Y in Ys]
            best_it = it
        if (gap <= opts.gap_tol and mu_rel <= opts.gap_tol
                and pinf <= opts.feas_tol and dinf <= opts.feas_tol):
            status = "optimal"
            break
        # Farkas-style infeasibility detector: a large dual iterate that is
        # nearly orthogonal to every A_v while keeping -<C,Y> positive is an
        # improving dual ray, so the primal LMI system is infeasible
        ytr = sum(np.trace(Ys[bi]) for bi in range(nb))
        if ytr > 1e6:
            eqres = np.abs(inst.c - dvec)  # = |<A_v, Y>| per variable
            if eqres.max() / ytr <= 1e-10 and dobj / ytr > 1e-10:
                status = "infeasible"
                break
        # scaling and Schur complement
        try:
            Winvs, Whalfs, Wihalfs, Yinvs = [], [], [], []
            for bi in range(nb):
                Wi, Wh, Wih, Yi = _nt_scaling(Xs[bi], Ys[bi])
                Winvs.append(Wi)
                Whalfs.append(Wh)
                Wihalfs.append(Wih)
                Yinvs.append(Yi)
            M, Bs = _assemble_schur(inst, Winvs)
            ridge = 1e-13 * max(1.0, float(np.trace(M)) / inst.n)
            factor = None
            for _ in range(6):
                try:
                    Mr = M + ridge * np.eye(inst.n, dtype=dtype)
                    L = np.linalg.cholesky(np.asarray(Mr, dtype=np.float64))
                    factor = (L, Mr)
                    break
                except np.linalg.LinAlgError:
                    ridge *= 1e3
            if factor is None:
                break
        except np.linalg.LinAlgError:
            break
        # predictor (affine scaling)
        Rs_aff = [-Xs[bi] for bi in range(nb)]
        dx_a, dXs_a, dYs_a = _solve_newton(inst, factor, Bs, Winvs, P, Rs_aff, dvec, Xs)
        ap = min((_step_to_boundary(Xs[bi], dXs_a[bi]) for bi in range(nb)), default=np.inf)
        ad = min((_step_to_boundary(Ys[bi], dYs_a[bi]) for bi in range(nb)), default=np.inf)
        ap, ad = min(1.0, tau * ap), min(1.0, tau * ad)
        mu_aff = sum(np.tensordot(Xs[bi] + ap * dXs_a[bi], Ys[bi] + ad * dYs_a[bi])
                     for bi in range(nb)) / inst.N
        sigma = min(0.99, max(1e-10, (max(mu_aff, 0.0) / mu) ** 3))
        # anti-cycling: predictor-corrector steps can enter a limit cycle on
        # degenerate instances; when the best score has not improved for a
        # while, interleave pure centering steps (sigma = 1, no second-order
        # term) to pull the iterate back toward the central path
        stall = it - best_it
        center = stall >= 8 and stall % 8 == 0
        if center:
            sigma = 1.0
        # corrector with Mehrotra second-order term
        Rs = [sigma * mu * Yinvs[bi].astype(dtype) - Xs[bi]
              - (0.0 if center else
                 _mehrotra_correction(Xs[bi], Whalfs[bi], Wihalfs[bi],
                                      dXs_a[bi], dYs_a[bi]))
              for bi in range(nb)]
        dx, dXs, dYs = _solve_newton(inst, factor, Bs, Winvs, P, Rs, dvec, Xs)
        if not all(np.all(np.isfinite(D)) for D in dXs + dYs):
            break
        ap = min((_step_to_boundary(Xs[bi], dXs[bi]) for bi in range(nb)), default=np.inf)
        ad = min((_step_to_boundary(Ys[bi], dYs[bi]) for bi in range(nb)), default=np.inf)
        ap, ad = _guarded_steps(Xs, dXs, Ys, dYs,
                                min(1.0, tau * ap), min(1.0, tau * ad), beta=1e-5)
        if ap == 0.0 and ad == 0.0:
            break
        x = x + ap * dx
        for bi in range(nb):
            Xs[bi] = Xs[bi] + ap * dXs[bi]
            Ys[bi] = Ys[bi] + ad * dYs[bi]
    # a stalled run hands back its best iterate so the caller can decide
    # whether the certificate it carries is already good enough
    if status == "numerical-failure" and best_x is not None:
        x, Ys = best_x, best_Ys
    # unscale back to the user problem's conventions
    user_duals = []
    for bi in range(inst.user_block_count):
        d = inst.diag[bi]
        Z = inst.gamma * (d[:, None] * Ys[bi] * d[None, :])
        user_duals.append(np.asarray(0.5 * (Z + Z.T), dtype=np.float64))
    return status, np.asarray(x / inst.nu, dtype=np.float64), user_duals, iters


def check_certificate(problem: ConicProblem, sol: ConicSolution, tol: float = 1e-7) -> dict:
    """Recompute feasibility, complementarity, and gap residuals from scratch.

    Returns a report dict with the individual residuals, the list of
    violations exceeding tol, and ok = no violations.  Feasibility
    residuals are relative to the magnitude of the data entering them;
    gap and complementarity are relative to the duality scale
    1 + |pval| + |dval|, as in the DIMACS error measures.
    """
    if sol.status != "optimal":
        raise ValueError(f"certificate check requires an optimal solution, "
                         f"got status {sol.status!r}")
    x = np.asarray(sol.variable_values, dtype=float)
    g = np.asarray(problem.objective, dtype=float)
    gmax = g if problem.sense == "max" else -g
    residuals: dict[str, float] = {}
    violations: list[str] = []

    def record(name: str, value: float):
        residuals[name] = float(value)
        if not value <= tol:
            violations.append(f"{name} = {value:.3e} exceeds {tol:.1e}")

    dval_max = sum(np.tensordot(blk.C, sol.dual_matrices[bi])
                   for bi, blk in enumerate(problem.blocks))
    pval_max = float(gmax @ x)
    # duality scale: gap and complementarity residuals are both measured
    # against it, in the style of the DIMACS error measures
    dscale = 1.0 + abs(pval_max) + abs(dval_max)
    comp_worst = 0.0
    for bi, blk in enumerate(problem.blocks):
        scale = max(1.0, np.abs(blk.C).max(),
                    max((np.abs(A).max() for A in blk.A.values()), default=0.0))
        S = blk.C + sum(A * x[v] for v, A in blk.A.items())
        w = np.linalg.eigvalsh(S)
        record(f"block{bi}_primal_eigmin", max(0.0, -w[0]) / scale)
        Z = sol.dual_matrices[bi]
        wz = np.linalg.eigvalsh(Z)
        zscale = max(1.0, np.abs(Z).max())
        record(f"block{bi}_dual_eigmin", max(0.0, -wz[0]) / zscale)
        comp_worst = max(comp_worst, abs(np.tensordot(S, Z)) / dscale)
    xscale = max(1.0, np.abs(x).max())
    for v, sign in enumerate(problem.signs):
        if sign == "nonneg":
            record(f"var{v}_sign", max(0.0, -x[v]) / xscale)
    # dual stationarity in max form: <A_v, Z> + gmax_v (=0 free, <=0 nonneg)
    station = gmax.astype(float).copy()
    for bi, blk in enumerate(problem.blocks):
        for v, A in blk.A.items():
            station[v] += np.tensordot(A, sol.dual_matrices[bi])
    gscale = max(1.0, np.abs(gmax).max())
    for v, sign in enumerate(problem.signs):
        if sign == "free":
            record(f"var{v}_dual_eq", abs(station[v]) / gscale)
        else:
            record(f"var{v}_dual_ineq", max(0.0, station[v]) / gscale)
            comp_worst = max(comp_worst, abs(x[v] * station[v]) / dscale)
    record("complementarity", comp_worst)
    record("gap", abs(pval_max - dval_max) / dscale)
    return {
        "ok": not violations,
        "violations": violations,
        "residuals": residuals,
        "max_residual": max(residuals.values()),
    }


def export_sdpa(problem: ConicProblem) -> str:
    """Serialize to SDPA sparse (.dat-s) text.

    Encodes the canonical minimization form: minimize c.x subject to
    sum_v x_v F_v - F0 >= 0 per block, i.e. F_v = A_v and F0 = -C.  A
    maximization problem is exported with c = -objective (noted in the
    header).  Free variables are split as x = xp - xm with both halves
    nonnegative, and every nonnegative variable gets an explicit 1x1
    diagonal sign block, so the entry list is self-describing.  Entries
    are written with 17 significant digits, 1-based upper triangle.
    """
    problem.validate()
    out = io.StringIO()
    names = []
    col_of: list[list[tuple[int, float]]] = []  # var -> [(column, weight)]
    for v, (name, sign) in enumerate(zip(problem.names, problem.signs)):
        if sign == "free":
            col_of.append([(len(names), 1.0), (len(names) + 1, -1.0)])
            names.append(f"{name}+")
            names.append(f"{name}-")
        else:
            col_of.append([(len(names), 1.0)])
            names.append(name)
    nvars = len(names)
    negate = problem.sense == "max"
    out.write('"minimize c.x with sum_v x_v F_v - F0 >= 0 per block; '
              'all exported variables nonnegative via trailing sign blocks\n')
    if negate:
        out.write('"objective negated from a maximization problem\n')
    frees = [problem.names[v] for v, s in enumerate(problem.signs) if s == "free"]
    if frees:
        out.write('"free variables split as x = x+ - x-: ' + " ".join(frees) + "\n")
    out.write('"variables: ' + " ".join(names) + "\n")
    obj = np.zeros(nvars)
    for v, weight_cols in enumerate(col_of):
        coef = problem.objective[v] * (-1.0 if negate else 1.0)
        for col, w in weight_cols:
            obj[col] += coef * w
    sizes = [blk.size for blk in problem.blocks] + [1] * nvars
    out.write(f"{nvars}\n")
    out.write(f"{len(sizes)}\n")
    out.write(" ".join(str(-s) if s == 1 else str(s) for s in sizes) + "\n")
    out.write(" ".join(f"{v:.16e}" for v in obj) + "\n")

    def emit(var: int, block: int, i: int, j: int, value: float):
        if value != 0.0:
            out.write(f"{var} {block} {i} {j} {value:.16e}\n")

    for bi, blk in enumerate(problem.blocks):
        d = blk.size
        F0 = -blk.C
        for i in range(d):
            for j in range(i, d):
                emit(0, bi + 1, i + 1, j + 1, F0[i, j])
        for v, A in sorted(blk.A.items()):
            for col, w in col_of[v]:
                for i in range(d):
                    for j in range(i, d):
                        emit(col + 1, bi + 1, i + 1, j + 1, w * A[i, j])
    base = len(problem.blocks)
    for col in range(nvars):
        emit(col + 1, base + col + 1, 1, 1, 1.0)
    return out.getvalue()


def import_sdpa(text: str) -> ConicProblem:
    """Parse SDPA sparse text back into a minimization ConicProblem.

    Provided for round-trip testing of export_sdpa.  All variables are
    treated as free scalars; sign restrictions present in the data as
    diagonal blocks are preserved as written.
    """
    lines = [ln for ln in text.splitlines()
             if ln.strip() and not ln.lstrip().startswith(('"', "*"))]
    nvars = int(lines[0].split()[0])
    nblocks = int(lines[1].split()[0])
    raw_sizes = lines[2].replace(",", " ").replace("(", " ").replace(")", " ").split()
    sizes = [abs(int(float(tok))) for tok in raw_sizes[:nblocks]]
    obj = [float(tok) for tok in lines[3].replace(",", " ").split()[:nvars]]
    prob = ConicProblem(sense="min", constant=0.0)
    for v in range(nvars):
        prob.add_variable(f"x{v}", "free", obj[v])
    F0s = [np.zeros((s, s)) for s in sizes]
    Fvs: list[dict[int, np.ndarray]] = [dict() for _ in sizes]
    for ln in lines[4:]:
        toks = ln.split()
        v, b, i, j = int(toks[0]), int(toks[1]) - 1, int(toks[2]) - 1, int(toks[3]) - 1
        val = float(toks[4])
        if v == 0:
            F0s[b][i, j] = val
            F0s[b][j, i] = val
        else:
            mat = Fvs[b].setdefault(v - 1, np.zeros((sizes[b], sizes[b])))
            mat[i, j] = val
            mat[j, i] = val
    for b in range(nblocks):
        prob.add_block(-F0s[b], Fvs[b])
    return prob
