"""Convex relaxation oracle, branch-and-bound over binaries, and an enumeration oracle.

Dual sign convention (all convex solves): with multipliers ``eq_duals`` (free),
``ub_duals`` (>= 0, one per <= row), ``lb_duals``/``ubound_duals`` (>= 0, one
per variable bound) and ``cap_dual`` (>= 0) the stationarity condition is

    P y + c + A_eq' eq_duals + A_ub' ub_duals - lb_duals + ubound_duals
        + cap_dual * (Pq y + cq) = 0

so d(optimal value)/d(b_eq) = -eq_duals and d(optimal value)/d(b_ub) = -ub_duals.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import os
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .canonical import CanonicalProblem

log = logging.getLogger(__name__)

__all__ = [
    "Status",
    "SolveResult",
    "BnbOptions",
    "SolverError",
    "NotConvexError",
    "solve_convex",
    "solve_mip",
    "enumerate_binaries",
    "dual_objective",
    "register_backend",
]

FEAS_TOL = 1e-6


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    ERROR = "error"


class SolverError(RuntimeError):
    """The convex oracle failed in a way that is not a clean status."""


class NotConvexError(ValueError):
    """Objective or cap matrix is not positive semidefinite."""


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray | None = None
    fun: float = np.nan
    eq_duals: np.ndarray | None = None
    ub_duals: np.ndarray | None = None
    lb_duals: np.ndarray | None = None
    ubound_duals: np.ndarray | None = None
    cap_dual: float | None = None
    mip_gap: float | None = None
    bound: float = np.nan
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class BnbOptions:
    int_tol: float = 1e-6
    rel_gap: float = 1e-8
    node_limit: int = 200_000
    branching: str = "most_fractional"  # or "lowest_index"
    search: str = "best_first"  # or "depth_first"
    feas_tol: float = FEAS_TOL
    backend: str | None = None  # None -> $GEP_TSA_MIP_BACKEND or "bnb"

    def __post_init__(self):
        if self.int_tol <= 0 or self.rel_gap <= 0 or self.feas_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.branching not in ("most_fractional", "lowest_index"):
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.search not in ("best_first", "depth_first"):
            raise ValueError(f"unknown search strategy {self.search!r}")
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")


# ---------------------------------------------------------------------------
# convex oracle
# ---------------------------------------------------------------------------

_CLARABEL_TOL = 1e-10


def _check_psd(P, factor, what):
    if P is None or P.nnz == 0 or factor is not None:
        return
    n = P.shape[0]
    if n <= 3000:
        w = np.linalg.eigvalsh(P.toarray())
        lam_min = w[0]
    else:
        from scipy.sparse.linalg import eigsh
        lam_min = eigsh(P, k=1, which="SA", return_eigenvectors=False)[0]
    scale = max(1.0, abs(P).max())
    if lam_min < -1e-9 * scale:
        raise NotConvexError(f"{what} is not positive semidefinite (min eigenvalue {lam_min:.3g})")


def _factor(P):
    """L with P = L'L for a small PSD matrix."""
    w, V = np.linalg.eigh(P.toarray())
    w = np.clip(w, 0.0, None)
    keep = w > 1e-14 * max(1.0, w.max(initial=0.0))
    return sp.csr_matrix((V[:, keep] * np.sqrt(w[keep])).T)


@dataclass
class _Reduced:
    free: np.ndarray
    fixed: np.ndarray
    v: np.ndarray
    c: np.ndarray
    const: float
    P: sp.csc_matrix | None
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    eq_rows: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    ub_rows: np.ndarray
    cap: tuple | None  # (L_free, l0, c_free, const, rhs)
    infeasible: bool


def _reduce(prob: CanonicalProblem) -> _Reduced:
    """Substitute variables with lb == ub and drop rows left without free columns."""
    fixed_mask = prob.lb == prob.ub
    free = np.flatnonzero(~fixed_mask)
    fixed = np.flatnonzero(fixed_mask)
    v = prob.lb[fixed]
    c = prob.c[free].copy()
    const = prob.const + float(prob.c[fixed] @ v)
    P = None
    if prob.is_quadratic:
        Pc = prob.P.tocsc()
        P = Pc[free][:, free].tocsc()
        if fixed.size:
            Pfx = Pc[free][:, fixed]
            c += Pfx @ v
            const += 0.5 * float(v @ (Pc[fixed][:, fixed] @ v))
    infeasible = False

    def rows(A, b, kind):
        nonlocal infeasible
        A = A.tocsc()
        Af = A[:, free].tocsr()
        rhs = b - (A[:, fixed] @ v if fixed.size else 0.0)
        nnz = np.diff(Af.indptr)
        keep = np.flatnonzero(nnz > 0)
        empty = np.flatnonzero(nnz == 0)
        if empty.size:
            tol = FEAS_TOL * 1e-2 * np.maximum(1.0, np.abs(b[empty]))
            bad = np.abs(rhs[empty]) > tol if kind == "eq" else rhs[empty] < -tol
            infeasible |= bool(np.any(bad))
        return Af[keep], rhs[keep], keep

    A_eq, b_eq, eq_rows = rows(prob.A_eq, prob.b_eq, "eq")
    A_ub, b_ub, ub_rows = rows(prob.A_ub, prob.b_ub, "ub")
    cap = None
    if prob.quad_cap is not None:
        qc = prob.quad_cap
        L = qc.factor
        if L is None and qc.P is not None and qc.P.nnz:
            L = _factor(qc.P)
        if L is None:
            L = sp.csr_matrix((0, prob.n))
        L = sp.csc_matrix(L)
        l0 = L[:, fixed] @ v if fixed.size else np.zeros(L.shape[0])
        cap = (L[:, free].tocsr(), l0, qc.c[free], qc.const + float(qc.c[fixed] @ v), qc.rhs)
    return _Reduced(free, fixed, v, c, const, P, A_eq, b_eq, eq_rows, A_ub, b_ub, ub_rows, cap, infeasible)


def _solve_lp(red: _Reduced, lb, ub):
    n = len(red.c)
    res = linprog(
        red.c,
        A_ub=red.A_ub if red.A_ub.shape[0] else None,
        b_ub=red.b_ub if red.A_ub.shape[0] else None,
        A_eq=red.A_eq if red.A_eq.shape[0] else None,
        b_eq=red.b_eq if red.A_eq.shape[0] else None,
        bounds=np.column_stack([lb, ub]) if n else None,
        method="highs",
    )
    if res.status == 2:
        return Status.INFEASIBLE, None
    if res.status == 3:
        return Status.UNBOUNDED, None
    if res.status == 1:
        return Status.ITERATION_LIMIT, None
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    y = res.x
    eq_d = -res.eqlin.marginals if red.A_eq.shape[0] else np.zeros(0)
    ub_d = -res.ineqlin.marginals if red.A_ub.shape[0] else np.zeros(0)
    lb_d = np.asarray(res.lower.marginals, dtype=float)
    ubd_d = -np.asarray(res.upper.marginals, dtype=float)
    return Status.OPTIMAL, (y, eq_d, ub_d, lb_d, ubd_d, None)


def _solve_conic(red: _Reduced, lb, ub):
    import clarabel

    n = len(red.c)
    blocks, rhs, cones = [], [], []
    m_eq = red.A_eq.shape[0]
    if m_eq:
        blocks.append(red.A_eq)
        rhs.append(red.b_eq)
        cones.append(clarabel.ZeroConeT(m_eq))
    lbi = np.flatnonzero(np.isfinite(lb))
    ubi = np.flatnonzero(np.isfinite(ub))
    m_ub = red.A_ub.shape[0]
    I = sp.identity(n, format="csr")
    nonneg = [red.A_ub, -I[lbi], I[ubi]]
    m_nn = m_ub + lbi.size + ubi.size
    if m_nn:
        blocks.append(sp.vstack(nonneg, format="csr"))
        rhs.append(np.concatenate([red.b_ub, -lb[lbi], ub[ubi]]))
        cones.append(clarabel.NonnegativeConeT(m_nn))
    if red.cap is not None:
        L, l0, cq, dq, rq = red.cap
        s2 = np.sqrt(2.0)
        cq_row = sp.csr_matrix(cq.reshape(1, -1) / s2)
        sigma0 = rq - dq
        # ||(L y + l0, (sigma-1)/sqrt2)|| <= (sigma+1)/sqrt2 with sigma = rq - dq - cq'y
        blocks.append(sp.vstack([cq_row, cq_row, -L], format="csr"))
        rhs.append(np.concatenate([[(sigma0 + 1.0) / s2, (sigma0 - 1.0) / s2], l0]))
        cones.append(clarabel.SecondOrderConeT(L.shape[0] + 2))
    A = sp.vstack(blocks, format="csc") if blocks else sp.csc_matrix((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    P = sp.triu(red.P).tocsc() if red.P is not None else sp.csc_matrix((n, n))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = _CLARABEL_TOL
    settings.tol_gap_rel = _CLARABEL_TOL
    settings.tol_feas = 1e-9
    settings.max_iter = 400
    solver = clarabel.DefaultSolver(P, red.c, A, b, cones, settings)
    sol = solver.solve()
    st = str(sol.status)
    if st.endswith("PrimalInfeasible") or st.endswith("AlmostPrimalInfeasible"):
        return Status.INFEASIBLE, None
    if st.endswith("DualInfeasible") or st.endswith("AlmostDualInfeasible"):
        return Status.UNBOUNDED, None
    if st.endswith("MaxIterations") or st.endswith("MaxTime"):
        return Status.ITERATION_LIMIT, None
    if not (st.endswith("Solved")):
        raise SolverError(f"Clarabel failed: {st}")
    y = np.asarray(sol.x)
    z = np.asarray(sol.z)
    eq_d = z[:m_eq]
    nn = z[m_eq:m_eq + m_nn]
    ub_d = nn[:m_ub]
    lb_d = np.zeros(n)
    ubd_d = np.zeros(n)
    lb_d[lbi] = nn[m_ub:m_ub + lbi.size]
    ubd_d[ubi] = nn[m_ub + lbi.size:]
    cap_d = None
    if red.cap is not None:
        zs = z[m_eq + m_nn:]
        cap_d = float((zs[0] + zs[1]) / np.sqrt(2.0))
    return Status.OPTIMAL, (y, eq_d, ub_d, lb_d, ubd_d, cap_d)


def _solve_tight_cap(problem: CanonicalProblem) -> SolveResult:
    """Interior-point fallback when a quadratic cap leaves (almost) no interior.

    Minimize the capped function itself first. Above the cap by more than the
    feasibility tolerance means infeasible; otherwise the cap is loosened to that
    minimum plus the tolerance and the problem is solved once more.
    """
    qc = problem.quad_cap
    phase = replace(problem, c=qc.c, P=qc.P, P_factor=qc.factor, const=qc.const, quad_cap=None)
    r = solve_convex(phase)
    if r.status is not Status.OPTIMAL:
        return SolveResult(r.status)
    tol = FEAS_TOL * max(1.0, abs(qc.rhs))
    if r.fun > qc.rhs + tol:
        return SolveResult(Status.INFEASIBLE)
    slack = 1e-8 * max(1.0, abs(qc.rhs))
    log.debug("quadratic cap within %.3g of its minimum; loosening by %.3g", qc.rhs - r.fun, slack)
    loosened = replace(problem, quad_cap=replace(qc, rhs=max(qc.rhs, r.fun) + slack),
                       meta=dict(problem.meta, cap_loosened=slack))
    res = solve_convex(loosened)
    res.info["cap_loosened"] = slack
    return res


def solve_convex(problem: CanonicalProblem) -> SolveResult:
    """Solve the continuous relaxation of ``problem`` (integrality marks ignored).

    LPs go to HiGHS (simplex, vertex duals); QPs and problems with a quadratic
    cap go to the Clarabel interior-point conic solver.
    """
    _check_psd(problem.P, problem.P_factor, "objective matrix")
    if problem.quad_cap is not None:
        _check_psd(problem.quad_cap.P, problem.quad_cap.factor, "cap matrix")
    red = _reduce(problem)
    n = problem.n
    if red.infeasible:
        return SolveResult(Status.INFEASIBLE)
    lb = problem.lb[red.free]
    ub = problem.ub[red.free]
    if red.free.size == 0:
        y = np.zeros(n)
        y[red.fixed] = red.v
        if problem.max_violation(y, include_integrality=False) > FEAS_TOL:
            return SolveResult(Status.INFEASIBLE)
        out = (np.zeros(0), np.zeros(red.A_eq.shape[0]), np.zeros(red.A_ub.shape[0]),
               np.zeros(0), np.zeros(0), 0.0 if red.cap is not None else None)
        status = Status.OPTIMAL
    elif red.P is None and red.cap is None:
        status, out = _solve_lp(red, lb, ub)
    else:
        try:
            status, out = _solve_conic(red, lb, ub)
        except SolverError:
            if problem.quad_cap is None or "cap_loosened" in problem.meta:
                raise
            return _solve_tight_cap(problem)
    if status is not Status.OPTIMAL:
        return SolveResult(status)
    yf, eq_r, ub_r, lb_r, ubd_r, cap_d = out
    y = np.zeros(n)
    y[red.free] = yf
    y[red.fixed] = red.v
    eq_d = np.zeros(problem.A_eq.shape[0])
    eq_d[red.eq_rows] = eq_r
    ub_d = np.zeros(problem.A_ub.shape[0])
    ub_d[red.ub_rows] = ub_r
    lb_d = np.zeros(n)
    ubd_d = np.zeros(n)
    lb_d[red.free] = lb_r
    ubd_d[red.free] = ubd_r
    if red.fixed.size:
        # reduced costs of substituted variables from stationarity
        g = problem.c + problem.A_eq.T @ eq_d + problem.A_ub.T @ ub_d
        if problem.is_quadratic:
            g = g + problem.P @ y
        if problem.quad_cap is not None and cap_d:
            qc = problem.quad_cap
            gq = qc.c + (qc.P @ y if qc.P is not None else 0.0)
            g = g + cap_d * gq
        gf = g[red.fixed]
        lb_d[red.fixed] = np.maximum(gf, 0.0)
        ubd_d[red.fixed] = np.maximum(-gf, 0.0)
    return SolveResult(
        Status.OPTIMAL, x=y, fun=problem.objective(y), eq_duals=eq_d, ub_duals=ub_d,
        lb_duals=lb_d, ubound_duals=ubd_d, cap_dual=cap_d, bound=problem.objective(y),
    )


def dual_objective(problem: CanonicalProblem, res: SolveResult) -> float:
    """Lagrangian dual value at the returned multipliers (problems without a cap)."""
    if problem.quad_cap is not None:
        raise ValueError("dual objective not implemented for capped problems")
    y = res.x
    v = problem.const - float(problem.b_eq @ res.eq_duals) - float(problem.b_ub @ res.ub_duals)
    fin_l = np.isfinite(problem.lb)
    fin_u = np.isfinite(problem.ub)
    v += float(problem.lb[fin_l] @ res.lb_duals[fin_l]) - float(problem.ub[fin_u] @ res.ubound_duals[fin_u])
    if problem.is_quadratic:
        v -= 0.5 * float(y @ (problem.P @ y))
    return v


# ---------------------------------------------------------------------------
# branch and bound
# ---------------------------------------------------------------------------

_BACKENDS = {}


def register_backend(name: str, fn) -> None:
    """Register an external mixed-integer solver ``fn(problem, opts, warm_start) -> SolveResult``."""
    _BACKENDS[name] = fn


def _complete_integral(problem, A_ub_c, A_eq_c, y, ints, opts):
    """Return y with binaries set to 0/1 and all other entries unchanged, if feasible."""
    z = y.copy()
    vals = z[ints]
    frac = ints[np.abs(vals - np.round(vals)) > opts.int_tol]
    z[ints] = np.clip(np.round(vals), 0.0, 1.0)
    for j in frac:
        cj = problem.c[j]
        if cj > 0:
            order = (0.0, 1.0)
        elif cj < 0:
            order = (1.0, 0.0)
        else:
            order = (1.0, 0.0) if y[j] >= 0.5 else (0.0, 1.0)
        ub_rows = A_ub_c.indices[A_ub_c.indptr[j]:A_ub_c.indptr[j + 1]]
        eq_rows = A_eq_c.indices[A_eq_c.indptr[j]:A_eq_c.indptr[j + 1]]
        for v in order:
            z[j] = v
            ok = True
            if ub_rows.size:
                ok = np.all(problem.A_ub[ub_rows] @ z - problem.b_ub[ub_rows] <= opts.feas_tol)
            if ok and eq_rows.size:
                ok = np.all(np.abs(problem.A_eq[eq_rows] @ z - problem.b_eq[eq_rows]) <= opts.feas_tol)
            if ok:
                break
        else:
            return None
    if problem.max_violation(z) > opts.feas_tol:
        return None
    return z


def _gap(ub, lb):
    if not np.isfinite(ub):
        return np.inf
    return max(0.0, ub - lb) / max(1.0, abs(ub))


def _pick_branch(y, ints, opts, lo, hi):
    vals = y[ints]
    frac = np.abs(vals - np.round(vals))
    cand = np.flatnonzero(frac > opts.int_tol)
    if cand.size == 0:
        # integral within tolerance yet not completable: split on any binary still free
        cand = np.flatnonzero(lo[ints] < hi[ints])
        if cand.size == 0:
            return None
    if opts.branching == "lowest_index":
        return ints[cand[0]]
    score = np.minimum(vals[cand] - np.floor(vals[cand]), np.ceil(vals[cand]) - vals[cand])
    return ints[cand[int(np.argmax(score))]]  # argmax keeps the lowest index on ties


def solve_mip(problem: CanonicalProblem, opts: BnbOptions | None = None, warm_start=None) -> SolveResult:
    """Branch-and-bound over the binary variables with convex node relaxations.

    ``warm_start`` may be a full primal vector or a vector of binary values
    (one per integer variable); it only seeds the incumbent. Nodes whose
    relaxed point becomes feasible after snapping its binaries to 0/1 are
    closed without branching.
    """
    opts = opts or BnbOptions()
    backend = opts.backend or os.environ.get("GEP_TSA_MIP_BACKEND", "bnb")
    if backend != "bnb":
        if backend not in _BACKENDS:
            raise ValueError(f"unknown MIP backend {backend!r}")
        return _BACKENDS[backend](problem, opts, warm_start)

    ints = np.flatnonzero(problem.integer)
    if ints.size == 0:
        res = solve_convex(problem)
        if res.ok:
            res.mip_gap = 0.0
        return res
    if np.any(problem.lb[ints] < 0) or np.any(problem.ub[ints] > 1):
        raise ValueError("integrality mask must cover binary (0/1-bounded) variables only")

    relaxed = problem.relax()
    A_ub_c = problem.A_ub.tocsc()
    A_eq_c = problem.A_eq.tocsc()
    # no incumbent yet means no pruning tolerance (inf - inf would be nan)
    tol_of = lambda ub: opts.rel_gap * max(1.0, abs(ub)) if np.isfinite(ub) else 0.0  # noqa: E731

    inc_y, inc_val = None, np.inf
    lb_hist, inc_hist = [], []
    nodes = 0

    def offer(z, source):
        nonlocal inc_y, inc_val
        val = problem.objective(z)
        if val < inc_val - 1e-12 * max(1.0, abs(val)):
            inc_y, inc_val = z, val
            inc_hist.append(val)
            log.debug("incumbent %.10g from %s", val, source)

    def solve_restriction(bvals, source):
        nonlocal nodes
        r = solve_convex(relaxed.fix(ints, bvals))
        nodes += 1
        if r.ok:
            z = r.x.copy()
            z[ints] = bvals
            if problem.max_violation(z) <= opts.feas_tol:
                offer(z, source)

    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=float)
        if ws.shape == (problem.n,):
            if problem.max_violation(ws) <= opts.feas_tol:
                offer(ws.copy(), "warm start")
        elif ws.shape == (ints.size,):
            solve_restriction(np.round(ws), "warm binaries")
        else:
            raise ValueError(f"warm_start has length {ws.size}; expected {problem.n} or {ints.size}")

    root = solve_convex(relaxed)
    nodes += 1
    if root.status is Status.INFEASIBLE:
        return SolveResult(Status.INFEASIBLE, info={"nodes": nodes})
    if not root.ok:
        return SolveResult(root.status, info={"nodes": nodes})
    root_bound = root.fun

    counter = itertools.count()
    open_nodes = []  # heap (best-first) or stack (depth-first)

    def consider(res, parent_bound, lo, hi):
        """Record a solved node; return True when it must be explored further."""
        bound = max(res.fun, parent_bound)
        if bound >= inc_val - tol_of(inc_val):
            return False
        z = _complete_integral(problem, A_ub_c, A_eq_c, res.x, ints, opts)
        if z is not None:
            offer(z, f"node {nodes}")
            if problem.objective(z) <= bound + tol_of(bound):
                return False
        item = (bound, next(counter), lo, hi, res.x)
        if opts.search == "best_first":
            heapq.heappush(open_nodes, item)
        else:
            open_nodes.append(item)
        return True

    explore_root = consider(root, -np.inf, relaxed.lb.copy(), relaxed.ub.copy())
    if explore_root and inc_y is None:
        # initial incumbent from rounding the root relaxation
        solve_restriction(np.clip(np.round(root.x[ints]), 0, 1), "root rounding")

    status = Status.OPTIMAL
    best_bound = root_bound
    final_bound = None
    while open_nodes:
        if opts.search == "best_first":
            cur_bound = open_nodes[0][0]
        else:
            cur_bound = min(item[0] for item in open_nodes)
        best_bound = max(best_bound, min(cur_bound, inc_val))
        lb_hist.append(best_bound)
        if np.isfinite(inc_val) and inc_val - cur_bound <= tol_of(inc_val):
            final_bound = best_bound
            open_nodes.clear()
            break
        if nodes >= opts.node_limit:
            status = Status.ITERATION_LIMIT
            final_bound = best_bound
            break
        item = heapq.heappop(open_nodes) if opts.search == "best_first" else open_nodes.pop()
        bound, _, lo, hi, y = item
        if bound >= inc_val - tol_of(inc_val):
            continue
        j = _pick_branch(y, ints, opts, lo, hi)
        if j is None:
            solve_restriction(lo[ints], "leaf")
            continue
        for v in (0.0, 1.0):
            clo, chi = lo.copy(), hi.copy()
            clo[j] = chi[j] = v
            res = solve_convex(relaxed.with_bounds(clo, chi))
            nodes += 1
            if res.status is Status.INFEASIBLE:
                continue
            if not res.ok:
                raise SolverError(f"node relaxation ended with status {res.status.value}")
            consider(res, bound, clo, chi)

    if inc_y is None:
        if status is Status.OPTIMAL:
            return SolveResult(Status.INFEASIBLE, info={"nodes": nodes})
        return SolveResult(status, bound=best_bound, info={"nodes": nodes})
    if final_bound is None:
        # tree exhausted: the incumbent is proven optimal
        final_bound = inc_val
    lb_hist.append(max(best_bound, final_bound) if status is Status.OPTIMAL else final_bound)
    return SolveResult(
        status, x=inc_y, fun=inc_val, bound=final_bound, mip_gap=_gap(inc_val, final_bound),
        info={"nodes": nodes, "root_bound": root_bound, "lb_history": lb_hist,
              "incumbent_history": inc_hist},
    )


def enumerate_binaries(problem: CanonicalProblem, max_binaries: int = 20) -> SolveResult:
    """Solve the convex restriction for every 0/1 assignment; return the best."""
    ints = np.flatnonzero(problem.integer)
    if ints.size > max_binaries:
        raise ValueError(f"refusing to enumerate 2^{ints.size} assignments (limit 2^{max_binaries})")
    relaxed = problem.relax()
    best = SolveResult(Status.INFEASIBLE)
    count = 0
    for bits in itertools.product((0.0, 1.0), repeat=ints.size):
        bvals = np.array(bits)
        res = solve_convex(relaxed.fix(ints, bvals) if ints.size else relaxed)
        count += 1
        if res.ok and (not best.ok or res.fun < best.fun):
            best = res
    best.info["restrictions"] = count
    if best.ok:
        best.mip_gap = 0.0
        best.bound = best.fun
    return best


def _highs_milp(problem: CanonicalProblem, opts: BnbOptions, warm_start=None) -> SolveResult:
    """Adapter to SciPy's HiGHS MILP solver (linear problems only)."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    if problem.is_quadratic or problem.quad_cap is not None:
        raise ValueError("the 'highs' backend handles linear problems only")
    cons = []
    if problem.A_eq.shape[0]:
        cons.append(LinearConstraint(problem.A_eq, problem.b_eq, problem.b_eq))
    if problem.A_ub.shape[0]:
        cons.append(LinearConstraint(problem.A_ub, -np.inf, problem.b_ub))
    res = milp(problem.c, constraints=cons, integrality=problem.integer.astype(int),
               bounds=Bounds(problem.lb, problem.ub),
               options={"mip_rel_gap": opts.rel_gap})
    if res.status == 2:
        return SolveResult(Status.INFEASIBLE)
    if res.status == 3:
        return SolveResult(Status.UNBOUNDED)
    if res.x is None:
        return SolveResult(Status.ITERATION_LIMIT)
    y = res.x.copy()
    y[problem.integer] = np.round(y[problem.integer])
    return SolveResult(Status.OPTIMAL if res.status == 0 else Status.ITERATION_LIMIT,
                       x=y, fun=problem.objective(y), bound=float(getattr(res, "mip_dual_bound", np.nan)),
                       mip_gap=float(getattr(res, "mip_gap", np.nan)))


register_backend("highs", _highs_milp)
