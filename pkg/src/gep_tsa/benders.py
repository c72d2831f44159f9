"""Classical Benders decomposition baseline.

Master: investments (x, b) with b*x_min <= x <= b*x_max, an epigraph
variable theta >= 0 and one aggregated optimality cut per iteration.
Subproblem: the full operational model at fixed (x, b). Non-supplied
energy gives complete recourse, so feasibility cuts never arise.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bounds import BoundsRecord, BoundsTrace, TraceError, optimality_gap
from .canonical import CanonicalProblem
from .instance import GepInstance
from .model import ModelKind, build_full, decode_solution
from .solve import BnbOptions, solve_convex, solve_mip

__all__ = ["BendersCut", "subproblem_cut", "run_benders"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BendersCut:
    """theta >= constant + coef @ concat(x, b)."""

    constant: float
    coef: np.ndarray  # length 2(G+N); the b part is zero

    def __call__(self, x, b) -> float:
        return self.constant + float(self.coef @ np.concatenate([x, b]))


def _subproblem(inst, x_fixed, b_fixed, kind):
    full = build_full(inst, kind)
    n_inv = inst.G + inst.N
    x_fixed = np.asarray(x_fixed, dtype=float).ravel()
    b_fixed = np.asarray(b_fixed, dtype=float).ravel()
    if x_fixed.shape != (n_inv,) or b_fixed.shape != (n_inv,):
        raise ValueError(f"x_fixed and b_fixed must have length {n_inv}")
    prob = full.fix(np.concatenate([full.var("x"), full.var("b")]), np.concatenate([x_fixed, b_fixed]))
    return prob, x_fixed, b_fixed


def subproblem_cut(inst: GepInstance, x_fixed, b_fixed, kind="milp", return_solution=False):
    """Operational cost at fixed investments and the supporting cut.

    The slope w.r.t. x comes from the multipliers of the two row groups that
    contain x (storage capacity and generation limits); b only enters the
    investment bounds, which are constants here, so its coefficients are 0.
    """
    kind = ModelKind.parse(kind)
    prob, x_fixed, b_fixed = _subproblem(inst, x_fixed, b_fixed, kind)
    res = solve_convex(prob)
    if not res.ok:
        raise RuntimeError(f"operational subproblem: status {res.status.value}")
    value = float(res.fun - inst.c_inv @ x_fixed)
    ix = prob.var("x")
    A = prob.A_ub.tocsc()[:, ix]
    g = np.zeros(len(ix))
    for grp in ("storage_cap", "gen_limit"):
        _, sl = prob.row_groups[grp]
        # d value / d x = sum_rows y_row * a_row,x  (rows read a.x + ... <= 0)
        g += A[sl].T @ res.ub_duals[sl]
    coef = np.concatenate([g, np.zeros(len(ix))])
    cut = BendersCut(value - float(g @ x_fixed), coef)
    if return_solution:
        return value, cut, decode_solution(prob, res.x)
    return value, cut


def _master(inst: GepInstance, cuts) -> CanonicalProblem:
    n_inv = inst.G + inst.N
    n = 2 * n_inv + 1
    c = np.concatenate([inst.c_inv, np.zeros(n_inv), [1.0]])
    I = sp.identity(n_inv, format="csr")
    Z = sp.csr_matrix((n_inv, 1))
    rows = [sp.hstack([-I, sp.diags(inst.x_min), Z]), sp.hstack([I, -sp.diags(inst.x_max), Z])]
    rhs = [np.zeros(n_inv), np.zeros(n_inv)]
    for cut in cuts:
        rows.append(sp.csr_matrix(np.concatenate([cut.coef, [-1.0]])[None, :]))
        rhs.append([-cut.constant])
    A_ub = sp.vstack(rows, format="csr")
    lb = np.zeros(n)
    ub = np.concatenate([np.full(n_inv, np.inf), np.ones(n_inv), [np.inf]])
    integer = np.zeros(n, dtype=bool)
    integer[n_inv:2 * n_inv] = True
    return CanonicalProblem(
        c=c, A_eq=None, b_eq=np.zeros(0), A_ub=A_ub, b_ub=np.concatenate(rhs),
        lb=lb, ub=ub, integer=integer,
        layout={"x": (0, (n_inv,)), "b": (n_inv, (n_inv,)), "theta": (2 * n_inv, ())},
        row_groups={"inv_lower": ("ub", slice(0, n_inv)), "inv_upper": ("ub", slice(n_inv, 2 * n_inv)),
                    "cuts": ("ub", slice(2 * n_inv, 2 * n_inv + len(cuts)))},
        meta={"model": "benders_master", "cuts": len(cuts)},
    )


def run_benders(inst: GepInstance, kind="milp", eps_thr: float = 0.01, max_iter: int = 1000,
                opts: BnbOptions | None = None, callback=None) -> BoundsTrace:
    """Single-cut Benders loop; the trace's K column holds the number of cuts in the master."""
    kind = ModelKind.parse(kind)
    if eps_thr <= 0:
        raise ValueError("eps_thr must be positive")
    n_inv = inst.G + inst.N
    trace = BoundsTrace(method=f"benders-{kind.value}")
    cuts = []
    trace.extra["cuts"] = cuts
    i = 0
    while True:
        t0 = time.perf_counter()
        mres = solve_mip(_master(inst, cuts), opts)
        if not mres.ok:
            raise TraceError(f"master at iteration {i}: status {mres.status.value}", trace)
        x = np.maximum(mres.x[:n_inv], 0.0)
        b = np.round(mres.x[n_inv:2 * n_inv])
        # clean tiny bound drift from the master solve before fixing
        x = np.clip(x, b * inst.x_min, b * inst.x_max)
        lb_cand = float(mres.bound)
        value, cut, z = subproblem_cut(inst, x, b, kind, return_solution=True)
        ub_cand = float(inst.c_inv @ x) + value
        trace.lb = max(trace.lb, lb_cand)
        if ub_cand < trace.ub:
            trace.ub = ub_cand
            trace.solution = z
        gap = optimality_gap(trace.ub, min(trace.lb, trace.ub))
        rec = BoundsRecord(i, len(cuts), lb_cand, ub_cand, trace.lb, trace.ub, gap,
                           1000.0 * (time.perf_counter() - t0))
        trace.records.append(rec)
        log.info("benders %d lb=%.8g ub=%.8g gap=%.3g", i, trace.lb, trace.ub, gap)
        if callback is not None:
            callback(rec)
        if gap <= eps_thr:
            trace.terminated_by = "gap"
            break
        if i + 1 > max_iter:
            trace.terminated_by = "max_iter"
            break
        cuts.append(cut)
        i += 1
    return trace
