"""Full-scale, restricted and metric-specific GEP models in canonical form.

The same period-indexed builder serves the full-scale model (every period
has weight 1) and the aggregated model (one period per cluster, weighted by
cluster size, with cluster-mean inputs).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .canonical import CanonicalProblem, QuadCap
from .instance import GepInstance

__all__ = [
    "ModelKind",
    "PeriodData",
    "FullSolution",
    "CostBreakdown",
    "build_periods_model",
    "build_full",
    "build_restricted",
    "build_metric_model",
    "decode_solution",
    "encode_solution",
    "objective_terms",
    "full_residuals",
    "variable_count",
]


class ModelKind(str, Enum):
    MILP = "milp"
    MIQP = "miqp"

    @classmethod
    def parse(cls, kind) -> "ModelKind":
        if isinstance(kind, cls):
            return kind
        try:
            return cls(str(kind).lower())
        except ValueError:
            raise ValueError(f"unknown model kind {kind!r}; expected 'milp' or 'miqp'") from None


@dataclass(frozen=True)
class PeriodData:
    """Per-period model inputs: weight (periods represented), demand, capacity factors, references."""

    weights: np.ndarray  # (P,)
    demand: np.ndarray  # (P,)
    cap_factor: np.ndarray  # (P, G)
    z_ref: np.ndarray  # (P, R)

    @property
    def num_periods(self) -> int:
        return len(self.weights)

    @classmethod
    def full(cls, inst: GepInstance) -> "PeriodData":
        return cls(np.ones(inst.T), inst.demand, inst.cap_factor, inst.z_ref)


@dataclass
class FullSolution:
    """Decision vector of the full-scale model (states s_0..s_T)."""

    x: np.ndarray  # (G+N,)
    b: np.ndarray  # (G+N,)
    p: np.ndarray  # (T, G)
    s: np.ndarray  # (T+1, N)
    p_c: np.ndarray  # (T, N)
    p_d: np.ndarray  # (T, N)
    d_ns: np.ndarray  # (T,)

    def copy(self):
        return type(self)(**{f.name: np.array(getattr(self, f.name), copy=True) for f in fields(self)})

    def to_dict(self) -> dict:
        return {f.name: np.asarray(getattr(self, f.name)).tolist() for f in fields(self)}

    def to_json(self, **extra) -> str:
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc, indent=1)

    @classmethod
    def from_dict(cls, doc: dict):
        return cls(**{f.name: np.asarray(doc[f.name], dtype=float) for f in fields(cls)})

    def allclose(self, other, atol=0.0, rtol=0.0) -> bool:
        return all(
            np.shape(getattr(self, f.name)) == np.shape(getattr(other, f.name))
            and np.allclose(getattr(self, f.name), getattr(other, f.name), atol=atol, rtol=rtol)
            for f in fields(self)
        )


@dataclass(frozen=True)
class CostBreakdown:
    investment: float
    operational: float
    non_supplied: float
    quadratic_penalty: float

    @property
    def total(self) -> float:
        return self.investment + self.operational + self.non_supplied + self.quadratic_penalty

    @property
    def investment_share(self) -> float:
        return self.investment / self.total if self.total else 0.0


_ROLES = ("x", "b", "p", "s", "pc", "pd", "dns")


def variable_count(G: int, N: int, P: int) -> int:
    return 2 * (G + N) + P * G + (P + 1) * N + 2 * P * N + P


def _layout(G, N, P):
    shapes = {
        "x": (G + N,),
        "b": (G + N,),
        "p": (P, G),
        "s": (P + 1, N),
        "pc": (P, N),
        "pd": (P, N),
        "dns": (P,),
    }
    layout, off = {}, 0
    for role in _ROLES:
        layout[role] = (off, shapes[role])
        off += int(np.prod(shapes[role]))
    return layout, off


class _Rows:
    """Triplet accumulator for one block of constraint rows."""

    def __init__(self):
        self.r, self.c, self.v, self.rhs, self.groups = [], [], [], [], {}
        self.m = 0

    def add(self, rows, cols, vals):
        rows = np.asarray(rows).ravel()
        cols = np.asarray(cols).ravel()
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        self.r.append(rows + self.m)
        self.c.append(cols)
        self.v.append(vals)

    def block(self, name, nrows, terms, rhs):
        """terms: list of (row_index_array, col_index_array, values)."""
        for rows, cols, vals in terms:
            self.add(rows, cols, vals)
        self.rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (nrows,)).copy())
        self.groups[name] = slice(self.m, self.m + nrows)
        self.m += nrows

    def matrix(self, n):
        if self.r:
            rows = np.concatenate(self.r)
            cols = np.concatenate(self.c)
            vals = np.concatenate(self.v)
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(self.m, n))
        A.sum_duplicates()
        rhs = np.concatenate(self.rhs) if self.rhs else np.zeros(0)
        return A, rhs


def build_periods_model(inst: GepInstance, periods: PeriodData, kind) -> CanonicalProblem:
    """Weighted period model: full-scale when all weights are 1, aggregated otherwise."""
    kind = ModelKind.parse(kind)
    G, N, dt = inst.G, inst.N, inst.delta
    P = periods.num_periods
    w = np.asarray(periods.weights, dtype=float)
    layout, n = _layout(G, N, P)

    def idx(role):
        off, shape = layout[role]
        return off + np.arange(int(np.prod(shape))).reshape(shape)

    ix, ib, ip, is_, ipc, ipd, idns = (idx(r) for r in _ROLES)
    xs = ix[G:]
    xp = ix[:G]

    c = np.zeros(n)
    c[ix] = inst.c_inv
    c[ip] = (w * dt)[:, None] * inst.c_p[None, :]
    c[idns] = w * inst.c_ns

    eq, ub = _Rows(), _Rows()
    kk = np.arange(P)
    # energy balance
    eq.block("balance", P, [
        (np.repeat(kk, G), ip.ravel(), dt),
        (np.repeat(kk, N), ipd.ravel(), dt),
        (np.repeat(kk, N), ipc.ravel(), -dt),
        (kk, idns, 1.0),
    ], periods.demand)
    # storage dynamics s_{k+1} - s_k - w_k dt (eta_c pc_k - eta_d pd_k) = 0
    rk = np.arange(P * N)
    eq.block("dynamics", P * N, [
        (rk, is_[1:].ravel(), 1.0),
        (rk, is_[:-1].ravel(), -1.0),
        (rk, ipc.ravel(), -(w[:, None] * dt * inst.eta_c[None, :]).ravel()),
        (rk, ipd.ravel(), (w[:, None] * dt * inst.eta_d[None, :]).ravel()),
    ], 0.0)
    eq.block("init", N, [(np.arange(N), is_[0], 1.0)], inst.s0)
    # storage capacity on every state, terminal included
    rs = np.arange((P + 1) * N)
    ub.block("storage_cap", (P + 1) * N, [
        (rs, is_.ravel(), 1.0),
        (rs, np.tile(xs, P + 1), -dt),
    ], 0.0)
    rg = np.arange(P * G)
    ub.block("gen_limit", P * G, [
        (rg, ip.ravel(), 1.0),
        (rg, np.tile(xp, P), -np.asarray(periods.cap_factor, dtype=float).ravel()),
    ], 0.0)
    ri = np.arange(G + N)
    ub.block("inv_lower", G + N, [(ri, ib, inst.x_min), (ri, ix, -1.0)], 0.0)
    ub.block("inv_upper", G + N, [(ri, ix, 1.0), (ri, ib, -inst.x_max)], 0.0)

    A_eq, b_eq = eq.matrix(n)
    A_ub, b_ub = ub.matrix(n)

    lb = np.zeros(n)
    ubd = np.full(n, np.inf)
    ubd[ib] = 1.0
    lb[ipc] = inst.p_s_min[None, :N]
    ubd[ipc] = inst.p_s_max[None, :N]
    lb[ipd] = inst.p_s_min[None, N:]
    ubd[ipd] = inst.p_s_max[None, N:]
    integer = np.zeros(n, dtype=bool)
    integer[ib] = True

    P_mat = factor = None
    const = 0.0
    if kind is ModelKind.MIQP and inst.R > 0:
        m = G + 3 * N + 1
        # z_op_k = [p_k, dns_k, s_k, pc_k, pd_k]
        zop = np.concatenate([ip, idns[:, None], is_[:-1], ipc, ipd], axis=1)
        Z = sp.csr_matrix((np.ones(P * m), (np.arange(P * m), zop.ravel())), shape=(P * m, n))
        sw = np.sqrt(w)
        B = sp.kron(sp.diags(sw), sp.csr_matrix(inst.penalty_matrix)) @ Z
        B = sp.csr_matrix(B)
        h = (sw[:, None] * np.asarray(periods.z_ref, dtype=float)).ravel()
        P_mat = sp.csc_matrix(2.0 * (B.T @ B))
        c = c - 2.0 * (B.T @ h)
        const = float(h @ h)
        factor = sp.csr_matrix(np.sqrt(2.0) * B)

    return CanonicalProblem(
        c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, lb=lb, ub=ubd,
        integer=integer, P=P_mat, const=const, P_factor=factor,
        layout=layout,
        row_groups={**{k: ("eq", s) for k, s in eq.groups.items()},
                    **{k: ("ub", s) for k, s in ub.groups.items()}},
        meta={"kind": kind.value, "G": G, "N": N, "periods": P},
    )


def build_full(inst: GepInstance, kind) -> CanonicalProblem:
    prob = build_periods_model(inst, PeriodData.full(inst), kind)
    prob.meta["model"] = "full"
    return prob


def _check_binary(inst, b_fixed):
    b_fixed = np.asarray(b_fixed, dtype=float).ravel()
    if b_fixed.shape != (inst.G + inst.N,):
        raise ValueError(f"b_fixed has length {b_fixed.size}, expected {inst.G + inst.N}")
    if np.any((b_fixed != 0) & (b_fixed != 1)):
        raise ValueError("b_fixed must be a 0/1 vector")
    return b_fixed


def build_restricted(inst: GepInstance, b_fixed, kind) -> CanonicalProblem:
    """Full model with the binaries fixed; convex (no integrality marks remain)."""
    b_fixed = _check_binary(inst, b_fixed)
    full = build_full(inst, kind)
    prob = full.fix(full.var("b"), b_fixed)
    prob.meta["model"] = "restricted"
    return prob


def build_metric_model(inst: GepInstance, metric, sense: str, j_ub: float, kind) -> CanonicalProblem:
    """Optimize a linear metric over the full feasible set capped by J(z) <= j_ub.

    ``metric`` is either a coefficient vector over the full variable vector
    or an object with ``coefficients(problem)``. The cap is a linear row for
    MILP and a convex quadratic inequality for MIQP. A ``sense='max'`` model
    is encoded as minimizing the negated metric (``meta['sign'] = -1``).
    """
    if sense not in ("max", "min"):
        raise ValueError(f"sense must be 'max' or 'min', got {sense!r}")
    if not np.isfinite(j_ub):
        raise ValueError("j_ub must be finite")
    full = build_full(inst, kind)
    coef = metric.coefficients(full) if hasattr(metric, "coefficients") else np.asarray(metric, float)
    if coef.shape != (full.n,):
        raise ValueError(f"metric has {coef.size} coefficients, expected {full.n}")
    sign = -1.0 if sense == "max" else 1.0
    meta = dict(full.meta, model="metric", sense=sense, sign=sign, j_ub=float(j_ub))
    if full.is_quadratic:
        cap = QuadCap(P=full.P, c=full.c, const=full.const, rhs=float(j_ub), factor=full.P_factor)
        return CanonicalProblem(
            c=sign * coef, A_eq=full.A_eq, b_eq=full.b_eq, A_ub=full.A_ub, b_ub=full.b_ub,
            lb=full.lb, ub=full.ub, integer=full.integer, quad_cap=cap,
            layout=full.layout, row_groups=full.row_groups, meta=meta,
        )
    A_ub = sp.vstack([full.A_ub, sp.csr_matrix(full.c)], format="csr")
    b_ub = np.append(full.b_ub, float(j_ub) - full.const)
    groups = dict(full.row_groups)
    groups["cost_cap"] = ("ub", slice(full.A_ub.shape[0], full.A_ub.shape[0] + 1))
    return CanonicalProblem(
        c=sign * coef, A_eq=full.A_eq, b_eq=full.b_eq, A_ub=A_ub, b_ub=b_ub,
        lb=full.lb, ub=full.ub, integer=full.integer,
        layout=full.layout, row_groups=groups, meta=meta,
    )


_FIELD_ROLE = {"x": "x", "b": "b", "p": "p", "s": "s", "p_c": "pc", "p_d": "pd", "d_ns": "dns"}


def decode_solution(problem: CanonicalProblem, y, cls=FullSolution):
    y = np.asarray(y, dtype=float)
    if y.shape != (problem.n,):
        raise ValueError(f"primal vector has length {y.size}, expected {problem.n}")
    return cls(**{f: y[problem.var(role)].copy() for f, role in _FIELD_ROLE.items()})


def encode_solution(problem: CanonicalProblem, sol) -> np.ndarray:
    y = np.zeros(problem.n)
    for f, role in _FIELD_ROLE.items():
        idx = problem.var(role)
        val = np.asarray(getattr(sol, f), dtype=float)
        if val.shape != idx.shape:
            raise ValueError(f"{f}: shape {val.shape}, expected {idx.shape}")
        y[idx] = val
    return y


def _terms(inst, periods: PeriodData, sol, kind) -> CostBreakdown:
    kind = ModelKind.parse(kind)
    w = np.asarray(periods.weights, float)
    inv = float(inst.c_inv @ sol.x)
    op = float(np.sum(w * (sol.p @ inst.c_p)) * inst.delta)
    ns = float(inst.c_ns * np.sum(w * sol.d_ns))
    quad = 0.0
    if kind is ModelKind.MIQP and inst.R > 0:
        zop = np.concatenate([sol.p, sol.d_ns[:, None], sol.s[:-1], sol.p_c, sol.p_d], axis=1)
        dev = zop @ inst.penalty_matrix.T - periods.z_ref
        quad = float(np.sum(w * np.sum(dev * dev, axis=1)))
    return CostBreakdown(inv, op, ns, quad)


def objective_terms(inst: GepInstance, sol: FullSolution, kind) -> CostBreakdown:
    return _terms(inst, PeriodData.full(inst), sol, kind)


def full_residuals(inst: GepInstance, sol: FullSolution, kind="milp") -> dict:
    prob = build_full(inst, kind)
    return prob.residuals(encode_solution(prob, sol))
