"""Bounds on stakeholder metrics implied by certified objective bounds.

Given J^LB <= J* <= J^UB, every optimal solution lies in {z feasible : J(z) <= J^UB},
so maximizing/minimizing a linear metric over that set brackets the metric
value of every optimal solution.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundsTrace
from .canonical import CanonicalProblem
from .instance import GepInstance
from .model import (
    FullSolution,
    ModelKind,
    build_metric_model,
    decode_solution,
    objective_terms,
)
from .solve import BnbOptions, Status, solve_convex, solve_mip

__all__ = [
    "MetricSpec",
    "MetricBounds",
    "OneSidedBound",
    "storage_capacity",
    "generator_capacity",
    "investment_cost",
    "non_supplied_energy",
    "metric_by_name",
    "metric_bounds",
    "metric_bounds_relaxed",
    "average_cost_bounds",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricSpec:
    """Linear metric: ``terms`` maps a variable role to a coefficient array shaped like the role
    (or a scalar broadcast over it); ``scale`` sets the tolerance unit used in checks."""

    name: str
    terms: dict
    description: str = ""
    scale: float = 1.0

    def coefficients(self, problem: CanonicalProblem) -> np.ndarray:
        coef = np.zeros(problem.n)
        for role, val in self.terms.items():
            idx = problem.var(role)
            coef[idx] += np.broadcast_to(np.asarray(val, dtype=float), idx.shape)
        if not np.all(np.isfinite(coef)):
            raise ValueError(f"metric {self.name}: non-finite coefficients")
        if not np.any(coef):
            raise ValueError(f"metric {self.name}: all coefficients are zero")
        return coef

    def value(self, problem: CanonicalProblem, y) -> float:
        return float(self.coefficients(problem) @ y)

    def evaluate(self, inst: GepInstance, sol: FullSolution) -> float:
        role_field = {"x": "x", "b": "b", "p": "p", "s": "s", "pc": "p_c", "pd": "p_d", "dns": "d_ns"}
        v = 0.0
        for role, val in self.terms.items():
            arr = np.asarray(getattr(sol, role_field[role]), dtype=float)
            v += float(np.sum(np.broadcast_to(np.asarray(val, float), arr.shape) * arr))
        return v


def storage_capacity(inst: GepInstance, n: int) -> MetricSpec:
    if not 0 <= n < inst.N:
        raise ValueError(f"storage index {n} out of range for N={inst.N}")
    w = np.zeros(inst.G + inst.N)
    w[inst.G + n] = 1.0
    return MetricSpec(f"storage_capacity_{n}", {"x": w}, f"installed capacity of storage unit {n} (MW)",
                      scale=max(1.0, float(inst.x_max[inst.G + n])))


def generator_capacity(inst: GepInstance, g: int) -> MetricSpec:
    if not 0 <= g < inst.G:
        raise ValueError(f"generator index {g} out of range for G={inst.G}")
    w = np.zeros(inst.G + inst.N)
    w[g] = 1.0
    return MetricSpec(f"generator_capacity_{g}", {"x": w}, f"installed capacity of generator {g} (MW)",
                      scale=max(1.0, float(inst.x_max[g])))


def investment_cost(inst: GepInstance) -> MetricSpec:
    return MetricSpec("investment_cost", {"x": inst.c_inv}, "total investment cost (EUR)",
                      scale=max(1.0, float(inst.c_inv @ inst.x_max)))


def non_supplied_energy(inst: GepInstance) -> MetricSpec:
    return MetricSpec("non_supplied_energy", {"dns": 1.0}, "total non-supplied energy (MWh)",
                      scale=max(1.0, float(np.sum(inst.demand))))


def metric_by_name(inst: GepInstance, name: str) -> MetricSpec:
    """Parse names like ``storage:0``, ``generator:3``, ``investment``, ``dns``."""
    head, _, arg = name.partition(":")
    if head == "storage":
        return storage_capacity(inst, int(arg or 0))
    if head == "generator":
        return generator_capacity(inst, int(arg or 0))
    if head == "investment":
        return investment_cost(inst)
    if head == "dns":
        return non_supplied_energy(inst)
    raise ValueError(f"unknown metric {name!r}; expected storage:<n>, generator:<g>, investment or dns")


@dataclass
class MetricBounds:
    metric: str
    m_lb: float
    m_ub: float
    j_lb: float
    j_ub: float
    sol_min: FullSolution | None = None
    sol_max: FullSolution | None = None
    # the omitted J >= j_lb side, checked on both returned solutions
    lb_side_ok: bool = True
    info: dict = field(default_factory=dict)


@dataclass
class OneSidedBound:
    metric: str
    mode: str
    value: float
    restriction: bool  # True when the value comes from a restricted (fixed-variable) model
    solution: FullSolution | None = None


def _total_cost(inst, sol, kind):
    return objective_terms(inst, sol, kind).total


def metric_bounds(inst: GepInstance, metric: MetricSpec, j_lb: float, j_ub: float, kind="milp",
                  warm: FullSolution | None = None, opts: BnbOptions | None = None) -> MetricBounds:
    kind = ModelKind.parse(kind)
    if j_lb > j_ub + 1e-9 * max(1.0, abs(j_ub)):
        raise ValueError(f"j_lb={j_lb} exceeds j_ub={j_ub}")
    j_lb = min(j_lb, j_ub)  # a converged trace may cross by rounding
    ws = None
    if warm is not None:
        if _total_cost(inst, warm, kind) > j_ub + 1e-6 * max(1.0, abs(j_ub)):
            raise ValueError("warm start violates the cost cap")
        ws = np.asarray(warm.b, dtype=float)
    out = {}
    for sense in ("min", "max"):
        prob = build_metric_model(inst, metric, sense, j_ub, kind)
        res = solve_mip(prob, opts, warm_start=ws)
        if res.status is Status.INFEASIBLE:
            raise ValueError(f"cost cap j_ub={j_ub} is below the minimum feasible cost (infeasible)")
        if not res.ok:
            raise RuntimeError(f"{sense} metric model: status {res.status.value}")
        sol = decode_solution(prob, res.x)
        # the optimization ran on sign*metric; the B&B bound is what certifies the side
        val = prob.meta["sign"] * res.bound + 0.0  # no -0.0 from the sign flip
        out[sense] = (val, sol, res)
    scale = max(1.0, abs(j_lb))
    lb_ok = all(_total_cost(inst, out[s][1], kind) >= j_lb - 1e-6 * scale for s in out)
    if not lb_ok:
        log.warning("a metric-model solution has J below j_lb; j_lb is not a valid lower bound")
    return MetricBounds(
        metric=metric.name, m_lb=out["min"][0], m_ub=out["max"][0], j_lb=float(j_lb), j_ub=float(j_ub),
        sol_min=out["min"][1], sol_max=out["max"][1], lb_side_ok=lb_ok,
        info={"nodes": {s: out[s][2].info.get("nodes") for s in out},
              "achieved": {s: metric.evaluate(inst, out[s][1]) for s in out}},
    )


def metric_bounds_relaxed(inst: GepInstance, metric: MetricSpec, j_ub: float, kind="milp",
                          mode: str = "lp_relax_min", fix_from: FullSolution | None = None) -> OneSidedBound:
    """Cheaper one-sided variants.

    ``lp_relax_min`` drops integrality in the min model: a valid lower bound on M^LB.
    ``fix_vars_max`` fixes b to ``fix_from.b`` in the max model: a restriction, so the
    value is achievable but may fall short of M^UB (flagged via ``restriction``).
    """
    kind = ModelKind.parse(kind)
    if mode == "lp_relax_min":
        prob = build_metric_model(inst, metric, "min", j_ub, kind)
        res = solve_convex(prob.relax())
        restriction = False
    elif mode == "fix_vars_max":
        if fix_from is None:
            raise ValueError("fix_vars_max needs fix_from")
        prob = build_metric_model(inst, metric, "max", j_ub, kind)
        restriction = prob.num_integer > 0
        prob = prob.fix(prob.var("b"), np.round(np.asarray(fix_from.b, dtype=float)))
        res = solve_convex(prob)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'lp_relax_min' or 'fix_vars_max'")
    if res.status is Status.INFEASIBLE:
        raise ValueError(f"cost cap j_ub={j_ub} infeasible in {mode} model")
    if not res.ok:
        raise RuntimeError(f"{mode}: status {res.status.value}")
    return OneSidedBound(metric.name, mode, prob.meta["sign"] * res.fun + 0.0, restriction,
                         decode_solution(prob, res.x))


@dataclass(frozen=True)
class AverageCostBounds:
    T: int
    lb_per_period: float
    ub_per_period: float
    investment_share: float
    investment_per_period: float  # correction term (investment cost)/T
    operational_per_period: float  # operating + shedding + penalty of the UB solution, per period


def average_cost_bounds(trace: BoundsTrace, inst: GepInstance, kind=None) -> AverageCostBounds:
    """Per-period objective bounds; as T grows the investment term vanishes and these
    bracket the long-run average operating cost."""
    if kind is None:
        kind = "miqp" if trace.method.endswith("miqp") else "milp"
    T = inst.T
    if trace.solution is None:
        raise ValueError("trace carries no feasible solution")
    br = objective_terms(inst, trace.solution, kind)
    return AverageCostBounds(
        T=T,
        lb_per_period=trace.lb / T,
        ub_per_period=trace.ub / T,
        investment_share=br.investment_share,
        investment_per_period=br.investment / T,
        operational_per_period=(br.total - br.investment) / T,
    )
