"""Aggregated models over a chronological partition and the solution-aggregation map."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canonical import CanonicalProblem
from .clustering import ChronoPartition
from .instance import GepInstance
from .model import (
    CostBreakdown,
    FullSolution,
    PeriodData,
    _terms,
    build_periods_model,
    encode_solution,
)

__all__ = [
    "AggSolution",
    "aggregate_params",
    "build_aggregated",
    "aggregate_solution",
    "aggregated_terms",
    "aggregated_residuals",
]


@dataclass
class AggSolution(FullSolution):
    """Same fields as FullSolution with K periods in place of T (states s_0..s_K)."""


def _check(inst: GepInstance, partition: ChronoPartition):
    if partition.T != inst.T:
        raise ValueError(f"partition covers {partition.T} periods, instance has T={inst.T}")


def _cluster_mean(a, partition):
    a = np.asarray(a, dtype=float)
    sums = np.add.reduceat(a, partition.starts, axis=0)
    sizes = partition.sizes.reshape((-1,) + (1,) * (a.ndim - 1))
    return sums / sizes


def aggregate_params(inst: GepInstance, partition: ChronoPartition) -> PeriodData:
    """Cluster sizes and cluster-mean demand, capacity factors and references."""
    _check(inst, partition)
    return PeriodData(
        weights=partition.sizes.astype(float),
        demand=_cluster_mean(inst.demand, partition),
        cap_factor=_cluster_mean(inst.cap_factor, partition),
        z_ref=_cluster_mean(inst.z_ref, partition),
    )


def build_aggregated(inst: GepInstance, partition: ChronoPartition, kind) -> CanonicalProblem:
    prob = build_periods_model(inst, aggregate_params(inst, partition), kind)
    prob.meta["model"] = "aggregated"
    prob.meta["K"] = partition.K
    return prob


def aggregate_solution(inst: GepInstance, partition: ChronoPartition, z: FullSolution) -> AggSolution:
    """Map a full-scale solution onto the aggregated variable space.

    Investments are copied, states are sampled at cluster starts (plus the
    terminal state), all other operational variables are cluster means.
    """
    _check(inst, partition)
    G, N, T = inst.G, inst.N, inst.T
    shapes = {"x": (G + N,), "b": (G + N,), "p": (T, G), "s": (T + 1, N),
              "p_c": (T, N), "p_d": (T, N), "d_ns": (T,)}
    for name, shape in shapes.items():
        got = np.shape(getattr(z, name))
        if got != shape:
            raise ValueError(f"{name}: shape {got}, expected {shape}")
    s = np.asarray(z.s, dtype=float)
    return AggSolution(
        x=np.array(z.x, dtype=float),
        b=np.array(z.b, dtype=float),
        p=_cluster_mean(z.p, partition),
        s=np.vstack([s[partition.starts], s[-1:]]),
        p_c=_cluster_mean(z.p_c, partition),
        p_d=_cluster_mean(z.p_d, partition),
        d_ns=_cluster_mean(z.d_ns, partition),
    )


def aggregated_terms(inst: GepInstance, partition: ChronoPartition, sol: AggSolution, kind) -> CostBreakdown:
    return _terms(inst, aggregate_params(inst, partition), sol, kind)


def aggregated_residuals(inst: GepInstance, partition: ChronoPartition, sol: AggSolution, kind="milp") -> dict:
    prob = build_aggregated(inst, partition, kind)
    return prob.residuals(encode_solution(prob, sol))
