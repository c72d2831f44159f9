"""Command-line front end (``gep-tsa``)."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .aggregation import aggregate_params, build_aggregated
from .benders import run_benders
from .bounds import BoundsTrace, TRACE_COLUMNS, run_tsa_bounds
from .clustering import CLUSTERINGS, make_partition
from .instance import GenConfig, InstanceError, generate_instance, load_instance, save_instance
from .metrics import metric_bounds, metric_by_name
from .model import FullSolution, ModelKind, build_full, decode_solution, objective_terms
from .solve import solve_mip

log = logging.getLogger("gep_tsa")


def _kind(s):
    try:
        return ModelKind.parse(s)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _write_trace(trace: BoundsTrace, path, timing: bool):
    if not timing:
        for r in trace.records:
            r.ms = 0.0
    trace.to_csv(path)
    log.info("wrote %s", path)


def _summary(**kw):
    print(json.dumps(kw, default=float))


def cmd_generate(a):
    cfg = GenConfig(G=a.G, N=a.N, T=a.T, seed=a.seed, delta=a.delta,
                    fraction_thermal=a.fraction_thermal, demand_base_per_unit=a.demand_base)
    inst = generate_instance(cfg)
    save_instance(inst, a.out)
    _summary(out=str(a.out), G=inst.G, N=inst.N, T=inst.T)


def cmd_solve_full(a):
    inst = load_instance(a.instance)
    prob = build_full(inst, a.model)
    t0 = time.perf_counter()
    res = solve_mip(prob)
    if not res.ok:
        raise RuntimeError(f"full model: {res.status.value}")
    sol = decode_solution(prob, res.x)
    br = objective_terms(inst, sol, a.model)
    if a.out:
        Path(a.out).write_text(sol.to_json(objective=res.fun, bound=res.bound, kind=a.model.value))
    _summary(objective=res.fun, bound=res.bound, investment=br.investment,
             nodes=res.info.get("nodes"), seconds=round(time.perf_counter() - t0, 3))


def cmd_solve_agg(a):
    inst = load_instance(a.instance)
    part = make_partition(a.clustering, inst, a.K, np.random.default_rng([a.seed, 0]))
    prob = build_aggregated(inst, part, a.model)
    res = solve_mip(prob)
    if not res.ok:
        raise RuntimeError(f"aggregated model: {res.status.value}")
    if a.out:
        sol = decode_solution(prob, res.x)
        doc = json.loads(sol.to_json(objective=res.fun, kind=a.model.value))
        doc["partition"] = [list(r) for r in part.ranges]
        doc["weights"] = aggregate_params(inst, part).weights.tolist()
        Path(a.out).write_text(json.dumps(doc, indent=1))
    _summary(objective=res.fun, bound=res.bound, K=part.K)


def _tsa(a, inst):
    return run_tsa_bounds(inst, a.model, a.clustering, a.k0, a.rho, a.eps, a.max_iter, a.seed)


def cmd_tsa_bounds(a):
    inst = load_instance(a.instance)
    tr = _tsa(a, inst)
    _write_trace(tr, a.out, a.timing)
    if a.solution_out and tr.solution is not None:
        Path(a.solution_out).write_text(tr.solution.to_json(objective=tr.ub, kind=a.model.value))
    _summary(lb=tr.lb, ub=tr.ub, gap=tr.gap, K_final=tr.K_final, iterations=len(tr.records),
             terminated_by=tr.terminated_by)


def cmd_benders(a):
    inst = load_instance(a.instance)
    tr = run_benders(inst, a.model, a.eps, a.max_iter)
    _write_trace(tr, a.out, a.timing)
    _summary(lb=tr.lb, ub=tr.ub, gap=tr.gap, iterations=len(tr.records), terminated_by=tr.terminated_by)


def cmd_metric_bounds(a):
    inst = load_instance(a.instance)
    rows = [r for r in BoundsTrace.read_csv(a.trace) if "metric" not in r]
    if not rows:
        raise ValueError(f"{a.trace}: no trace rows")
    j_lb, j_ub = rows[-1]["lb"], rows[-1]["ub"]
    warm = None
    if a.solution:
        warm = FullSolution.from_dict(json.loads(Path(a.solution).read_text()))
    metric = metric_by_name(inst, a.metric)
    mb = metric_bounds(inst, metric, j_lb, j_ub, a.model, warm=warm)
    with open(a.out or a.trace, "a") as fh:
        csv.writer(fh, lineterminator="\n").writerow(["metric", metric.name, repr(mb.m_lb), repr(mb.m_ub)])
    _summary(metric=metric.name, mlb=mb.m_lb, mub=mb.m_ub, j_lb=j_lb, j_ub=j_ub, lb_side_ok=mb.lb_side_ok)


def cmd_compare(a):
    inst = load_instance(a.instance)
    tsa = _tsa(a, inst)
    ben = run_benders(inst, a.model, a.eps, a.max_iter)
    if not a.timing:
        for r in tsa.records + ben.records:
            r.ms = 0.0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("method",) + TRACE_COLUMNS)
    for name, tr in (("tsa", tsa), ("benders", ben)):
        for r in tr.records:
            w.writerow([name, r.iter, r.K, repr(r.lb_cand), repr(r.ub_cand), repr(r.lb), repr(r.ub),
                        repr(r.gap), f"{r.ms:.1f}"])
    Path(a.out).write_text(f"# compare {a.model.value}\n" + buf.getvalue())
    _summary(tsa={"lb": tsa.lb, "ub": tsa.ub, "iterations": len(tsa.records)},
             benders={"lb": ben.lb, "ub": ben.ub, "iterations": len(ben.records)})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gep-tsa", description="GEP models with aggregation-based bounds")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance")
    g.add_argument("--G", type=int, required=True)
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--T", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--delta", type=float, default=1.0)
    g.add_argument("--fraction-thermal", type=float, default=0.2)
    g.add_argument("--demand-base", type=float, default=0.5, help="demand per installed unit (MWh)")
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(fn=cmd_generate)

    def common(sp, out_required=True):
        sp.add_argument("--instance", type=Path, required=True)
        sp.add_argument("--model", type=_kind, default=ModelKind.MILP)
        sp.add_argument("--out", type=Path, required=out_required)

    def loop_opts(sp):
        sp.add_argument("--eps", type=float, default=0.01)
        sp.add_argument("--max-iter", type=int, default=1000)
        sp.add_argument("--no-timing", dest="timing", action="store_false",
                        help="write 0 in the ms column (byte-stable output)")

    def tsa_opts(sp):
        sp.add_argument("--clustering", choices=CLUSTERINGS, default="sequential")
        sp.add_argument("--k0", type=int, default=10)
        sp.add_argument("--rho", type=int, default=10)
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve-full", help="solve the full-scale model exactly")
    common(s, out_required=False)
    s.set_defaults(fn=cmd_solve_full)

    s = sub.add_parser("solve-agg", help="solve one aggregated model")
    common(s, out_required=False)
    s.add_argument("--clustering", choices=CLUSTERINGS, default="sequential")
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_solve_agg)

    s = sub.add_parser("tsa-bounds", help="iterative aggregation bounds")
    common(s)
    tsa_opts(s)
    loop_opts(s)
    s.add_argument("--solution-out", type=Path)
    s.set_defaults(fn=cmd_tsa_bounds)

    s = sub.add_parser("benders", help="Benders decomposition baseline")
    common(s)
    loop_opts(s)
    s.set_defaults(fn=cmd_benders)

    s = sub.add_parser("metric-bounds", help="metric bounds from a trace's final objective bounds")
    common(s, out_required=False)
    s.add_argument("--trace", type=Path, required=True)
    s.add_argument("--metric", default="storage:0")
    s.add_argument("--solution", type=Path, help="feasible solution used as warm start")
    s.set_defaults(fn=cmd_metric_bounds)

    s = sub.add_parser("compare", help="run tsa-bounds and benders on one instance")
    common(s)
    tsa_opts(s)
    loop_opts(s)
    s.set_defaults(fn=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(a.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        a.fn(a)
    except (OSError, ValueError, InstanceError, RuntimeError) as e:
        print(f"gep-tsa {a.cmd}: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
