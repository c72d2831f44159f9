"""Report-only scaling run: wall times of tsa-bounds, solve-full and benders.

    python scripts/scaling_run.py --G 50 --N 50 --T 2000 --model miqp --out-dir runs/scaling

Writes scaling.csv (method, seconds, status, lb, ub) plus the two bound traces.
No pass/fail threshold; a method that errors is recorded with its message.
"""
from __future__ import annotations

import argparse
import csv
import logging
import time
from pathlib import Path

from gep_tsa.benders import run_benders
from gep_tsa.bounds import run_tsa_bounds
from gep_tsa.instance import GenConfig, generate_instance
from gep_tsa.model import build_full
from gep_tsa.solve import BnbOptions, solve_mip

log = logging.getLogger("scaling")


def _timed(name, fn):
    t0 = time.perf_counter()
    try:
        status, lb, ub, trace = fn()
    except Exception as e:  # report-only: keep going with the other methods
        status, lb, ub, trace = f"error: {e}", float("nan"), float("nan"), None
    row = dict(method=name, seconds=time.perf_counter() - t0, status=status, lb=lb, ub=ub)
    log.info("%s", row)
    return row, trace


def run_scaling(G=50, N=50, T=2000, kind="miqp", seed=0, out_dir=".", k0=10, rho=10, eps=0.01,
                max_iter=100, node_limit=2000):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    inst = generate_instance(GenConfig(G=G, N=N, T=T, seed=seed))
    rows = []

    def tsa():
        tr = run_tsa_bounds(inst, kind, "sequential", k0, rho, eps, max_iter, seed)
        return tr.terminated_by, tr.lb, tr.ub, tr

    def full():
        res = solve_mip(build_full(inst, kind), BnbOptions(node_limit=node_limit))
        return res.status.value, res.bound, res.fun, None

    def benders():
        tr = run_benders(inst, kind, eps, max_iter)
        return tr.terminated_by, tr.lb, tr.ub, tr

    for name, fn in (("tsa-bounds", tsa), ("solve-full", full), ("benders", benders)):
        row, trace = _timed(name, fn)
        rows.append(row)
        if trace is not None:
            trace.to_csv(out_dir / f"{name}_{kind}.csv")
    with open(out_dir / "scaling.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--G", type=int, default=50)
    p.add_argument("--N", type=int, default=50)
    p.add_argument("--T", type=int, default=2000)
    p.add_argument("--model", default="miqp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--node-limit", type=int, default=2000)
    p.add_argument("--out-dir", default="runs/scaling")
    a = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    for r in run_scaling(a.G, a.N, a.T, a.model, a.seed, a.out_dir, max_iter=a.max_iter,
                         node_limit=a.node_limit):
        print(f"{r['method']:>11}  {r['seconds']:9.1f}s  {r['status']}  lb={r['lb']:.6g}  ub={r['ub']:.6g}")


if __name__ == "__main__":
    main()
