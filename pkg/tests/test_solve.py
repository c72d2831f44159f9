import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from conftest import rel_close
from gep_tsa.canonical import CanonicalProblem, QuadCap
from gep_tsa.instance import GenConfig, generate_instance
from gep_tsa.model import build_full, build_metric_model
from gep_tsa.solve import (
    BnbOptions,
    NotConvexError,
    Status,
    dual_objective,
    enumerate_binaries,
    register_backend,
    solve_convex,
    solve_mip,
)


def box_lp(c):
    n = len(c)
    return CanonicalProblem(c=c, A_eq=None, b_eq=[], A_ub=None, b_ub=[], lb=np.zeros(n),
                            ub=np.ones(n), integer=np.zeros(n, bool))


def test_box_lp_positive_cost():
    res = solve_convex(box_lp(np.array([1.0, 2.0, 0.5])))
    assert res.ok and res.fun == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.x, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_projection_onto_hyperplane(n, seed):
    rng = np.random.default_rng(seed)
    r = rng.normal(size=n)
    s = float(rng.normal())
    # min ||z - r||^2 = z'z - 2 r'z + r'r  s.t. sum z = s
    prob = CanonicalProblem(c=-2 * r, A_eq=np.ones((1, n)), b_eq=[s], A_ub=None, b_ub=[],
                            lb=np.full(n, -np.inf), ub=np.full(n, np.inf), integer=np.zeros(n, bool),
                            P=2 * sp.identity(n), const=float(r @ r))
    res = solve_convex(prob)
    expected = r + (s - r.sum()) / n
    assert np.allclose(res.x, expected, atol=1e-7)
    assert res.fun == pytest.approx(n * ((s - r.sum()) / n) ** 2, abs=1e-7)


def test_infeasible_equality_row():
    prob = CanonicalProblem(c=[1.0], A_eq=sp.csr_matrix((1, 1)), b_eq=[1.0], A_ub=None, b_ub=[],
                            lb=[0.0], ub=[1.0], integer=[False])
    assert solve_convex(prob).status is Status.INFEASIBLE
    prob2 = CanonicalProblem(c=[1.0], A_eq=[[1.0], [1.0]], b_eq=[0.0, 1.0], A_ub=None, b_ub=[],
                             lb=[-5.0], ub=[5.0], integer=[False])
    assert solve_convex(prob2).status is Status.INFEASIBLE


def test_unbounded_lp():
    prob = CanonicalProblem(c=[-1.0], A_eq=None, b_eq=[], A_ub=None, b_ub=[], lb=[0.0],
                            ub=[np.inf], integer=[False])
    assert solve_convex(prob).status is Status.UNBOUNDED


def test_nonconvex_objective_rejected():
    prob = CanonicalProblem(c=[0.0, 0.0], A_eq=None, b_eq=[], A_ub=None, b_ub=[], lb=[-1, -1],
                            ub=[1, 1], integer=[False, False], P=sp.diags([1.0, -1.0]))
    with pytest.raises(NotConvexError):
        solve_convex(prob)


def test_asymmetric_matrix_rejected():
    with pytest.raises(ValueError, match="symmetric"):
        CanonicalProblem(c=[0.0, 0.0], A_eq=None, b_eq=[], A_ub=None, b_ub=[], lb=[0, 0],
                         ub=[1, 1], integer=[False, False], P=np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_quadratic_cap_ball():
    # min c'y s.t. ||y||^2 <= 1  ->  y = -c/||c||
    c = np.array([3.0, -4.0])
    cap = QuadCap(P=2 * sp.identity(2, format="csc"), c=np.zeros(2), const=0.0, rhs=1.0)
    prob = CanonicalProblem(c=c, A_eq=None, b_eq=[], A_ub=None, b_ub=[], lb=[-10, -10], ub=[10, 10],
                            integer=[False, False], quad_cap=cap)
    res = solve_convex(prob)
    assert np.allclose(res.x, -c / 5.0, atol=1e-7)
    assert res.fun == pytest.approx(-5.0, abs=1e-7)
    assert res.cap_dual == pytest.approx(2.5, rel=1e-5)  # c + mu*2y = 0 -> mu = 5/2


def _kkt(prob, res):
    g = prob.c + prob.A_eq.T @ res.eq_duals + prob.A_ub.T @ res.ub_duals - res.lb_duals + res.ubound_duals
    if prob.is_quadratic:
        g = g + prob.P @ res.x
    return float(np.abs(g).max())


@pytest.mark.parametrize("kind", ["milp", "miqp"])
def test_weak_duality_and_stationarity(kind):
    for seed in range(5):
        inst = generate_instance(GenConfig(G=3, N=2, T=12, seed=seed))
        prob = build_full(inst, kind).relax()
        res = solve_convex(prob)
        d = dual_objective(prob, res)
        assert d <= res.fun + 1e-6 * max(1.0, abs(res.fun))
        assert rel_close(d, res.fun, 1e-6)  # strong duality for convex problems
        assert np.all(res.ub_duals >= -1e-9)
        assert _kkt(prob, res) <= 1e-6 * max(1.0, np.abs(prob.c).max())


def test_fixed_variables_recover_reduced_costs(desk_inst):
    prob = build_full(desk_inst, "milp").relax()
    prob = prob.fix(prob.var("b"), np.ones(6))
    res = solve_convex(prob)
    assert _kkt(prob, res) <= 1e-6 * max(1.0, np.abs(prob.c).max())


def test_empty_mask_matches_convex():
    prob = box_lp(np.array([1.0, -1.0]))
    a, b = solve_mip(prob), solve_convex(prob)
    assert a.fun == b.fun and np.array_equal(a.x, b.x)


def knapsack(values, weights, cap):
    n = len(values)
    return CanonicalProblem(c=-np.asarray(values, float), A_eq=None, b_eq=[], A_ub=[weights], b_ub=[cap],
                            lb=np.zeros(n), ub=np.ones(n), integer=np.ones(n, bool))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_knapsack_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    v, w = rng.uniform(1, 10, n), rng.uniform(1, 10, n)
    cap = float(rng.uniform(0.5, w.sum()))
    best = min(-float(v @ np.array(bits)) for bits in itertools.product((0, 1), repeat=n)
               if w @ np.array(bits) <= cap)
    for search in ("best_first", "depth_first"):
        res = solve_mip(knapsack(v, w, cap), BnbOptions(search=search))
        assert res.fun == pytest.approx(best, abs=1e-7)
        lbh, inch = res.info["lb_history"], res.info["incumbent_history"]
        assert all(b >= a - 1e-9 for a, b in zip(lbh, lbh[1:]))
        assert all(b <= a for a, b in zip(inch, inch[1:]))
        assert res.info["root_bound"] <= res.fun + 1e-9


@pytest.mark.parametrize("kind", ["milp", "miqp"])
def test_mip_matches_enumeration(kind):
    rng = np.random.default_rng(11)
    for _ in range(4):
        inst = generate_instance(GenConfig(G=int(rng.integers(1, 4)), N=int(rng.integers(1, 4)),
                                           T=int(rng.integers(2, 13)), seed=int(rng.integers(1000))))
        prob = build_full(inst, kind)
        a, e = solve_mip(prob), enumerate_binaries(prob)
        assert rel_close(a.fun, e.fun, 1e-6)
        assert e.info["restrictions"] == 2 ** (inst.G + inst.N)
        assert solve_convex(prob.relax()).fun <= a.fun + 1e-9 * abs(a.fun)


def test_enumerate_small_cases():
    prob = box_lp(np.array([1.0]))
    res = enumerate_binaries(prob)
    assert res.info["restrictions"] == 1 and res.fun == 0.0
    one = CanonicalProblem(c=[2.0, 1.0], A_eq=None, b_eq=[], A_ub=[[-1.0, -1.0]], b_ub=[-0.5],
                           lb=[0, 0], ub=[1, 1], integer=[True, False])
    res = enumerate_binaries(one)
    assert res.info["restrictions"] == 2 and res.fun == pytest.approx(0.5)
    with pytest.raises(ValueError, match="refusing"):
        enumerate_binaries(knapsack(np.ones(21), np.ones(21), 3.0))


def test_node_limit_reports_iteration_limit():
    rng = np.random.default_rng(4)
    v, w = rng.uniform(1, 10, 12), rng.uniform(1, 10, 12)
    res = solve_mip(knapsack(v, w, 20.0), BnbOptions(node_limit=3))
    assert res.status is Status.ITERATION_LIMIT
    exact = solve_mip(knapsack(v, w, 20.0))
    assert res.bound <= exact.fun + 1e-9
    if res.x is not None:
        assert res.fun >= exact.fun - 1e-9


def test_options_validation():
    with pytest.raises(ValueError):
        BnbOptions(int_tol=0)
    with pytest.raises(ValueError):
        BnbOptions(search="random")
    with pytest.raises(ValueError):
        BnbOptions(node_limit=0)


def test_branching_rules_agree(desk_inst):
    prob = build_full(desk_inst, "milp")
    a = solve_mip(prob, BnbOptions(branching="most_fractional"))
    b = solve_mip(prob, BnbOptions(branching="lowest_index", search="depth_first"))
    assert rel_close(a.fun, b.fun, 1e-8)


def test_deterministic(desk_inst):
    prob = build_full(desk_inst, "miqp")
    a, b = solve_mip(prob), solve_mip(prob)
    assert a.fun == b.fun and np.array_equal(a.x, b.x)


def test_warm_start_forms(desk_inst):
    prob = build_full(desk_inst, "milp")
    ref = solve_mip(prob)
    assert rel_close(solve_mip(prob, warm_start=ref.x).fun, ref.fun, 1e-9)
    assert rel_close(solve_mip(prob, warm_start=ref.x[prob.var("b")]).fun, ref.fun, 1e-9)
    with pytest.raises(ValueError, match="warm_start"):
        solve_mip(prob, warm_start=np.ones(3))


def test_highs_backend_and_custom_backend(desk_inst, monkeypatch):
    prob = build_full(desk_inst, "milp")
    ref = solve_mip(prob)
    h = solve_mip(prob, BnbOptions(backend="highs"))
    assert rel_close(h.fun, ref.fun, 1e-7)
    calls = []

    def fake(problem, opts, warm_start=None):
        calls.append(problem.n)
        return ref

    register_backend("fake", fake)
    monkeypatch.setenv("GEP_TSA_MIP_BACKEND", "fake")
    assert solve_mip(prob) is ref and calls == [prob.n]
    monkeypatch.setenv("GEP_TSA_MIP_BACKEND", "nope")
    with pytest.raises(ValueError, match="unknown MIP backend"):
        solve_mip(prob)


def test_rejects_non_binary_integers():
    prob = CanonicalProblem(c=[1.0], A_eq=None, b_eq=[], A_ub=None, b_ub=[], lb=[0.0], ub=[3.0],
                            integer=[True])
    with pytest.raises(ValueError, match="binary"):
        solve_mip(prob)


def test_infeasible_mip():
    prob = CanonicalProblem(c=[1.0, 1.0], A_eq=[[1.0, 1.0]], b_eq=[0.5], A_ub=None, b_ub=[],
                            lb=[0, 0], ub=[1, 1], integer=[True, True])
    assert solve_mip(prob).status is Status.INFEASIBLE


@pytest.mark.parametrize("kind", ["milp", "miqp"])
def test_search_continues_without_incumbent(kind):
    # min generator capacity under a cost cap: the rounded root point is infeasible,
    # so the search has to branch before any incumbent exists
    inst = generate_instance(GenConfig(G=3, N=2, T=24, seed=1, demand_base_per_unit=0.15))
    c_inv = inst.c_inv.copy()
    c_inv[inst.G:] = 200.0
    inst = inst.replace(c_inv=c_inv)
    J = solve_mip(build_full(inst, kind)).fun
    coef = np.zeros(build_full(inst, kind).n)
    coef[build_full(inst, kind).var("x")[1]] = 1.0
    prob = build_metric_model(inst, coef, "min", J * (1 + 1e-9), kind)
    res = solve_mip(prob)
    assert res.ok
    assert res.fun == pytest.approx(enumerate_binaries(prob).fun, abs=1e-6)
