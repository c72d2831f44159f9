import numpy as np
import pytest

from conftest import rel_close
from gep_tsa.benders import _master, run_benders, subproblem_cut
from gep_tsa.instance import GenConfig, generate_instance
from gep_tsa.model import build_full, full_residuals
from gep_tsa.solve import solve_mip


def inst_for(seed=3, base=0.2, G=3, N=3, T=36):
    return generate_instance(GenConfig(G=G, N=N, T=T, seed=seed, demand_base_per_unit=base))


def random_investment(inst, rng):
    b = rng.integers(0, 2, inst.G + inst.N).astype(float)
    return b * rng.uniform(inst.x_min, inst.x_max), b


@pytest.mark.parametrize("kind", ["milp", "miqp"])
def test_zero_investment_sheds_all(kind):
    inst = inst_for()
    n = inst.G + inst.N
    v, cut = subproblem_cut(inst, np.zeros(n), np.zeros(n), kind)
    expected = inst.c_ns * inst.demand.sum()
    if kind == "miqp":
        expected += float((inst.z_ref ** 2).sum())
    assert rel_close(v, expected, 1e-9)
    assert rel_close(cut(np.zeros(n), np.zeros(n)), v, 1e-9)


@pytest.mark.parametrize("kind", ["milp", "miqp"])
def test_cut_tight_valid_and_deterministic(kind):
    inst = inst_for()
    rng = np.random.default_rng(0)
    x0, b0 = random_investment(inst, rng)
    v0, cut = subproblem_cut(inst, x0, b0, kind)
    assert abs(cut(x0, b0) - v0) <= 1e-6 * max(1.0, v0)
    assert np.all(cut.coef[inst.G + inst.N:] == 0)
    for _ in range(20):
        x, b = random_investment(inst, rng)
        v, _ = subproblem_cut(inst, x, b, kind)
        assert v >= cut(x, b) - 1e-6 * max(1.0, abs(v))
    v1, cut1 = subproblem_cut(inst, x0, b0, kind)
    assert v1 == v0 and cut1.constant == cut.constant and np.array_equal(cut1.coef, cut.coef)


def test_value_function_convex_in_x_for_miqp():
    inst = inst_for()
    rng = np.random.default_rng(5)
    b = np.ones(inst.G + inst.N)
    for _ in range(10):
        xa, xb = (rng.uniform(inst.x_min, inst.x_max) for _ in range(2))
        va, _ = subproblem_cut(inst, xa, b, "miqp")
        vb, _ = subproblem_cut(inst, xb, b, "miqp")
        vm, _ = subproblem_cut(inst, 0.5 * (xa + xb), b, "miqp")
        assert vm <= 0.5 * (va + vb) + 1e-6 * max(1.0, abs(vm))


def test_master_without_cuts_is_zero():
    inst = inst_for()
    res = solve_mip(_master(inst, []))
    assert res.fun == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(res.x, 0.0)


@pytest.mark.parametrize("kind", ["milp", "miqp"])
@pytest.mark.parametrize("base", [0.2, 0.5])
def test_benders_converges_to_optimum(kind, base):
    inst = inst_for(base=base)
    J = solve_mip(build_full(inst, kind)).fun
    tr = run_benders(inst, kind, eps_thr=1e-9, max_iter=300)
    assert tr.terminated_by == "gap"
    assert rel_close(tr.ub, J, 1e-6)
    assert tr.records[0].lb_cand == pytest.approx(0.0, abs=1e-9)
    lbc = tr.column("lb_cand")
    assert np.all(np.diff(lbc) >= -1e-9 * abs(J))
    assert np.all(tr.column("ub") >= tr.column("lb") - 1e-9 * abs(J))
    res = full_residuals(inst, tr.solution, kind)
    assert max(res[g] for g in ("eq_all", "ub_all", "bounds")) <= 1e-6


def test_benders_rejects_bad_eps():
    with pytest.raises(ValueError):
        run_benders(inst_for(), "milp", eps_thr=0)


def test_subproblem_dimension_check():
    inst = inst_for()
    with pytest.raises(ValueError, match="length"):
        subproblem_cut(inst, np.zeros(3), np.zeros(6))
