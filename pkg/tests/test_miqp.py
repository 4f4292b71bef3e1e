import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogctl import miqp, mpc
from cogctl.agent import AgentParams, AgentState
from cogctl.geometry import Cuboid
from cogctl.qp import OPTIMAL, solve_qp

from instances import ARENA, random_instance

AG = AgentParams()


def blocking_instance(T=2):
    cfg = mpc.MpcConfig(horizon=T, goal_centroid=(60.0, 10.0))
    box = Cuboid.from_bounds([20, 0], [40, 20])
    return mpc.build_miqp(AgentState(np.array([10.0, 10.0]), np.array([8.0, 0.0])), [box],
                          cfg, AG, arena=ARENA)


def test_zero_binaries_equals_plain_qp():
    cfg = mpc.MpcConfig(horizon=2, goal_centroid=(50.0, 50.0))
    inst = mpc.build_miqp(AgentState.at_rest([10, 10]), [], cfg, AG, arena=ARENA)
    assert inst.n_bin == 0
    res = miqp.branch_and_bound(inst)
    p = inst.qp()
    ref = solve_qp(p.H, p.f, None, None, p.A_eq, p.b_eq, p.lb, p.ub, const=p.const)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(ref.objective, rel=1e-9)
    assert miqp.brute_force(inst).objective == pytest.approx(ref.objective, rel=1e-9)


def test_blocking_cuboid_matches_enumeration():
    inst = blocking_instance()
    bb = miqp.branch_and_bound(inst)
    full = miqp.brute_force(inst, dominated=False)
    assert full.nodes_explored == 15 ** 2
    assert bb.status == OPTIMAL
    assert bb.objective == pytest.approx(full.objective, abs=1e-6)
    assert miqp.check_solution(inst, bb.incumbent) is None


def test_pattern_count_four_binaries():
    cfg = mpc.MpcConfig(horizon=1, goal_centroid=(60.0, 10.0))
    inst = mpc.build_miqp(AgentState.at_rest([10, 10]), [Cuboid.from_bounds([20, 0], [40, 20])],
                          cfg, AG, arena=ARENA)
    assert inst.n_bin == 4
    assert miqp.count_patterns(inst) == 15
    assert miqp.brute_force(inst, dominated=False).nodes_explored == 15


def test_obstacle_covering_reachable_set_is_infeasible():
    arena = Cuboid.from_bounds([0, 0], [100, 100])
    cfg = mpc.MpcConfig(horizon=2, goal_centroid=(90.0, 90.0))
    cover = Cuboid.from_bounds([-10, -10], [110, 110])
    # the agent may start inside; avoidance is still required at every planned step
    inst = mpc.build_miqp(AgentState.at_rest([50, 50]), [cover], cfg, AG, arena=arena)
    assert miqp.branch_and_bound(inst).status == "infeasible"
    assert miqp.brute_force(inst, dominated=False).status == "infeasible"


def test_pattern_limit_refusal():
    with pytest.raises(miqp.PatternLimitError):
        miqp.brute_force(blocking_instance(T=3), pattern_limit=10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_oracle_equivalence(seed):
    inst = random_instance(seed, max_product=3)
    a = miqp.branch_and_bound(inst)
    b = miqp.brute_force(inst)
    assert a.status == b.status
    if a.status == OPTIMAL:
        assert abs(a.objective - b.objective) <= 1e-6 * max(1.0, abs(b.objective))
        assert a.objective - a.bound <= 1e-4 * max(1.0, abs(a.objective)) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_dominance_matches_full_enumeration(seed):
    inst = random_instance(seed, max_product=2)
    a = miqp.brute_force(inst, dominated=True)
    b = miqp.brute_force(inst, dominated=False)
    assert a.status == b.status
    if a.status == OPTIMAL:
        assert a.objective == pytest.approx(b.objective, abs=1e-6)


def test_root_bound_equals_generic_relaxation():
    inst = blocking_instance()
    res = miqp.branch_and_bound(inst, keep_log=True)
    root = res.log[0]
    assert root["node"] == 0
    gen = miqp.relaxation(inst)
    assert root["bound"] == pytest.approx(gen.objective, abs=1e-6)


def test_child_bounds_monotone_and_incumbent_non_increasing():
    for seed in range(10):
        inst = random_instance(seed)
        res = miqp.branch_and_bound(inst, keep_log=True)
        by_id = {e["node"]: e for e in res.log}
        for e in res.log:
            if e["parent"] >= 0 and e["status"] in ("branched", "integral"):
                assert e["bound"] >= by_id[e["parent"]]["bound"] - 1e-7
        tr = res.incumbent_trace
        assert all(b <= a for a, b in zip(tr[:-1], tr[1:]))


def test_deterministic():
    inst = random_instance(5)
    a = miqp.branch_and_bound(inst, keep_log=True)
    b = miqp.branch_and_bound(inst, keep_log=True)
    assert a.nodes_explored == b.nodes_explored
    assert np.array_equal(a.incumbent, b.incumbent)
    assert a.tree_text().split("\n")[1:] == b.tree_text().split("\n")[1:]


def test_node_limit_reports_budget_hit():
    inst = blocking_instance(T=3)
    res = miqp.branch_and_bound(inst, miqp.Budget(node_limit=1))
    assert res.status == miqp.FEASIBLE_BUDGET_HIT
    assert res.nodes_explored == 1


def test_warm_start_seeds_incumbent():
    inst = blocking_instance()
    cold = miqp.branch_and_bound(inst)
    pattern = mpc.face_pattern(inst, cold.incumbent)
    warm = miqp.branch_and_bound(inst, warm_start=pattern)
    assert warm.incumbent_trace[0] == pytest.approx(cold.objective)
    assert warm.objective == pytest.approx(cold.objective)
    assert warm.nodes_explored <= cold.nodes_explored


def test_structure_checks():
    inst = blocking_instance()
    bad = miqp.MIQPInstance(**{**inst.__dict__, "f": inst.f.copy()})
    bad.f[-1] = 1.0
    with pytest.raises(miqp.StructureError):
        miqp.branch_and_bound(bad)


def test_tree_dump_lists_nodes():
    res = miqp.branch_and_bound(blocking_instance(), keep_log=True)
    text = res.tree_text()
    assert text.startswith("# node parent depth bound branch")
    assert len(text.strip().split("\n")) == len(res.log) + 1
