import math
import time

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from cogctl import agent
from cogctl import fast_planner as fp
from cogctl.agent import AgentParams, AgentState
from cogctl.geometry import Cuboid

P = AgentParams()
ARENA = Cuboid.from_bounds([0, 0], [1000, 1000])


def segment_hits_box(a, b, lo, hi) -> bool:
    """Exact Liang-Barsky clipping of segment ab against the closed box [lo, hi]."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    d = b - a
    t0, t1 = 0.0, 1.0
    for k in range(a.size):
        if d[k] == 0:
            if a[k] < lo[k] or a[k] > hi[k]:
                return False
            continue
        u0, u1 = (lo[k] - a[k]) / d[k], (hi[k] - a[k]) / d[k]
        u0, u1 = min(u0, u1), max(u0, u1)
        t0, t1 = max(t0, u0), min(t1, u1)
        if t0 > t1:
            return False
    return True


def assert_path_invariants(path, obstacles, cfg):
    w = np.asarray(path.waypoints)
    if len(w) > 1:
        assert np.all(np.linalg.norm(np.diff(w, axis=0), axis=1) <= cfg.step_size + 1e-9)
    for p in w:
        assert not any(c.contains(p) for c in obstacles)


def test_nearest_neighbour_examples():
    assert np.array_equal(fp.nearest_neighbour([[0, 0]], [5, 5]), [0, 0])
    assert np.array_equal(fp.nearest_neighbour([[0, 0], [10, 0]], [6, 0]), [10, 0])
    assert np.array_equal(fp.nearest_neighbour([[0, 0], [2, 0]], [1, 0]), [0, 0])
    with pytest.raises(ValueError):
        fp.nearest_neighbour([], [0, 0])


def test_steer_examples():
    assert np.allclose(fp.steer([0, 0], [30, 0], 15), [15, 0])
    assert np.allclose(fp.steer([0, 0], [5, 0], 15), [5, 0])
    assert np.allclose(fp.steer([0, 0], [3, 4], 5), [3, 4])
    assert np.allclose(fp.steer([1, 1], [1, 1], 5), [1, 1])
    with pytest.raises(ValueError):
        fp.steer([0, 0], [1, 0], 0)


def test_path_free_examples():
    box = [Cuboid.from_bounds([100, 100], [200, 200])]
    assert fp.path_free([0, 0], [50, 50], box, 1.0)
    assert not fp.path_free([0, 0], [150, 150], box, 1.0)
    assert not fp.path_free([50, 150], [250, 150], box, 1.0)


@given(st.lists(st.floats(0, 300), min_size=4, max_size=4))
def test_path_free_agrees_with_clipping_oracle(xy):
    lo, hi = np.array([100.0, 100.0]), np.array([200.0, 200.0])
    a, b = xy[:2], xy[2:]
    hit = segment_hits_box(a, b, lo, hi)
    free = fp.path_free(a, b, [Cuboid.from_bounds(lo, hi)], 1.0)
    if free:
        # sampling may only miss clips shorter than the resolution
        if hit:
            grown = segment_hits_box(a, b, lo + 1.0, hi - 1.0)
            assert not grown
    else:
        assert hit


def test_rrt_reaches_nearby_goal():
    goal = Cuboid.from_center([10, 0], [4, 4])
    path = fp.rrt_plan([0, 0], goal, [], fp.RrtConfig(), np.random.default_rng(0),
                       Cuboid.from_bounds([-50, -50], [50, 50]))
    assert path.reached_goal and goal.contains(path.waypoints[-1])
    assert path.iterations <= 50


def test_rrt_start_in_goal():
    goal = Cuboid.from_center([0, 0], [10, 10])
    path = fp.rrt_plan([0, 0], goal, [], fp.RrtConfig(), np.random.default_rng(0), ARENA)
    assert path.reached_goal and len(path.waypoints) == 1


def test_rrt_boxed_in_start():
    walls = [Cuboid.from_bounds([0, 0], [100, 10]), Cuboid.from_bounds([0, 90], [100, 100]),
             Cuboid.from_bounds([0, 0], [10, 100]), Cuboid.from_bounds([90, 0], [100, 100])]
    goal = Cuboid.from_center([900, 900], [100, 100])
    path = fp.rrt_plan([50, 50], goal, walls, fp.RrtConfig(), np.random.default_rng(0), ARENA)
    assert not path.reached_goal and path.iterations == 500
    assert all(10 < p[0] < 90 and 10 < p[1] < 90 for p in path.waypoints)


def test_rrt_rejects_start_in_obstacle():
    with pytest.raises(fp.InfeasibleStartError):
        fp.rrt_plan([5, 5], Cuboid.from_center([900, 900], [100, 100]),
                    [Cuboid.from_bounds([0, 0], [10, 10])], fp.RrtConfig(),
                    np.random.default_rng(0), ARENA)


@pytest.mark.parametrize("seed", range(5))
def test_rrt_invariants_and_determinism(seed):
    g = np.random.default_rng(seed)
    obs = [Cuboid.from_center(g.uniform(200, 800, 2), g.uniform(100, 250, 2)) for _ in range(4)]
    goal = Cuboid.from_center([900, 900], [100, 100])
    cfg = fp.RrtConfig()
    a = fp.rrt_plan([50, 50], goal, obs, cfg, np.random.default_rng(seed), ARENA)
    b = fp.rrt_plan([50, 50], goal, obs, cfg, np.random.default_rng(seed), ARENA)
    assert_path_invariants(a, obs, cfg)
    assert all(np.array_equal(x, y) for x, y in zip(a.waypoints, b.waypoints))
    for p, q in zip(a.waypoints[:-1], a.waypoints[1:]):
        assert fp.path_free(p, q, obs, cfg.collision_check_resolution)


def test_rrt_wall_clock_budget():
    goal = Cuboid.from_center([900, 900], [100, 100])
    obs = [Cuboid.from_center([500, 500], [200, 200])]
    t0 = time.perf_counter()
    fp.rrt_plan([50, 50], goal, obs, fp.RrtConfig(goal_bias=0.0), np.random.default_rng(0), ARENA)
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.parametrize("kw", [dict(step_size=0), dict(max_iterations=0), dict(goal_bias=1.0),
                                dict(collision_check_resolution=20.0)])
def test_rrt_config_validation(kw):
    with pytest.raises(ValueError):
        fp.RrtConfig(**kw)


def test_scalar_riccati_golden_ratio():
    P_ = fp.riccati(np.eye(1), np.eye(1), np.eye(1), np.eye(1), 1e-14)
    assert P_[0, 0] == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-10)
    K = fp.lqr_gain(np.eye(1), np.eye(1), fp.LqrConfig(1.0, 1.0))
    assert K[0, 0] == pytest.approx(0.6180, abs=1e-4)
    assert K[0, 0] == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-6)


def test_zero_state_cost_gives_zero_gain():
    phi, gam = agent.build_matrices(P)
    assert np.allclose(fp.lqr_gain(phi, gam, fp.LqrConfig(q_weight=0.0)), 0.0)


def test_paper_gain_stable_and_matches_dare():
    phi, gam = agent.build_matrices(P)
    cfg = fp.LqrConfig()
    K = fp.lqr_gain(phi, gam, cfg)
    assert max(abs(np.linalg.eigvals(phi - gam @ K))) < 1
    Q, R = cfg.matrices(4, 2)
    Pd = scipy.linalg.solve_discrete_are(phi, gam, Q, R)
    K_ref = np.linalg.solve(R + gam.T @ Pd @ gam, gam.T @ Pd @ phi)
    assert np.allclose(K, K_ref, atol=1e-8)
    Ps = fp.riccati(phi, gam, Q, R, cfg.riccati_tolerance)
    assert np.allclose(Ps, Ps.T)
    assert np.min(np.linalg.eigvalsh(Ps)) >= -1e-12
    S = R + gam.T @ Ps @ gam
    resid = Q + phi.T @ (Ps - Ps @ gam @ np.linalg.solve(S, gam.T @ Ps)) @ phi - Ps
    assert np.abs(resid).max() < 1e-6


def test_riccati_non_convergence():
    with pytest.raises(fp.RiccatiError):
        fp.riccati(np.eye(1) * 2, np.eye(1), np.eye(1), np.eye(1), max_iter=2)


def test_track_stationary_reference():
    path = fp.ReferencePath([np.array([5.0, 5.0])], True)
    traj, controls = fp.track(path, AgentState.at_rest([5, 5]), P, fp.LqrConfig())
    assert np.allclose(controls, 0) and traj[-1] == AgentState.at_rest([5, 5])


def test_track_straight_line_error_decays():
    w = [np.array([10.0 * k, 0.0]) for k in range(30)]
    path = fp.ReferencePath(w, True)
    traj, _ = fp.track(path, AgentState.at_rest([0, 0]), P, fp.LqrConfig())
    err = [np.linalg.norm(s.position - w[min(k + 1, 29)]) for k, s in enumerate(traj)]
    assert err[20] < err[5]


def test_track_saturates_and_replays():
    path = fp.ReferencePath([np.array([0.0, 0.0]), np.array([500.0, -500.0])], False)
    x0 = AgentState.at_rest([0, 0])
    traj, controls = fp.track(path, x0, P, fp.LqrConfig())
    assert np.allclose(np.abs(controls[0]), 7.5)
    assert agent.rollout(x0, controls, P) == traj


def test_track_empty_path():
    with pytest.raises(ValueError):
        fp.track(fp.ReferencePath([], False), AgentState.at_rest([0, 0]), P, fp.LqrConfig())
