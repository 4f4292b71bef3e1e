import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cogctl.agent import (
    AgentParams, AgentState, InputBoundError, ParameterError, build_matrices, clamp, rollout, step,
)

P = AgentParams()
finite = st.floats(-50, 50, allow_nan=False)


def S(p, v):
    return AgentState(np.array(p, float), np.array(v, float))


def test_matrices_paper_values():
    phi, gam = build_matrices(P)
    assert np.allclose(phi[2:, 2:], 0.8 * np.eye(2))
    assert np.allclose(gam[2:], np.eye(2) / 1.05)
    assert gam[2, 0] == pytest.approx(0.95238, abs=1e-5)
    assert np.allclose(phi[:2, 2:], np.eye(2))


def test_matrices_drag_free_unit_mass():
    phi, gam = build_matrices(AgentParams(drag=0.0, mass=1.0))
    I, Z = np.eye(2), np.zeros((2, 2))
    assert np.array_equal(phi, np.block([[I, I], [Z, I]]))
    assert np.array_equal(gam, np.vstack([Z, I]))


def test_matrices_3d_shapes():
    phi, gam = build_matrices(AgentParams(dim=3))
    assert phi.shape == (6, 6) and gam.shape == (6, 3)


@pytest.mark.parametrize("kw", [dict(dt=0), dict(mass=-1), dict(drag=1.0), dict(dim=4),
                                dict(v_max=0), dict(u_max=-2)])
def test_invalid_params(kw):
    with pytest.raises(ParameterError):
        AgentParams(**kw)


def test_step_examples():
    assert step(S([0, 0], [1, 0]), np.zeros(2), P) == S([1, 0], [0.8, 0])
    assert step(S([0, 0], [0, 0]), np.zeros(2), P) == S([0, 0], [0, 0])
    out = step(S([0, 0], [1, 0]), np.array([1.05, 0]), P)
    assert np.allclose(out.position, [1, 0]) and np.allclose(out.velocity, [1.8, 0])


def test_step_rejects_out_of_bounds():
    with pytest.raises(InputBoundError):
        step(S([0, 0], [0, 0]), np.array([7.6, 0]), P)
    with pytest.raises(InputBoundError):
        step(S([0, 0], [0, 0]), np.zeros(3), P)


def test_step_matches_matrix_form():
    phi, gam = build_matrices(P)
    x = S([3, -2], [4, 1])
    u = np.array([2.0, -1.5])
    assert np.allclose(step(x, u, P).vector(), phi @ x.vector() + gam @ u, atol=0, rtol=1e-15)


def test_rollout_examples():
    x = S([0, 0], [1, 0])
    assert rollout(x, [], P) == []
    assert rollout(x, [np.zeros(2)], P) == [step(x, np.zeros(2), P)]
    traj = rollout(x, [np.zeros(2)] * 2, P)
    assert np.allclose([s.position for s in traj], [[1, 0], [1.8, 0]])


@given(st.lists(finite, min_size=4, max_size=4), st.lists(finite, min_size=4, max_size=4),
       st.lists(st.floats(-3.5, 3.5), min_size=4, max_size=4), finite, finite)
def test_linearity(x1, x2, u12, a, b):
    s1, s2 = S(x1[:2], x1[2:]), S(x2[:2], x2[2:])
    u1, u2 = np.array(u12[:2]), np.array(u12[2:])
    lhs_state = AgentState.from_vector(a * s1.vector() + b * s2.vector())
    ua = a * u1 + b * u2
    big = AgentParams(u_max=1e6)
    lhs = step(lhs_state, ua, big).vector()
    rhs = a * step(s1, u1, big).vector() + b * step(s2, u2, big).vector()
    assert np.allclose(lhs, rhs, atol=1e-9)


@given(st.lists(finite, min_size=2, max_size=2))
def test_zero_input_contracts_velocity(v):
    out = step(S([0, 0], v), np.zeros(2), P)
    assert np.linalg.norm(out.velocity) == pytest.approx(0.8 * np.linalg.norm(v), abs=1e-12)


@given(st.lists(st.lists(st.floats(-7.5, 7.5), min_size=2, max_size=2), max_size=6),
       st.lists(st.lists(st.floats(-7.5, 7.5), min_size=2, max_size=2), max_size=6))
def test_rollout_concatenation(c1, c2):
    x = S([1, 2], [3, -4])
    first = rollout(x, c1, P)
    mid = first[-1] if first else x
    assert rollout(x, c1 + c2, P) == first + rollout(mid, c2, P)


@given(st.lists(st.lists(st.floats(-100, 100), min_size=2, max_size=2), min_size=1, max_size=40))
def test_clamped_inputs_keep_velocity_bounded(raw):
    x = S([0, 0], [0, 0])
    for u in raw:
        x = step(x, clamp(np.array(u), x, P), P)
        assert np.all(np.abs(x.velocity) <= P.v_max + 1e-9)
