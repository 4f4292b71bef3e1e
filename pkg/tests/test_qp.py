import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from cogctl.qp import INFEASIBLE, OPTIMAL, QpProblem, Reduced, max_violation, solve_qp


def test_single_active_bound():
    sol = solve_qp([[2.0]], [0.0], A_ineq=[[-1.0]], b_ineq=[-3.0])
    assert sol.status == OPTIMAL
    assert sol.values[0] == pytest.approx(3.0) and sol.objective == pytest.approx(9.0)


def test_unconstrained():
    # (x - 1)^2 = x^2 - 2x + 1
    sol = solve_qp([[2.0]], [-2.0], const=1.0)
    assert sol.values[0] == pytest.approx(1.0) and sol.objective == pytest.approx(0.0, abs=1e-12)


def test_infeasible_pair():
    sol = solve_qp([[2.0]], [0.0], A_ineq=[[-1.0], [1.0]], b_ineq=[-1.0, 0.0])
    assert sol.status == INFEASIBLE


def test_inconsistent_equalities():
    sol = solve_qp(np.eye(2), A_eq=[[1, 1], [1, 1]], b_eq=[1, 2])
    assert sol.status == INFEASIBLE


def test_equality_and_bounds():
    # min x^2 + y^2  s.t.  x + y = 2, x <= 0.5
    sol = solve_qp(2 * np.eye(2), A_eq=[[1, 1]], b_eq=[2], ub=[0.5, np.inf])
    assert np.allclose(sol.values, [0.5, 1.5])


def _random_qp(seed):
    g = np.random.default_rng(seed)
    n = int(g.integers(1, 6))
    m = int(g.integers(0, 8))
    A = g.normal(size=(n, n))
    H = A @ A.T + 0.1 * np.eye(n)
    f = g.normal(size=n)
    x_feas = g.normal(size=n)
    Ai = g.normal(size=(m, n))
    bi = Ai @ x_feas + g.uniform(0, 1, m)
    k = int(g.integers(0, max(1, n)))
    Ae = g.normal(size=(k, n))
    be = Ae @ x_feas
    lb = x_feas - g.uniform(0.1, 2, n)
    ub = x_feas + g.uniform(0.1, 2, n)
    return H, f, Ai, bi, Ae, be, lb, ub


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_matches_independent_nlp_solver(seed):
    H, f, Ai, bi, Ae, be, lb, ub = _random_qp(seed)
    sol = solve_qp(H, f, Ai, bi, Ae if len(Ae) else None, be if len(Ae) else None, lb, ub)
    assert sol.status == OPTIMAL
    prob = QpProblem(H, f, Ai, bi, Ae if len(Ae) else None, be if len(Ae) else None, lb, ub)
    assert max_violation(prob, sol.values) < 1e-7
    cons = [{"type": "ineq", "fun": lambda x: bi - Ai @ x, "jac": lambda x: -Ai}]
    if len(Ae):
        cons.append({"type": "eq", "fun": lambda x: Ae @ x - be, "jac": lambda x: Ae})
    x0 = np.clip(np.zeros(len(f)), lb, ub)
    ref = minimize(lambda x: 0.5 * x @ H @ x + f @ x, x0, jac=lambda x: H @ x + f,
                   bounds=list(zip(lb, ub)), constraints=cons, method="SLSQP",
                   options={"ftol": 1e-12, "maxiter": 500})
    if ref.success:
        assert sol.objective <= ref.fun + 1e-6 * max(1, abs(ref.fun))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_kkt_conditions(seed):
    H, f, Ai, bi, _, _, lb, ub = _random_qp(seed)
    sol = solve_qp(H, f, Ai, bi, lb=lb, ub=ub)
    x = sol.values
    # stationarity with multipliers recovered by NNLS on the active rows
    A = np.vstack([Ai, -np.eye(len(f)), np.eye(len(f))])
    b = np.concatenate([bi, -lb, ub])
    act = np.flatnonzero(A @ x - b > -1e-7)
    from scipy.optimize import nnls
    grad = H @ x + f
    if act.size:
        lam, res = nnls(A[act].T, -grad)
        assert res < 1e-6 * max(1, np.linalg.norm(grad))
    else:
        assert np.linalg.norm(grad) < 1e-6


def test_warm_start_reaches_same_optimum():
    H, f, Ai, bi, _, _, lb, ub = _random_qp(7)
    red = Reduced(QpProblem(H, f, Ai, bi, None, None, lb, ub))
    cold = red.solve()
    warm = red.solve(warm_active=cold.active)
    assert warm.objective == pytest.approx(cold.objective, abs=1e-10)
    assert warm.iterations <= cold.iterations


def test_iteration_limit_status():
    H, f, Ai, bi, _, _, lb, ub = _random_qp(11)
    red = Reduced(QpProblem(H, f, Ai, bi, None, None, lb, ub))
    full = red.solve()
    if full.iterations > 0:
        assert red.solve(max_iter=0).status == "iteration_limit"
