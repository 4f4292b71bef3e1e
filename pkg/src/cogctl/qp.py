"""Dense convex QP: equality elimination + Goldfarb-Idnani dual active set.

Problem form::

    min 0.5 z'Hz + f'z + const
    s.t. A_ineq z <= b_ineq,  A_eq z = b_eq,  lb <= z <= ub
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, qr, solve_triangular

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class QpSolution:
    values: np.ndarray
    objective: float
    status: str
    active: list = field(default_factory=list)
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class _GIResult:
    y: np.ndarray
    active: list
    u: np.ndarray
    status: str
    iterations: int


class DualActiveSet:
    """Strictly convex QP ``min 0.5 y'Gy + a'y  s.t.  C y >= d`` (rows unit-normalised).

    Factorisation of G is done once, so many solves over row subsets are cheap.
    """

    def __init__(self, G: np.ndarray, a: np.ndarray, C: np.ndarray, d: np.ndarray, ridge=1e-10):
        n = G.shape[0]
        self.n = n
        G = 0.5 * (G + G.T)
        scale = max(1.0, float(np.max(np.abs(np.diag(G))))) if n else 1.0
        eps = 0.0
        while True:
            try:
                L, _ = cho_factor(G + eps * scale * np.eye(n), lower=True)
                L = np.tril(L)
                break
            except np.linalg.LinAlgError:
                eps = ridge if eps == 0.0 else eps * 100.0
                if eps > 1e-2:
                    raise
        self.ridge = eps * scale
        self.G = G
        self.a = np.asarray(a, dtype=float)
        self.Linv = solve_triangular(L, np.eye(n), lower=True) if n else np.zeros((0, 0))
        norms = np.linalg.norm(C, axis=1) if C.size else np.zeros(C.shape[0])
        self.row_scale = np.where(norms > 0, norms, 1.0)
        self.C = C / self.row_scale[:, None] if C.size else C.reshape(C.shape[0], n)
        self.d = d / self.row_scale
        # zero rows are either trivially satisfied or a standing infeasibility
        self.zero_rows = norms == 0
        self.y_free = -(self.Linv.T @ (self.Linv @ self.a)) if n else np.zeros(0)

    def objective(self, y) -> float:
        return float(0.5 * y @ self.G @ y + self.a @ y)

    def _factor(self, active):
        q = len(active)
        if q == 0:
            return self.Linv.T, np.zeros((0, 0))
        B = self.Linv @ self.C[active].T
        Q, R = np.linalg.qr(B, mode="complete")
        return self.Linv.T @ Q, R[:q, :q]

    def _eqp(self, active):
        """Minimiser with ``active`` rows held at equality, plus multipliers."""
        q = len(active)
        if q == 0:
            return self.y_free.copy(), np.zeros(0)
        N = self.C[active].T
        K = np.block([[self.G + self.ridge * np.eye(self.n), -N], [N.T, np.zeros((q, q))]])
        rhs = np.concatenate([-self.a, self.d[active]])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        return sol[: self.n], sol[self.n :]

    def solve(self, rows=None, warm_active=None, tol=1e-9, max_iter=None) -> _GIResult:
        n = self.n
        m = self.C.shape[0]
        if rows is None:
            rows = np.arange(m)
        rows = np.asarray(rows, dtype=int)
        bad = rows[self.zero_rows[rows] & (self.d[rows] > tol)]
        if bad.size:
            return _GIResult(self.y_free.copy(), [], np.zeros(0), INFEASIBLE, 0)
        rows = rows[~self.zero_rows[rows]]
        if max_iter is None:
            max_iter = 20 * (n + len(rows)) + 50
        Cr = self.C[rows]
        dr = self.d[rows]
        active: list = []
        y = self.y_free.copy()
        u = np.zeros(0)
        if warm_active:
            pos = {int(r): i for i, r in enumerate(rows)}
            act = [pos[r] for r in warm_active if r in pos]
            if act:
                y_w, u_w = self._eqp(rows[act].tolist())
                if np.all(u_w >= -1e-9) and np.all(Cr[act] @ y_w - dr[act] > -1e-7):
                    active, y, u = list(act), y_w, np.maximum(u_w, 0.0)
        it = 0
        J, R = self._factor(rows[active].tolist())
        if active and np.min(np.abs(np.diag(R))) < 1e-10:
            active, y, u = [], self.y_free.copy(), np.zeros(0)
            J, R = self._factor([])
        while True:
            s = Cr @ y - dr if len(rows) else np.zeros(0)
            if active:
                s[active] = np.inf
            if s.size == 0 or s.min() >= -tol:
                return _GIResult(y, rows[active].tolist(), u, "optimal", it)
            p = int(np.argmin(s))
            npv = Cr[p]
            up = 0.0
            while True:
                it += 1
                if it > max_iter:
                    return _GIResult(y, rows[active].tolist(), u, ITERATION_LIMIT, it)
                q = len(active)
                dvec = J.T @ npv
                z = J[:, q:] @ dvec[q:]
                r = solve_triangular(R, dvec[:q], check_finite=False) if q else np.zeros(0)
                t1, k = np.inf, -1
                for j in range(q):
                    if r[j] > 1e-12:
                        ratio = u[j] / r[j]
                        if ratio < t1:
                            t1, k = ratio, j
                zn = float(z @ npv)
                sp = float(npv @ y - dr[p])
                if sp >= -tol:
                    break
                t2 = -sp / zn if zn > 1e-13 else np.inf
                t = min(t1, t2)
                if not np.isfinite(t):
                    return _GIResult(y, rows[active].tolist(), u, INFEASIBLE, it)
                if not np.isfinite(t2):
                    u = u - t * r
                    up += t
                    del active[k]
                    u = np.delete(u, k)
                    J, R = self._factor(rows[active].tolist())
                    continue
                y = y + t * z
                u = u - t * r
                up += t
                if t == t2:
                    active.append(p)
                    u = np.append(u, up)
                    J, R = self._factor(rows[active].tolist())
                    break
                del active[k]
                u = np.delete(u, k)
                J, R = self._factor(rows[active].tolist())
            # loop back: recompute violations


@dataclass
class QpProblem:
    H: np.ndarray
    f: np.ndarray
    A_ineq: Optional[np.ndarray] = None
    b_ineq: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    const: float = 0.0


class Reduced:
    """Equality-eliminated QP in null-space coordinates ``z = z0 + N y``.

    Inequalities (``<=`` rows and finite bounds) are stored as ``C y >= d``.
    Row ``i`` of the original ``A_ineq`` maps to reduced row ``i``;
    bound rows follow.
    """

    def __init__(self, prob: QpProblem, tol=1e-9):
        H = np.atleast_2d(np.asarray(prob.H, dtype=float))
        n = H.shape[0]
        f = np.zeros(n) if prob.f is None else np.asarray(prob.f, dtype=float)
        self.n = n
        self.prob = prob
        self.feasible_eq = True
        if prob.A_eq is not None and len(prob.A_eq):
            E = np.atleast_2d(np.asarray(prob.A_eq, dtype=float))
            e = np.asarray(prob.b_eq, dtype=float)
            Q, R, piv = qr(E.T, mode="full", pivoting=True)
            diag = np.abs(np.diag(R))
            rank = int(np.sum(diag > 1e-10 * max(1.0, diag.max() if diag.size else 1.0)))
            Q1 = Q[:, :rank]
            R1 = R[:rank, :rank]
            # particular solution through the independent rows
            e_p = e[piv[:rank]]
            w = solve_triangular(R1.T, e_p, lower=True)
            z0 = Q1 @ w
            if np.max(np.abs(E @ z0 - e), initial=0.0) > 1e-7 * max(1.0, np.abs(e).max()):
                self.feasible_eq = False
            N = Q[:, rank:]
        else:
            z0 = np.zeros(n)
            N = np.eye(n)
        self.z0 = z0
        self.N = N
        G = N.T @ H @ N
        a = N.T @ (H @ z0 + f)
        self.const = float(0.5 * z0 @ H @ z0 + f @ z0 + prob.const)
        rows_C = []
        rows_d = []
        self.n_ineq = 0
        if prob.A_ineq is not None and len(prob.A_ineq):
            A = np.atleast_2d(np.asarray(prob.A_ineq, dtype=float))
            b = np.asarray(prob.b_ineq, dtype=float)
            rows_C.append(-(A @ N))
            rows_d.append(-(b - A @ z0))
            self.n_ineq = A.shape[0]
        self.bound_rows = []
        for side, vec in (("lb", prob.lb), ("ub", prob.ub)):
            if vec is None:
                continue
            vec = np.asarray(vec, dtype=float)
            idx = np.flatnonzero(np.isfinite(vec))
            if idx.size == 0:
                continue
            if side == "lb":
                rows_C.append(N[idx])
                rows_d.append(vec[idx] - z0[idx])
            else:
                rows_C.append(-N[idx])
                rows_d.append(z0[idx] - vec[idx])
            self.bound_rows.extend((side, int(i)) for i in idx)
        k = N.shape[1]
        C = np.vstack(rows_C) if rows_C else np.zeros((0, k))
        d = np.concatenate(rows_d) if rows_d else np.zeros(0)
        self.engine = DualActiveSet(G, a, C, d)

    def full(self, y) -> np.ndarray:
        return self.z0 + self.N @ y

    def set_ineq_rhs(self, b_ineq):
        """Swap the right-hand side of the ``A_ineq`` rows, keeping the factorisation."""
        m = self.n_ineq
        A = np.atleast_2d(np.asarray(self.prob.A_ineq, dtype=float))
        d_new = -(np.asarray(b_ineq, dtype=float) - A @ self.z0)
        eng = self.engine
        eng.d[:m] = np.where(eng.zero_rows[:m], d_new, d_new / eng.row_scale[:m])

    def solve(self, rows=None, warm_active=None, tol=1e-9, max_iter=None) -> QpSolution:
        if not self.feasible_eq:
            return QpSolution(self.z0.copy(), np.inf, INFEASIBLE)
        res = self.engine.solve(rows, warm_active, tol, max_iter)
        z = self.full(res.y)
        obj = self.engine.objective(res.y) + self.const
        if res.status == INFEASIBLE:
            obj = np.inf
        return QpSolution(z, float(obj), res.status, res.active, res.u, res.iterations)


def evaluate(prob: QpProblem, z) -> float:
    z = np.asarray(z, dtype=float)
    f = np.zeros_like(z) if prob.f is None else prob.f
    return float(0.5 * z @ prob.H @ z + f @ z + prob.const)


def max_violation(prob: QpProblem, z) -> float:
    z = np.asarray(z, dtype=float)
    v = 0.0
    if prob.A_ineq is not None and len(prob.A_ineq):
        v = max(v, float(np.max(prob.A_ineq @ z - prob.b_ineq, initial=0.0)))
    if prob.A_eq is not None and len(prob.A_eq):
        v = max(v, float(np.max(np.abs(prob.A_eq @ z - prob.b_eq), initial=0.0)))
    if prob.lb is not None:
        v = max(v, float(np.max(np.asarray(prob.lb) - z, initial=0.0)))
    if prob.ub is not None:
        v = max(v, float(np.max(z - np.asarray(prob.ub), initial=0.0)))
    return v


def solve_qp(
    H,
    f=None,
    A_ineq=None,
    b_ineq=None,
    A_eq=None,
    b_eq=None,
    lb=None,
    ub=None,
    tol: float = 1e-9,
    const: float = 0.0,
) -> QpSolution:
    """Solve a convex QP; returns the optimum or an infeasibility status.

    >>> solve_qp([[2.0]], [0.0], A_ineq=[[-1.0]], b_ineq=[-3.0]).values
    array([3.])
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    n = H.shape[0]
    prob = QpProblem(
        H,
        np.zeros(n) if f is None else np.asarray(f, dtype=float),
        None if A_ineq is None else np.atleast_2d(np.asarray(A_ineq, dtype=float)),
        None if b_ineq is None else np.atleast_1d(np.asarray(b_ineq, dtype=float)),
        None if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float)),
        None if b_eq is None else np.atleast_1d(np.asarray(b_eq, dtype=float)),
        None if lb is None else np.asarray(lb, dtype=float),
        None if ub is None else np.asarray(ub, dtype=float),
        const,
    )
    return Reduced(prob, tol).solve(tol=tol)
