"""Mixed-integer QP with big-M disjunction groups, solved by branch and bound.

Binaries are the trailing ``n_bin`` variables. Each binary switches exactly one
``<=`` row (its big-M row) and belongs to one cardinality row
``sum(b) <= bound``. The objective and the remaining rows involve continuous
variables only.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .qp import INFEASIBLE, OPTIMAL, QpProblem, Reduced, solve_qp

FEASIBLE_BUDGET_HIT = "feasible_budget_hit"


class StructureError(ValueError):
    """Instance does not have the big-M group structure the solver relies on."""


class PatternLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class BigMGroup:
    key: tuple
    binaries: tuple  # global variable indices
    rows: tuple  # big-M row per binary (same order)
    card_row: int
    card_bound: int


@dataclass
class MIQPInstance:
    H: np.ndarray
    f: np.ndarray
    A_ineq: np.ndarray
    b_ineq: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    n_cont: int
    n_bin: int
    groups: list
    const: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def num_continuous(self) -> int:
        return self.n_cont

    @property
    def num_binary(self) -> int:
        return self.n_bin

    @property
    def n(self) -> int:
        return self.n_cont + self.n_bin

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=float)
        return float(0.5 * z @ self.H @ z + self.f @ z + self.const)

    def qp(self, relax_binaries=True) -> QpProblem:
        """Continuous relaxation with binaries in ``[0, 1]``."""
        return QpProblem(
            self.H, self.f, self.A_ineq, self.b_ineq, self.A_eq, self.b_eq,
            self.lb, self.ub, self.const,
        )

    def to_text(self) -> str:
        """Plain-text dump: objective, rows and bounds, one item per line."""
        out = [f"# miqp n_cont={self.n_cont} n_bin={self.n_bin} groups={len(self.groups)}"]
        out.append(f"const {self.const!r}")
        for i, j in zip(*np.nonzero(self.H)):
            if i <= j:
                out.append(f"H {i} {j} {self.H[i, j]!r}")
        for i in np.flatnonzero(self.f):
            out.append(f"f {i} {self.f[i]!r}")
        for tag, A, b in (("eq", self.A_eq, self.b_eq), ("le", self.A_ineq, self.b_ineq)):
            for r in range(A.shape[0]):
                terms = " ".join(f"{j}:{A[r, j]!r}" for j in np.flatnonzero(A[r]))
                out.append(f"{tag} {r} {terms} | {b[r]!r}")
        for j in range(self.n):
            kind = "bin" if j >= self.n_cont else "cont"
            out.append(f"var {j} {kind} [{self.lb[j]!r}, {self.ub[j]!r}]")
        for g in self.groups:
            out.append(f"group {g.key} bins={list(g.binaries)} rows={list(g.rows)} "
                       f"card={g.card_row}<= {g.card_bound}")
        return "\n".join(out) + "\n"


@dataclass
class BnbResult:
    incumbent: Optional[np.ndarray]
    objective: float
    bound: float
    status: str
    nodes_explored: int
    wall_time: float
    log: list = field(default_factory=list)
    patterns_valid: int = 0
    incumbent_trace: list = field(default_factory=list)

    def tree_text(self) -> str:
        lines = ["# node parent depth bound branch value status"]
        for e in self.log:
            lines.append(
                f"{e['node']} {e['parent']} {e['depth']} {e['bound']!r} "
                f"{e['branch']} {e['value']} {e['status']}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Budget:
    gap: float = 1e-4
    abs_gap: float = 1e-9
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None


FEAS_TOL = 1e-6
INT_TOL = 1e-5


class _Structure:
    """Continuous-only view of a big-M instance.

    With a sufficient M, a binary at 1 leaves its row slack over the whole
    variable box and fractional binaries never make a cardinality row bind
    until all but one member are fixed at 1. The node relaxation is then the
    QP with the rows of zero-fixed (or forced) binaries enforced, and the
    cheapest relaxed binary values are ``max(0, deficit) / |coef|``.
    """

    def __init__(self, inst: MIQPInstance):
        nc, nb = inst.n_cont, inst.n_bin
        self.inst = inst
        bins = np.arange(nc, nc + nb)
        if nb and (np.any(inst.H[:, bins] != 0) or np.any(inst.f[bins] != 0)):
            raise StructureError("objective depends on binaries")
        if nb and inst.A_eq.size and np.any(inst.A_eq[:, bins] != 0):
            raise StructureError("equality rows involve binaries")
        group_rows = set()
        self.bin_group = np.full(nb, -1, dtype=int)
        self.coef = np.zeros(nb)
        self.row_of = np.zeros(nb, dtype=int)
        for gi, g in enumerate(inst.groups):
            group_rows.update(g.rows)
            group_rows.add(g.card_row)
            for j, r in zip(g.binaries, g.rows):
                local = j - nc
                if self.bin_group[local] != -1:
                    raise StructureError(f"binary {j} in two groups")
                self.bin_group[local] = gi
                self.row_of[local] = r
                self.coef[local] = inst.A_ineq[r, j]
                others = np.delete(inst.A_ineq[r, nc:], local)
                if np.any(others != 0):
                    raise StructureError(f"big-M row {r} holds several binaries")
        if np.any(self.bin_group < 0):
            raise StructureError("binary outside every group")
        if np.any(self.coef >= 0):
            raise StructureError("big-M coefficients must be negative in <= form")
        base = [r for r in range(inst.A_ineq.shape[0]) if r not in group_rows]
        if nb and base and np.any(inst.A_ineq[np.ix_(base, bins)] != 0):
            raise StructureError("non-group rows involve binaries")
        A_c = inst.A_ineq[:, :nc]
        lb, ub = inst.lb[:nc], inst.ub[:nc]
        if nb and (not np.all(np.isfinite(lb)) or not np.all(np.isfinite(ub))):
            raise StructureError("big-M sufficiency needs finite continuous bounds")
        enforced_A = A_c[self.row_of] if nb else np.zeros((0, nc))
        enforced_b = inst.b_ineq[self.row_of] if nb else np.zeros(0)
        if nb:
            worst = np.maximum(enforced_A * lb, enforced_A * ub).sum(axis=1) - enforced_b
            self.max_deficit = np.maximum(worst, 0.0)
            if np.any(worst > -self.coef):
                raise StructureError("big-M constant too small for the variable box")
            for g in inst.groups:
                loc = np.asarray(g.binaries) - nc
                if g.card_bound >= 1 and np.sum(self.max_deficit[loc] / -self.coef[loc]) > 1.0:
                    raise StructureError(f"big-M too small for cardinality slack in {g.key}")
        self.n_base = len(base)
        prob = QpProblem(
            inst.H[:nc, :nc], inst.f[:nc],
            np.vstack([A_c[base], enforced_A]) if nc else None,
            np.concatenate([inst.b_ineq[base], enforced_b]),
            inst.A_eq[:, :nc] if inst.A_eq.size else None,
            inst.b_eq if inst.A_eq.size else None,
            lb, ub, inst.const,
        )
        self.red = Reduced(prob)
        n_rows = self.red.engine.C.shape[0]
        self.always = np.concatenate(
            [np.arange(self.n_base), np.arange(self.n_base + nb, n_rows)]
        ).astype(int)
        self.enf_A = enforced_A
        self.enf_b = enforced_b
        self.groups = [np.asarray(g.binaries) - nc for g in inst.groups]
        self.bounds = [g.card_bound for g in inst.groups]

    def rows_for(self, fixed: np.ndarray):
        """Enforced binary rows for a fixing vector (-1 free), or None if infeasible."""
        enforce = set(np.flatnonzero(fixed == 0).tolist())
        for loc, bound in zip(self.groups, self.bounds):
            ones = int(np.sum(fixed[loc] == 1))
            if ones > bound:
                return None
            if ones == bound:
                # every remaining member must be 0
                enforce.update(int(j) for j in loc if fixed[j] == -1)
        return tuple(sorted(enforce))

    def solve(self, enforced: tuple, warm=None):
        rows = np.concatenate([self.always, self.n_base + np.asarray(enforced, dtype=int)])
        return self.red.solve(rows.astype(int), warm_active=warm, tol=1e-9)

    def deficits(self, z) -> np.ndarray:
        if not len(self.enf_b):
            return np.zeros(0)
        return self.enf_A @ z - self.enf_b

    def assign(self, z, fixed) -> Optional[np.ndarray]:
        """Binary vector for a z feasible in every group, else None."""
        dfc = self.deficits(z)
        b = np.ones(len(fixed))
        for loc in self.groups:
            zero = [j for j in loc if fixed[j] == 0]
            if not zero:
                cand = [j for j in loc if fixed[j] == -1 and dfc[j] <= FEAS_TOL]
                if not cand:
                    return None
                zero = [min(cand, key=lambda j: (dfc[j], j))]
            b[zero[0]] = 0.0
            # other zero-fixed members stay 0
            for j in zero[1:]:
                b[j] = 0.0
        for loc, bound in zip(self.groups, self.bounds):
            if b[loc].sum() > bound + 1e-9:
                return None
        return b


def _pattern_fixing(st: _Structure, inst: MIQPInstance, pattern: dict) -> np.ndarray:
    fixed = np.full(inst.n_bin, -1, dtype=np.int8)
    for gi, g in enumerate(inst.groups):
        face = pattern.get(g.key)
        if face is None:
            continue
        loc = st.groups[gi]
        fixed[loc] = 1
        fixed[loc[face]] = 0
    return fixed


def branch_and_bound(
    inst: MIQPInstance,
    budget: Budget = Budget(),
    warm_start: Optional[dict] = None,
    keep_log: bool = False,
) -> BnbResult:
    """Exact branch and bound over the binaries.

    Best-bound node selection after a depth-first plunge to the first
    incumbent; branching on the most fractional relaxed binary, smallest index
    on ties. ``warm_start`` maps group keys to an enforced face index and seeds
    the incumbent when that pattern is feasible.
    """
    t0 = time.perf_counter()
    st = _Structure(inst)
    nc = inst.n_cont
    log = []
    trace = []
    inc_z, inc_obj = None, math.inf
    counter = itertools.count()
    nodes = 0

    def record(node_id, parent, depth, bound, br, val, status):
        if keep_log:
            log.append(dict(node=node_id, parent=parent, depth=depth, bound=bound,
                            branch=br, value=val, status=status))

    def gap_closed(bound):
        return bound >= inc_obj - max(budget.abs_gap, budget.gap * abs(inc_obj))

    def over_budget():
        if budget.node_limit is not None and nodes >= budget.node_limit:
            return True
        if budget.time_limit is not None and time.perf_counter() - t0 > budget.time_limit:
            return True
        return False

    if warm_start:
        fixed = _pattern_fixing(st, inst, warm_start)
        enf = st.rows_for(fixed)
        if enf is not None:
            sol = st.solve(enf)
            if sol.status == OPTIMAL:
                b = st.assign(sol.values, fixed)
                if b is not None:
                    inc_z = np.concatenate([sol.values, b])
                    inc_obj = sol.objective
                    trace.append(inc_obj)

    # node: (fixed, enforced rows, parent solution, parent bound, depth, id, parent id)
    root = (np.full(inst.n_bin, -1, dtype=np.int8), None, None, -math.inf, 0, next(counter), -1)
    stack = [root]
    heap: list = []
    plunging = inc_z is None
    status = None

    while stack or heap:
        if over_budget():
            status = FEASIBLE_BUDGET_HIT
            break
        if plunging and stack:
            node = stack.pop()
        else:
            if stack:
                for nd in stack:
                    heapq.heappush(heap, (nd[3], -nd[4], nd[5], nd))
                stack = []
            _, _, _, node = heapq.heappop(heap)
        fixed, _, parent_sol, pbound, depth, nid, pid = node
        if inc_z is not None and gap_closed(pbound):
            record(nid, pid, depth, pbound, None, None, "pruned")
            continue
        enf = st.rows_for(fixed)
        if enf is None:
            record(nid, pid, depth, pbound, None, None, "infeasible")
            continue
        nodes += 1
        if parent_sol is not None and parent_sol[0] == enf:
            sol = parent_sol[1]
        else:
            warm = parent_sol[1].active if parent_sol is not None else None
            sol = st.solve(enf, warm)
        if sol.status != OPTIMAL:
            record(nid, pid, depth, pbound, None, None, sol.status)
            continue
        bound = max(sol.objective, pbound)
        if inc_z is not None and gap_closed(bound):
            record(nid, pid, depth, sol.objective, None, None, "pruned")
            continue
        z = sol.values
        b = st.assign(z, fixed)
        if b is not None:
            if sol.objective < inc_obj:
                inc_obj = sol.objective
                inc_z = np.concatenate([z, b])
                trace.append(inc_obj)
            record(nid, pid, depth, sol.objective, None, None, "integral")
            if plunging:
                plunging = False
            continue
        dfc = st.deficits(z)
        coef = -st.coef
        best_j, best_frac = -1, -1.0
        for loc in st.groups:
            if any(fixed[j] == 0 for j in loc):
                continue
            if not all(dfc[j] > FEAS_TOL for j in loc if fixed[j] == -1):
                continue
            for j in loc:
                if fixed[j] != -1:
                    continue
                v = min(1.0, max(0.0, dfc[j]) / coef[j])
                frac = min(v, 1.0 - v)
                if frac > best_frac:
                    best_j, best_frac = int(j), frac
        if best_j < 0:
            # numerically ambiguous node: nothing left to branch on
            record(nid, pid, depth, sol.objective, None, None, "stalled")
            continue
        record(nid, pid, depth, sol.objective, nc + best_j, None, "branched")
        psol = (enf, sol)
        kids = []
        for val in (0, 1):
            fx = fixed.copy()
            fx[best_j] = val
            kids.append((fx, None, psol, bound, depth + 1, next(counter), nid))
        if plunging:
            # dive toward the child that keeps the parent relaxation
            stack.extend(kids)
        else:
            for kd in kids:
                heapq.heappush(heap, (kd[3], -kd[4], kd[5], kd))

    open_bounds = [nd[3] for nd in stack] + [h[0] for h in heap]
    if status is None:
        status = OPTIMAL if inc_z is not None else INFEASIBLE
    if status == OPTIMAL:
        bound = min([inc_obj] + [b for b in open_bounds if b < inc_obj])
    elif open_bounds:
        bound = min(min(open_bounds), inc_obj)
    else:
        bound = inc_obj
    return BnbResult(
        incumbent=inc_z,
        objective=inc_obj,
        bound=float(bound) if np.isfinite(bound) else bound,
        status=status,
        nodes_explored=nodes,
        wall_time=time.perf_counter() - t0,
        log=log,
        incumbent_trace=trace,
    )


def _group_patterns(size: int, bound: int, dominated: bool):
    if dominated:
        ones = min(bound, size)
        pats = []
        for zeros in itertools.combinations(range(size), size - ones):
            p = [1] * size
            for j in zeros:
                p[j] = 0
            pats.append(tuple(p))
        return pats
    return [p for p in itertools.product((0, 1), repeat=size) if sum(p) <= bound]


def count_patterns(inst: MIQPInstance) -> int:
    return math.prod(
        len(_group_patterns(len(g.binaries), g.card_bound, False)) for g in inst.groups
    )


def brute_force(inst: MIQPInstance, pattern_limit: int = 100_000, dominated: bool = True) -> BnbResult:
    """Enumerate binary assignments, solving the fixed-binary QP for each.

    ``dominated=True`` only solves assignments with the most ones per group:
    setting a binary to 1 loosens its row, so every other assignment's
    feasible set is contained in one of these.
    """
    t0 = time.perf_counter()
    nc, nb = inst.n_cont, inst.n_bin
    if dominated:
        bins = np.arange(nc, nc + nb)
        if nb and np.any(inst.A_ineq[:, bins] > 0) and any(
            np.any(inst.A_ineq[list(g.rows)][:, list(g.binaries)] > 0) for g in inst.groups
        ):
            dominated = False
    per_group = [_group_patterns(len(g.binaries), g.card_bound, dominated) for g in inst.groups]
    total = math.prod(len(p) for p in per_group)
    if total > pattern_limit:
        raise PatternLimitError(f"{total} patterns exceed the limit {pattern_limit}")
    valid = count_patterns(inst)
    prob = QpProblem(
        inst.H[:nc, :nc], inst.f[:nc], inst.A_ineq[:, :nc], inst.b_ineq.copy(),
        inst.A_eq[:, :nc] if inst.A_eq.size else None,
        inst.b_eq if inst.A_eq.size else None,
        inst.lb[:nc], inst.ub[:nc], inst.const,
    )
    red = Reduced(prob)
    A_bin = inst.A_ineq[:, nc:]
    best_z, best_obj = None, math.inf
    solved = 0
    for combo in itertools.product(*per_group):
        b = np.zeros(nb)
        for g, pat in zip(inst.groups, combo):
            for j, v in zip(g.binaries, pat):
                b[j - nc] = v
        if np.any(b < inst.lb[nc:] - 1e-12) or np.any(b > inst.ub[nc:] + 1e-12):
            continue
        red_rhs = inst.b_ineq - A_bin @ b
        red.set_ineq_rhs(red_rhs)
        sol = red.solve(tol=1e-9)
        solved += 1
        if sol.status == OPTIMAL and sol.objective < best_obj - 1e-12:
            best_obj = sol.objective
            best_z = np.concatenate([sol.values, b])
    status = OPTIMAL if best_z is not None else INFEASIBLE
    return BnbResult(best_z, best_obj, best_obj, status, solved,
                     time.perf_counter() - t0, patterns_valid=valid)


def relaxation(inst: MIQPInstance):
    """Generic continuous relaxation (binaries as [0, 1] variables)."""
    p = inst.qp()
    return solve_qp(p.H, p.f, p.A_ineq, p.b_ineq, p.A_eq, p.b_eq, p.lb, p.ub, const=p.const)


def check_solution(inst: MIQPInstance, z, tol=FEAS_TOL) -> Optional[str]:
    """Name of the first violated row/bound, or None when ``z`` is feasible."""
    z = np.asarray(z, dtype=float)
    if inst.A_eq.size:
        r = np.abs(inst.A_eq @ z - inst.b_eq)
        if r.max(initial=0) > tol:
            return f"eq row {int(np.argmax(r))}"
    viol = inst.A_ineq @ z - inst.b_ineq if inst.A_ineq.size else np.zeros(0)
    card = {g.card_row: g for g in inst.groups}
    for r in np.flatnonzero(viol > tol):
        if r in card:
            return f"cardinality row {r} group {card[r].key}"
        return f"ineq row {r}"
    lo = np.flatnonzero(z < inst.lb - tol)
    if lo.size:
        return f"lower bound var {lo[0]}"
    hi = np.flatnonzero(z > inst.ub + tol)
    if hi.size:
        return f"upper bound var {hi[0]}"
    bins = z[inst.n_cont:]
    frac = np.flatnonzero(np.minimum(np.abs(bins), np.abs(bins - 1)) > INT_TOL)
    if frac.size:
        return f"binary var {inst.n_cont + frac[0]} not integral"
    return None
