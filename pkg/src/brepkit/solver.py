"""Exact 0/1 solver: exhaustive enumeration for tiny models, otherwise
best-first branch and bound with LP relaxation bounds.

The LP relaxations are solved with HiGHS (scipy.optimize.linprog); the
search itself is deterministic: nodes are ordered by (bound, insertion
counter), branching picks the most fractional variable, and objective
ties between incumbents are broken toward fewer selected variables.
Every returned assignment is re-checked against the model constraints.
"""

import heapq
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import SolverFailure

#: default variable-count threshold below which solve_ilp enumerates
ENUMERATION_LIMIT = 20

_TIE = 1e-12


@dataclass
class SolveResult:
    assignment: np.ndarray
    objective: float
    status: str  # "optimal" or "timeout"
    bound: float
    nodes: int

    @property
    def gap(self):
        return max(0.0, self.bound - self.objective)


def solve_ilp(model, time_limit=60.0, method="auto", enumeration_limit=ENUMERATION_LIMIT):
    """Maximize the model objective over feasible binary assignments.

    method: "auto" (enumerate small models, branch and bound otherwise),
    "enumeration", or "branch_and_bound".  Raises SolverFailure for an
    infeasible model or a timeout with no incumbent; a timeout with an
    incumbent returns status "timeout" and the remaining gap.
    """
    if model.n_variables == 0:
        return SolveResult(np.zeros(0, dtype=np.int64), 0.0, "optimal", 0.0, 0)
    if method == "auto":
        method = "enumeration" if model.n_variables <= enumeration_limit else "branch_and_bound"
    if method == "enumeration":
        result = _solve_enumerate(model)
    elif method == "branch_and_bound":
        result = _solve_bnb(model, time_limit)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    if not model.check_assignment(result.assignment):
        raise SolverFailure("solver produced an assignment violating constraints")
    return result


def _better(obj, ones, best_obj, best_ones):
    if obj > best_obj + _TIE:
        return True
    return abs(obj - best_obj) <= _TIE and ones < best_ones


def _solve_enumerate(model):
    n = model.n_variables
    c, a_ub, b_ub, a_eq, b_eq = model.arrays()
    a_ub = a_ub.toarray()
    a_eq = a_eq.toarray()
    best_x, best_obj, best_ones = None, -np.inf, n + 1
    chunk = 1 << 14
    total = 1 << n
    shifts = np.arange(n)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        x = (codes[:, None] >> shifts) & 1
        ok = np.ones(len(codes), dtype=bool)
        if len(b_ub):
            ok &= (x @ a_ub.T <= b_ub + 1e-9).all(axis=1)
        if len(b_eq):
            ok &= (np.abs(x @ a_eq.T - b_eq) <= 1e-9).all(axis=1)
        if not ok.any():
            continue
        objs = x[ok] @ c
        ones = x[ok].sum(axis=1)
        for i in np.argsort(-objs, kind="stable"):
            if objs[i] < best_obj - _TIE:
                break
            if _better(objs[i], ones[i], best_obj, best_ones):
                best_x, best_obj, best_ones = x[ok][i].copy(), float(objs[i]), int(ones[i])
    if best_x is None:
        raise SolverFailure("model is infeasible")
    return SolveResult(best_x.astype(np.int64), best_obj, "optimal", best_obj, 1)


def _solve_lp(c, a_ub, b_ub, a_eq, b_eq, lo, hi):
    res = linprog(
        -c,
        A_ub=a_ub if a_ub.shape[0] else None,
        b_ub=b_ub if a_ub.shape[0] else None,
        A_eq=a_eq if a_eq.shape[0] else None,
        b_eq=b_eq if a_eq.shape[0] else None,
        bounds=np.stack([lo, hi], axis=1),
        method="highs",
    )
    if res.status == 2:
        return None, None
    if res.status != 0:
        raise SolverFailure(f"LP relaxation failed with status {res.status}: {res.message}")
    return -res.fun, res.x


def _solve_bnb(model, time_limit):
    n = model.n_variables
    c, a_ub, b_ub, a_eq, b_eq = model.arrays()
    deadline = time.monotonic() + time_limit

    best_x, best_obj, best_ones = None, -np.inf, n + 1

    def offer(x_int):
        nonlocal best_x, best_obj, best_ones
        if not model.check_assignment(x_int):
            return
        obj = model.objective_value(x_int)
        ones = int(x_int.sum())
        if _better(obj, ones, best_obj, best_ones):
            best_x, best_obj, best_ones = x_int.copy(), obj, ones

    offer(np.zeros(n, dtype=np.int64))

    lo0 = np.zeros(n)
    hi0 = np.ones(n)
    root_bound, root_x = _solve_lp(c, a_ub, b_ub, a_eq, b_eq, lo0, hi0)
    if root_bound is None:
        if best_x is not None:  # x = 0 feasible but the LP disagrees: numerical trouble
            raise SolverFailure("LP relaxation infeasible despite a feasible incumbent")
        raise SolverFailure("model is infeasible")

    counter = 0
    heap = [(-root_bound, counter, lo0, hi0, root_x)]
    nodes = 0
    global_bound = root_bound

    def safety(b):
        return 1e-6 * (1.0 + abs(b))

    while heap:
        neg_bound, _, lo, hi, x_lp = heapq.heappop(heap)
        bound = -neg_bound
        global_bound = bound  # best-first: top of heap is the current global bound
        if best_x is not None and bound + safety(bound) <= best_obj:
            break
        if time.monotonic() > deadline:
            if best_x is None:
                raise SolverFailure("time limit reached with no feasible incumbent")
            return SolveResult(best_x, best_obj, "timeout", global_bound, nodes)
        nodes += 1

        x_round = np.rint(x_lp).astype(np.int64)
        offer(x_round)
        frac = np.abs(x_lp - x_round)
        if frac.max() <= 1e-7:
            continue  # the relaxation solved this subtree integrally
        branch = int(np.argmin(np.where(lo < hi, np.abs(x_lp - 0.5), np.inf)))
        for value in (1.0, 0.0):
            lo2, hi2 = lo.copy(), hi.copy()
            lo2[branch] = hi2[branch] = value
            sub_bound, sub_x = _solve_lp(c, a_ub, b_ub, a_eq, b_eq, lo2, hi2)
            if sub_bound is None:
                continue
            sub_bound = min(sub_bound, bound)  # child bound cannot exceed parent
            if best_x is not None and sub_bound + safety(sub_bound) <= best_obj:
                continue
            counter += 1
            heapq.heappush(heap, (-sub_bound, counter, lo2, hi2, sub_x))

    if best_x is None:
        raise SolverFailure("model is infeasible")
    return SolveResult(best_x, best_obj, "optimal", max(global_bound, best_obj), nodes)
