"""Small mixed-binary linear program solver.

Branch and bound over scipy (HiGHS) LP relaxations: most-fractional branching,
best-bound node selection, deterministic tie-breaking. Instances in this
package are desk scale (tens of binaries), so no presolve or cut machinery.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

INT_TOL = 1e-7


class SolverError(RuntimeError):
    """LP relaxation failed for a reason other than infeasibility."""


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None
    objective: float


@dataclass
class MilpResult:
    status: str  # "optimal" | "infeasible" | "node_limit"
    x: np.ndarray | None
    objective: float
    best_bound: float
    nodes: int

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_lp(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None, bounds=None) -> LpSolution:
    """One LP relaxation; bounds is a list of (lo, hi) with None for unbounded."""
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution("infeasible", None, np.inf)
    if res.status != 0:
        raise SolverError(f"LP relaxation failed: {res.message}")
    return LpSolution("optimal", res.x, float(res.fun))


def solve_milp(
    c,
    a_ub=None,
    b_ub=None,
    a_eq=None,
    b_eq=None,
    bounds=None,
    integers: tuple[int, ...] = (),
    node_limit: int = 200_000,
) -> MilpResult:
    """Minimize c @ x with the listed variables restricted to integers.

    Integer variables must carry finite bounds. Returns the proven optimum, or
    the incumbent flagged "node_limit" if the tree was cut short.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    if bounds is None:
        bounds = [(0.0, 1.0)] * n
    integers = tuple(integers)

    best_x: np.ndarray | None = None
    best_obj = np.inf
    counter = 0
    nodes = 0
    # Heap of (lp bound, tiebreak, bounds per variable).
    root = solve_lp(c, a_ub, b_ub, a_eq, b_eq, bounds)
    if root.status == "infeasible":
        return MilpResult("infeasible", None, np.inf, np.inf, 1)
    heap: list[tuple[float, int, list, np.ndarray]] = []
    heapq.heappush(heap, (root.objective, counter, list(bounds), root.x))

    def frac(x: np.ndarray) -> tuple[int, float] | None:
        worst_i, worst_f = None, INT_TOL
        for i in integers:
            f = abs(x[i] - round(x[i]))
            if f > worst_f:
                worst_i, worst_f = i, f
        return None if worst_i is None else (worst_i, worst_f)

    best_bound = root.objective
    proved = False
    while heap:
        bound, _, node_bounds, x = heapq.heappop(heap)
        best_bound = bound
        if bound >= best_obj - 1e-9 * (1.0 + abs(best_obj)):
            proved = True
            break  # best-bound order: nothing left can improve
        nodes += 1
        if nodes > node_limit:
            return MilpResult("node_limit", best_x, best_obj, best_bound, nodes)
        branch = frac(x)
        if branch is None:
            if bound < best_obj:
                xs = x.copy()
                for i in integers:
                    xs[i] = round(xs[i])
                best_x, best_obj = xs, bound
            continue
        i, _ = branch
        lo, hi = node_bounds[i]
        for new_lo, new_hi in ((lo, float(np.floor(x[i]))), (float(np.ceil(x[i])), hi)):
            if new_lo > new_hi:
                continue
            child_bounds = list(node_bounds)
            child_bounds[i] = (new_lo, new_hi)
            sol = solve_lp(c, a_ub, b_ub, a_eq, b_eq, child_bounds)
            if sol.status == "infeasible":
                continue
            if sol.objective >= best_obj - 1e-9 * (1.0 + abs(best_obj)):
                continue
            counter += 1
            heapq.heappush(heap, (sol.objective, counter, child_bounds, sol.x))

    if best_x is None:
        return MilpResult("infeasible", None, np.inf, best_bound, nodes)
    if not heap or proved:
        best_bound = best_obj  # tree exhausted or dominated: optimum proven
    return MilpResult("optimal", best_x, best_obj, best_bound, nodes)
