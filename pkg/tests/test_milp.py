"""Branch-and-bound solver checks against enumeration."""

import itertools

import numpy as np
import pytest

from odmts.milp import solve_lp, solve_milp


def test_lp_basic():
    sol = solve_lp([1.0, -1.0], a_ub=[[1.0, 1.0]], b_ub=[1.0], bounds=[(0, 1), (0, 1)])
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-1.0)


def test_lp_infeasible():
    sol = solve_lp([1.0], a_ub=[[1.0], [-1.0]], b_ub=[-1.0, -2.0], bounds=[(0, None)])
    assert sol.status == "infeasible"


def test_milp_knapsack():
    # max 5x0 + 4x1 + 3x2 s.t. 2x0 + 3x1 + x2 <= 4  ->  x0 = x2 = 1.
    res = solve_milp([-5.0, -4.0, -3.0], a_ub=[[2.0, 3.0, 1.0]], b_ub=[4.0],
                     integers=(0, 1, 2))
    assert res.optimal
    assert res.objective == pytest.approx(-8.0)
    assert list(res.x) == [1.0, 0.0, 1.0]


def test_milp_equality_cover():
    # Exact cover of {0,1,2} by columns {0,1}, {2}, {0}, {1,2}: best is cols 2+3.
    a_eq = np.array([
        [1, 0, 1, 0],
        [1, 0, 0, 1],
        [0, 1, 0, 1],
    ], dtype=float)
    cost = [10.0, 6.0, 3.0, 4.0]
    res = solve_milp(cost, a_eq=a_eq, b_eq=[1.0, 1.0, 1.0], integers=(0, 1, 2, 3))
    assert res.optimal
    assert res.objective == pytest.approx(7.0)
    assert list(res.x) == [0.0, 0.0, 1.0, 1.0]


def test_milp_infeasible():
    res = solve_milp([1.0], a_eq=[[2.0]], b_eq=[1.0], integers=(0,))
    assert res.status == "infeasible"


def test_milp_mixed_continuous():
    # Binary z, continuous t >= 3 - 2z; minimize 2z + t.
    res = solve_milp([2.0, 1.0], a_ub=[[-2.0, -1.0]], b_ub=[-3.0],
                     bounds=[(0, 1), (0, None)], integers=(0,))
    assert res.optimal
    assert res.objective == pytest.approx(3.0)  # z=0, t=3 beats z=1, t=1 -> 3


def test_milp_matches_enumeration_random():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, 4))
        c = rng.uniform(-5, 5, size=n)
        a = rng.uniform(-3, 3, size=(m, n))
        b = rng.uniform(0, 6, size=m)
        res = solve_milp(c, a_ub=a, b_ub=b, integers=tuple(range(n)))
        best = np.inf
        for bits in itertools.product([0.0, 1.0], repeat=n):
            x = np.array(bits)
            if np.all(a @ x <= b + 1e-9):
                best = min(best, float(c @ x))
        if best is np.inf:
            assert res.status == "infeasible"
        else:
            assert res.optimal
            assert res.objective == pytest.approx(best, abs=1e-7)
