import math

import numpy as np
import pytest

from cashkit.lp import (INFEASIBLE, OPTIMAL, UNBOUNDED, LinearConstraint, LpProblem, lp_solve)
from cashkit.optimizer import PADV, initial_constraints, variable_bounds
from oracles import vertex_enumeration


def test_single_variable():
    sol = lp_solve(LpProblem({"x": 1.0}, [LinearConstraint({"x": 1}, ">=", 0.25)], {"x": (0, 1)}))
    assert sol.status == OPTIMAL
    assert sol.values["x"] == pytest.approx(0.25, abs=1e-12)
    assert sol.objective == pytest.approx(0.25, abs=1e-12)


def test_initial_relaxation_is_decoupled():
    rows = initial_constraints(2, 0.5, 1.0, 1.0)
    sol = lp_solve(LpProblem({PADV: 1.0}, rows, variable_bounds(2)))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    assert sol.values["p1"] + sol.values["p2"] == pytest.approx(1.0)
    assert sol.values["p1"] >= sol.values["p2"] - 1e-12


def test_cost_cap_below_any_distribution_is_infeasible():
    rows = [
        LinearConstraint({"p1": 1, "p2": 1}, "==", 1),
        LinearConstraint({"p1": 1, "p2": -1}, ">=", 0),
        LinearConstraint({"p1": 1.2, "p2": 2.4}, "<=", 1),
    ]
    assert lp_solve(LpProblem({PADV: 1.0}, rows, variable_bounds(2))).status == INFEASIBLE


def test_unbounded():
    sol = lp_solve(LpProblem({"x": -1.0, "y": 0.0}, [LinearConstraint({"x": 1, "y": -1}, "<=", 1)]))
    assert sol.status == UNBOUNDED
    assert sol.values == {}


def test_upper_bounds_and_shifted_lower_bounds():
    sol = lp_solve(LpProblem({"x": -1.0, "y": -2.0},
                             [LinearConstraint({"x": 1, "y": 1}, "<=", 4)],
                             {"x": (1, 3), "y": (0.5, 2)}))
    assert sol.values == pytest.approx({"x": 2.0, "y": 2.0})
    assert sol.objective == pytest.approx(-6.0)


def test_redundant_equalities():
    rows = [LinearConstraint({"x": 1, "y": 1}, "==", 1),
            LinearConstraint({"x": 2, "y": 2}, "==", 2),
            LinearConstraint({"x": 1}, ">=", 0.3)]
    sol = lp_solve(LpProblem({"y": 1.0}, rows, {"x": (0, 1), "y": (0, 1)}))
    assert sol.status == OPTIMAL
    assert sol.values == pytest.approx({"x": 1.0, "y": 0.0})


def test_degenerate_cycling_example_terminates():
    # Beale's example: cycles under textbook Dantzig pricing without anti-cycling.
    rows = [
        LinearConstraint({"x4": 0.25, "x5": -8, "x6": -1, "x7": 9}, "<=", 0),
        LinearConstraint({"x4": 0.5, "x5": -12, "x6": -0.5, "x7": 3}, "<=", 0),
        LinearConstraint({"x6": 1}, "<=", 1),
    ]
    sol = lp_solve(LpProblem({"x4": -0.75, "x5": 20, "x6": -0.5, "x7": 6}, rows))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-1.25, abs=1e-9)


def test_constraint_validation():
    with pytest.raises(ValueError):
        LinearConstraint({"x": 0.0}, "<=", 1)
    with pytest.raises(ValueError):
        LinearConstraint({"x": 1.0}, "<", 1)
    assert LinearConstraint({"x": 1.0}, "=", 1).relation == "=="
    with pytest.raises(ValueError):
        lp_solve(LpProblem({"x": 1.0}, [LinearConstraint({"x": 1.0}, ">=", math.inf)]))


def test_deterministic():
    rng = np.random.default_rng(1)
    problem = _random_problem(rng)[0]
    a, b = lp_solve(problem), lp_solve(problem)
    assert a.status == b.status and a.values == b.values


def _random_problem(rng):
    n = int(rng.integers(1, 7))
    n_eq = int(rng.integers(0, min(2, n) + 1))
    n_ub = int(rng.integers(0, 5))
    c = rng.integers(-5, 6, n).astype(float)
    A_eq = rng.integers(-3, 4, (n_eq, n)).astype(float)
    A_ub = rng.integers(-3, 4, (n_ub, n)).astype(float)
    for A in (A_eq, A_ub):
        for row in A:
            if not row.any():
                row[int(rng.integers(n))] = 1.0
    lower = rng.integers(-2, 2, n).astype(float)
    upper = lower + rng.integers(1, 5, n)
    # make most instances feasible by building rhs around a random interior point
    x0 = lower + rng.random(n) * (upper - lower)
    b_eq = A_eq @ x0
    b_ub = A_ub @ x0 + rng.integers(-1, 4, n_ub)
    names = [f"x{j}" for j in range(n)]
    rows = [LinearConstraint(dict(zip(names, a)), "==", r) for a, r in zip(A_eq, b_eq)]
    rows += [LinearConstraint(dict(zip(names, a)), "<=", r) for a, r in zip(A_ub, b_ub)]
    # ">=" form for half of the inequalities exercises the surplus/artificial path
    rows = [LinearConstraint({k: -v for k, v in r.coefficients.items()}, ">=", -r.rhs)
            if r.relation == "<=" and rng.random() < 0.5 else r for r in rows]
    problem = LpProblem(dict(zip(names, c)), rows,
                        {nm: (lo, hi) for nm, lo, hi in zip(names, lower, upper)})
    return problem, (c, A_eq, b_eq, A_ub, b_ub, lower, upper)


def test_matches_vertex_enumeration():
    rng = np.random.default_rng(2024)
    infeasible = 0
    for _ in range(1000):
        problem, data = _random_problem(rng)
        expected = vertex_enumeration(*data)
        sol = lp_solve(problem)
        if expected is None:
            infeasible += 1
            assert sol.status == INFEASIBLE
            continue
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(expected, abs=1e-7)
        assert problem.max_violation(sol.values) <= 1e-8
    assert infeasible < 500


def test_adding_constraints_never_lowers_the_minimum():
    rng = np.random.default_rng(7)
    for _ in range(200):
        problem, _ = _random_problem(rng)
        before = lp_solve(problem)
        if not before.optimal:
            continue
        names = problem.variables()
        extra = LinearConstraint({nm: float(rng.integers(-3, 4)) or 1.0 for nm in names}, "<=",
                                 float(rng.integers(-2, 6)))
        after = lp_solve(LpProblem(problem.objective, problem.constraints + [extra], problem.bounds))
        if after.optimal:
            assert after.objective >= before.objective - 1e-9
        else:
            assert after.status == INFEASIBLE
