import math

import numpy as np
import pytest

from oracles import peaks_minimum, stybtang_term_minimum
from subdiv.bounder import refine
from subdiv.interval import box
from subdiv.parser import parse_problem
from subdiv.partition import partition
from subdiv.problems import builtin_problem
from subdiv.solver import (
    BnbNode,
    SolverConfig,
    branch,
    feasibility_check,
    lower_bound_test,
    push_node,
    select_node,
    solve,
    upper_bound_node,
)


def P(src):
    return parse_problem(src)


# --- steps -----------------------------------------------------------------------


def test_feasibility_check_examples():
    g = P("var x in [0.5, 2]; obj: x; con g: x <= 0")
    assert feasibility_check(refine(g)) == "prune"
    h = P("var x in [-1, 1]; obj: x; con h: x == 0")
    assert feasibility_check(refine(h)) == "keep"
    h = P("var x in [0.2, 0.9]; obj: x; con h: x == 0")
    assert feasibility_check(refine(h)) == "prune"
    assert feasibility_check(refine(P("var x in [0,1]; obj: x"))) == "keep"


def test_lower_bound_test_examples():
    cfg = SolverConfig()
    assert lower_bound_test(5, 3, cfg) == "prune"
    assert lower_bound_test(-math.inf, 3, cfg) == "keep"
    assert lower_bound_test(-math.inf, math.inf, cfg) == "keep"
    assert lower_bound_test(3 - cfg.eps_abs / 2, 3, cfg) == "prune"
    # both tolerances must be met
    assert lower_bound_test(1000 - 0.05, 1000, cfg) == "keep"
    assert lower_bound_test(1000 - 0.5 * cfg.eps_abs, 1000, cfg) == "prune"


def test_select_node():
    heap = []
    a = BnbNode(box([(0, 1)]), 1.0, 0, 0)
    b = BnbNode(box([(0, 1)]), 0.5, 0, 1)
    push_node(heap, a)
    push_node(heap, b)
    assert select_node(heap) is b
    assert select_node(heap) is a
    c, d = BnbNode(box([(0, 1)]), 2.0, 0, 7), BnbNode(box([(0, 1)]), 2.0, 0, 3)
    push_node(heap, c)
    push_node(heap, d)
    assert select_node(heap) is d
    assert select_node(heap) is c and not heap


def test_branch():
    left, right = branch(BnbNode(box([(-3, 1), (0, 2)]), -5.0, 2, 0), next_id=9)
    assert left.box == box([(-3, -1), (0, 2)]) and right.box == box([(-1, 1), (0, 2)])
    assert (left.lb, left.depth, left.id, right.id) == (-5.0, 3, 9, 10)
    left, right = branch(BnbNode(box([(0, 1), (0, 1)]), 0.0, 0, 0))
    assert left.box == box([(0, 0.5), (0, 1)])
    with pytest.raises(ValueError, match="cannot branch point box"):
        branch(BnbNode(box([(1, 1), (2, 2)]), 0.0, 0, 0))


def test_branch_children_share_cut_exactly():
    X = box([(0.1, 0.7), (-1e-3, 5.3)])
    left, right = branch(BnbNode(X, 0.0, 0, 0))
    assert left.box[1].hi == right.box[1].lo and left.box[1].lo == X[1].lo and right.box[1].hi == X[1].hi


def test_upper_bound_examples():
    p = P("var x in [-1, 1]; obj: x^2")
    node = BnbNode(p.box, -math.inf, 0, 0)
    c = upper_bound_node(p, node, None, SolverConfig(polish=False))
    assert c.value == 0.0 and c.x[0] == 0.0
    # midpoint violates g, midpoint of the best subdomain is feasible
    p = P("var x in [-1, 1]; obj: x; con g: x + 0.4 <= 0")
    part = partition(p.box, [4])
    ref = refine(p, plan=part)
    c = upper_bound_node(p, node, ref, SolverConfig(polish=False), subdomains=part.arrays())
    assert c.x[0] == -0.75
    # equality that no start can satisfy
    p = P("var x in [-1, 1]; obj: x; con h: x^2 + 1 == 0")
    assert upper_bound_node(p, node, None, SolverConfig()) is None


def test_config_validation():
    for kw in ({"bounder": "x"}, {"partition": "x"}, {"schedule": "x"}, {"target_subdomains": 0},
               {"eps_abs": 0.0}, {"feas_tol": -1.0}, {"workers": 0}, {"time_limit": 0.0}):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


# --- whole runs -------------------------------------------------------------------------


def test_solve_square():
    p = P("var x in [-1, 1]; obj: x^2")
    r = solve(p, SolverConfig(target_subdomains=64))
    assert r.status == "optimal" and abs(r.ub) <= 1e-4 and abs(r.incumbent[0]) <= 1e-2
    assert r.lb == r.ub and r.lb_proven <= r.ub


def test_solve_infeasible():
    p = P("var x in [-1, 1]; obj: x; con g: 1 + x^2 <= 0")
    r = solve(p, SolverConfig(target_subdomains=16))
    assert r.status == "infeasible" and r.incumbent is None
    assert r.nodes_pruned_infeasible == r.iterations == 1 and r.nodes_pruned_bound == 0


def test_solve_peaks():
    r = solve(builtin_problem("peaks"))
    f, x = peaks_minimum()
    assert r.status == "optimal"
    assert abs(r.ub - f) <= 1e-3 and np.max(np.abs(r.incumbent - x)) <= 1e-2
    assert abs(r.ub - (-6.5511)) <= 1e-3


def test_budget_statuses():
    p = builtin_problem("peaks")
    r = solve(p, SolverConfig(bounder="nie", target_subdomains=1, max_iter=25))
    assert r.status == "max_iter" and r.iterations == 25 and r.lb <= r.ub
    r = solve(p, SolverConfig(bounder="nie", target_subdomains=1, time_limit=0.05))
    assert r.status == "time_limit"
    f_star = peaks_minimum()[0]
    assert r.lb <= f_star <= r.ub


def test_history_monotone_and_sound():
    f_star = 2 * stybtang_term_minimum()[0]
    r = solve(builtin_problem("stybtang2"), SolverConfig(target_subdomains=64))
    lbs = [h.lb for h in r.history]
    ubs = [h.ub for h in r.history]
    assert all(a <= b for a, b in zip(lbs, lbs[1:]))
    assert all(a >= b for a, b in zip(ubs, ubs[1:]))
    assert all(h.lb <= h.ub for h in r.history)
    assert all(lb <= f_star + 1e-12 for lb in lbs)
    assert [h.iteration for h in r.history] == list(range(1, r.iterations + 1))
    assert r.status == "optimal" and abs(r.ub - f_star) <= 1e-2


def test_deterministic_across_workers_and_schedules():
    p = builtin_problem("peaks")
    base = solve(p, SolverConfig(target_subdomains=256))
    for schedule, workers in (("staged", 4), ("fused", 1), ("fused", 3)):
        other = solve(p, SolverConfig(target_subdomains=256, schedule=schedule, workers=workers))
        assert other.same_outcome(base)


def test_equality_constrained():
    p = P("var x in [-2, 2]; var y in [-2, 2]; obj: x + y; con h: x^2 + y^2 - 1 == 0")
    r = solve(p, SolverConfig(target_subdomains=64))
    assert r.status == "optimal"
    assert abs(r.ub + math.sqrt(2)) <= 1e-3
    assert abs(r.incumbent[0] ** 2 + r.incumbent[1] ** 2 - 1) <= 1e-6
