"""Spatial branch and bound driven by subdomain lower bounding.

Each iteration pops the open node with the smallest lower bound, refines its
box (partition, bound every subdomain, take hulls), prunes it on a violated
constraint hull or on the lower-bound test, tries to improve the incumbent
from a couple of candidate points, and otherwise bisects it.  Children are
bounded lazily when they are popped.  The loop is single threaded; all
parallelism lives in the bounding engine, so runs are deterministic.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .arith import REAL_NAN
from .bounder import BOUNDERS, SCHEDULES, BoundingEngine, Refinement
from .dag import Problem, eval_real_many
from .interval import Interval, IntervalBox
from .ivec import midpoint as _lane_midpoint
from .partition import STRATEGIES, breakpoints, make_partition
from .tangent import real_gradient

STATUSES = ("optimal", "max_iter", "time_limit", "infeasible")


@dataclass(frozen=True)
class SolverConfig:
    bounder: str = "mvf"
    partition: str = "adaptive"
    target_subdomains: int = 1024
    schedule: str = "staged"
    workers: int = 1
    eps_abs: float = 1e-4
    eps_rel: float = 1e-4
    max_iter: int = 100_000
    time_limit: float = math.inf
    feas_tol: float = 1e-6
    tile: int = 256
    polish: bool = True

    def __post_init__(self):
        if self.bounder not in BOUNDERS:
            raise ValueError(f"unknown bounder {self.bounder!r}")
        if self.partition not in STRATEGIES:
            raise ValueError(f"unknown partition strategy {self.partition!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.target_subdomains < 1:
            raise ValueError("target_subdomains must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not (self.eps_abs > 0 and self.eps_rel > 0 and self.feas_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 0 or not self.time_limit > 0:
            raise ValueError("max_iter must be >= 0 and time_limit > 0")


@dataclass(frozen=True)
class BnbNode:
    box: IntervalBox
    lb: float
    depth: int
    id: int


class HistoryRow(NamedTuple):
    iteration: int
    nodes_open: int
    lb: float
    ub: float
    wall_ms: float


class Candidate(NamedTuple):
    x: np.ndarray
    value: float


@dataclass
class SolverResult:
    status: str
    incumbent: np.ndarray | None
    ub: float
    lb: float
    iterations: int
    nodes_created: int
    nodes_pruned_bound: int
    nodes_pruned_infeasible: int
    history: list = field(default_factory=list)
    root_lb: float = -math.inf
    lb_proven: float = -math.inf  # min lb over open and bound-pruned nodes
    nodes_unbranchable: int = 0
    wall_ms: float = 0.0

    @property
    def gap(self) -> float:
        return 0.0 if self.ub == self.lb else self.ub - self.lb

    def same_outcome(self, other: SolverResult) -> bool:
        """Equal in everything except wall-clock times."""
        strip = lambda h: [r[:4] for r in h]
        inc = lambda x: None if x is None else x.tobytes()
        return (
            (self.status, inc(self.incumbent), self.ub, self.lb, self.iterations, self.nodes_created,
             self.nodes_pruned_bound, self.nodes_pruned_infeasible, self.root_lb, self.lb_proven)
            == (other.status, inc(other.incumbent), other.ub, other.lb, other.iterations, other.nodes_created,
                other.nodes_pruned_bound, other.nodes_pruned_infeasible, other.root_lb, other.lb_proven)
            and strip(self.history) == strip(other.history)
        )


# ---------------------------------------------------------------------------
# individual steps


def feasibility_check(bounds: Refinement) -> str:
    """``"prune"`` when some inequality hull lies above 0 or some equality
    hull excludes 0, else ``"keep"``."""
    if any(h.lo > 0 for h in bounds.hull_ineq):
        return "prune"
    if any(h.lo > 0 or h.hi < 0 for h in bounds.hull_eq):
        return "prune"
    return "keep"


def lower_bound_test(lb: float, ub: float, config: SolverConfig = SolverConfig()) -> str:
    if lb >= ub - config.eps_abs and lb >= ub - config.eps_rel * max(1.0, abs(ub)):
        return "prune"
    return "keep"


def select_node(open_set: list) -> BnbNode:
    """Pop the best-bound node (smallest lb, then lowest id) from a heap of
    ``(lb, id, node)`` entries."""
    return heapq.heappop(open_set)[2]


def push_node(open_set: list, node: BnbNode) -> None:
    heapq.heappush(open_set, (node.lb, node.id, node))


def branch(node: BnbNode, next_id: int = 0) -> tuple[BnbNode, BnbNode]:
    """Bisect the widest dimension (lowest index on ties) at its middle
    breakpoint; children get ids ``next_id`` and ``next_id + 1``."""
    X = node.box
    widths = [d.hi - d.lo for d in X]
    i = max(range(len(widths)), key=lambda i: (widths[i], -i))
    d = X[i]
    cut = float(breakpoints(d.lo, d.hi, 2)[1])
    if widths[i] == 0 or not d.lo < cut < d.hi:
        raise ValueError("cannot branch point box")
    left = IntervalBox(X[:i] + (Interval(d.lo, cut),) + X[i + 1 :])
    right = IntervalBox(X[:i] + (Interval(cut, d.hi),) + X[i + 1 :])
    return (
        BnbNode(left, node.lb, node.depth + 1, next_id),
        BnbNode(right, node.lb, node.depth + 1, next_id + 1),
    )


class _PointEvaluator:
    """Real evaluation of all roots at a batch of points, NaN for lanes
    outside a natural domain."""

    def __init__(self, problem: Problem, feas_tol: float):
        self.p = problem
        self.tol = feas_tol
        self.ng = len(problem.ineq)

    def __call__(self, pts: np.ndarray):
        vals = eval_real_many(self.p, self.p.roots, pts, REAL_NAN)
        f = np.asarray(vals[0], dtype=np.float64)
        viol = np.zeros_like(f)
        for v in vals[1 : 1 + self.ng]:
            viol = np.maximum(viol, np.where(np.isnan(v), np.inf, np.maximum(v, 0.0)))
        for v in vals[1 + self.ng :]:
            viol = np.maximum(viol, np.where(np.isnan(v), np.inf, np.abs(v)))
        f = np.where(np.isnan(f), np.inf, f)
        return f, viol

    def feasible(self, viol):
        return viol <= self.tol


def _project_equalities(problem: Problem, x: np.ndarray, lo, hi, tol: float, iters: int = 20) -> np.ndarray:
    """Gauss-Newton steps onto ``h(x) = 0`` (minimum-norm updates), clamped
    to the box."""
    if not problem.eq:
        return x
    for _ in range(iters):
        h = np.array(eval_real_many(problem, problem.eq, x[:, None], REAL_NAN), dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(h)) or np.max(np.abs(h)) <= 0.1 * tol:
            break
        J = np.array([real_gradient(problem, r, x[:, None], REAL_NAN)[:, 0] for r in problem.eq])
        if not np.all(np.isfinite(J)):
            break
        step = np.linalg.lstsq(J, h, rcond=None)[0]
        x = np.clip(x - step, lo, hi)
    return x


def upper_bound_node(
    problem: Problem,
    node: BnbNode,
    refinement: Refinement | None,
    config: SolverConfig = SolverConfig(),
    *,
    subdomains=None,
    ub: float = math.inf,
) -> Candidate | None:
    """Best feasible point among the node midpoint and the midpoint of the
    subdomain with the smallest objective bound; ``None`` if neither is
    feasible.  A start that already beats ``ub`` is polished by projected
    coordinate descent."""
    X = node.box
    lo = np.array(X.lo)
    hi = np.array(X.hi)
    starts = [_lane_midpoint(lo, hi)]
    if refinement is not None and subdomains is not None and refinement.total > 1:
        k = int(np.argmin(refinement.lo[0]))
        slo, shi = subdomains
        starts.append(_lane_midpoint(slo[:, k], shi[:, k]))
    ev = _PointEvaluator(problem, config.feas_tol)
    if problem.eq:
        starts = [_project_equalities(problem, s, lo, hi, config.feas_tol) for s in starts]
    pts = np.array(starts).T
    f, viol = ev(pts)
    ok = ev.feasible(viol)
    if not ok.any():
        return None
    j = int(np.argmin(np.where(ok, f, np.inf)))
    best = Candidate(pts[:, j].copy(), float(f[j]))
    if config.polish and best.value < ub:
        best = _coordinate_descent(problem, ev, best, lo, hi, config.feas_tol)
    return best


def _coordinate_descent(problem, ev, best: Candidate, lo, hi, tol, iterations: int = 50) -> Candidate:
    """Try ``x +- step_i e_i`` for every coordinate at once; move to the best
    improving feasible trial, halve the steps when none improves."""
    n = problem.n
    step = (hi - lo) / 4.0
    stop = (hi - lo) * 1e-7
    x, fx = best.x, best.value
    for _ in range(iterations):
        if np.all(step <= stop):
            break
        trials = np.repeat(x[:, None], 2 * n, axis=1)
        idx = np.arange(n)
        trials[idx, 2 * idx] += step
        trials[idx, 2 * idx + 1] -= step
        trials = np.clip(trials, lo[:, None], hi[:, None])
        if problem.eq:
            trials = np.array(
                [_project_equalities(problem, trials[:, t], lo, hi, tol, iters=5) for t in range(2 * n)]
            ).T
        f, viol = ev(trials)
        f = np.where(ev.feasible(viol), f, np.inf)
        t = int(np.argmin(f))
        if f[t] < fx:
            x, fx = trials[:, t].copy(), float(f[t])
        else:
            step = step / 2.0
    return Candidate(x, fx)


# ---------------------------------------------------------------------------
# main loop


def solve(problem: Problem, config: SolverConfig = SolverConfig()) -> SolverResult:
    start = time.monotonic()
    engine = BoundingEngine(config.bounder, config.schedule, config.workers, config.tile)
    open_set: list = []
    push_node(open_set, BnbNode(problem.box, -math.inf, 0, 0))
    next_id = 1
    ub, incumbent = math.inf, None
    pruned_lb = math.inf  # smallest lb among nodes closed by the bound test
    it = pruned_bound = pruned_infeas = unbranchable = 0
    root_lb = -math.inf
    history: list[HistoryRow] = []
    status = "optimal"

    def proven_lb():
        return min(open_set[0][0] if open_set else math.inf, pruned_lb)

    try:
        while open_set:
            if it >= config.max_iter:
                status = "max_iter"
                break
            if time.monotonic() - start >= config.time_limit:
                status = "time_limit"
                break
            node = select_node(open_set)
            it += 1
            part = make_partition(node.box, config.partition, config.target_subdomains)
            slo, shi = part.arrays()
            ref = engine.refine_lanes(problem, slo, shi, part.plan)
            lb = max(node.lb, ref.hull_obj.lo)
            if it == 1:
                root_lb = lb
            if feasibility_check(ref) == "prune":
                pruned_infeas += 1
            else:
                cand = upper_bound_node(problem, node, ref, config, subdomains=(slo, shi), ub=ub)
                if cand is not None and cand.value < ub:
                    ub, incumbent = cand.value, cand.x
                if lower_bound_test(lb, ub, config) == "prune":
                    pruned_bound += 1
                    pruned_lb = min(pruned_lb, lb)
                else:
                    try:
                        kids = branch(BnbNode(node.box, lb, node.depth, node.id), next_id)
                    except ValueError:
                        # box at floating-point resolution: close it but keep
                        # its bound in the certified lower bound
                        unbranchable += 1
                        pruned_lb = min(pruned_lb, lb)
                    else:
                        next_id += 2
                        for kid in kids:
                            push_node(open_set, kid)
            history.append(
                HistoryRow(it, len(open_set), min(proven_lb(), ub), ub, (time.monotonic() - start) * 1e3)
            )
    finally:
        engine.close()

    lb_proven = proven_lb()
    if status == "optimal":
        if incumbent is None:
            status = "infeasible"
            lb = math.inf
        else:
            lb = ub if unbranchable == 0 else min(lb_proven, ub)
    else:
        lb = min(lb_proven, ub)
    return SolverResult(
        status=status,
        incumbent=incumbent,
        ub=ub,
        lb=lb,
        iterations=it,
        nodes_created=next_id,
        nodes_pruned_bound=pruned_bound,
        nodes_pruned_infeasible=pruned_infeas,
        history=history,
        root_lb=root_lb,
        lb_proven=lb_proven,
        nodes_unbranchable=unbranchable,
        wall_ms=(time.monotonic() - start) * 1e3,
    )
