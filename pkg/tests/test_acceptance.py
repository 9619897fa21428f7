"""Acceptance suite: one check per criterion, each reported as a PASS/FAIL
line (printed in the pytest terminal summary, or by running this file as a
script).  Thresholds are the documented acceptance tolerances; see
``README.md`` for the list."""

from __future__ import annotations

import math
import os
import time
from typing import NamedTuple

import numpy as np
import pytest

from cases import random_case, sample_box
from oracles import (
    accumulated_ulps,
    peaks_minimum,
    stybtang_hyperbola_minimum,
    stybtang_term_minimum,
)
from subdiv.bounder import estimate_convergence_order, refine
from subdiv.dag import eval_interval_all, eval_real
from subdiv.interval import box
from subdiv.parser import parse_problem
from subdiv.partition import adaptive_counts, partition, partition_uniform
from subdiv.problems import builtin_names, builtin_problem
from subdiv.solver import SolverConfig, solve
from subdiv.tangent import interval_gradient

MAX_WORKERS = os.cpu_count() or 1
BOUNDERS = ("nie", "mvf")


class Outcome(NamedTuple):
    ok: bool
    detail: str


RESULTS: dict[int, tuple[str, Outcome]] = {}


# ---------------------------------------------------------------------------
# 1. inclusion


INTRINSICS = {
    "add": ("var x in [{a}, {b}]; var y in [{c}, {d}]; obj: x + y", None),
    "sub": ("var x in [{a}, {b}]; var y in [{c}, {d}]; obj: x - y", None),
    "mul": ("var x in [{a}, {b}]; var y in [{c}, {d}]; obj: x * y", None),
    "div": ("var x in [{a}, {b}]; var y in [{c}, {d}]; obj: x / y", "nonzero"),
    "neg": ("var x in [{a}, {b}]; obj: -x", None),
    "pow2": ("var x in [{a}, {b}]; obj: x^2", None),
    "pow3": ("var x in [{a}, {b}]; obj: x^3", None),
    "pow-1": ("var x in [{a}, {b}]; obj: x^(-1)", "nonzero"),
    "pow-2": ("var x in [{a}, {b}]; obj: x^(-2)", "nonzero"),
    "sqrt": ("var x in [{a}, {b}]; obj: sqrt(x)", "positive"),
    "log": ("var x in [{a}, {b}]; obj: log(x)", "positive"),
    "exp": ("var x in [{a}, {b}]; obj: exp(x)", None),
    "sin": ("var x in [{a}, {b}]; obj: sin(x)", None),
    "cos": ("var x in [{a}, {b}]; obj: cos(x)", None),
    "tanh": ("var x in [{a}, {b}]; obj: tanh(x)", None),
}


def _intrinsic_box(rng, kind):
    def one():
        c, w = rng.uniform(-6, 6), rng.exponential(2.0)
        a, b = c - w / 2, c + w / 2
        if kind == "positive":
            a, b = abs(a) + 1e-3, abs(a) + 1e-3 + w
        if kind == "nonzero" and a <= 0 <= b:
            a, b = (b + 0.1, b + 0.1 + w) if rng.random() < 0.5 else (a - 0.1 - w, a - 0.1)
        return a, b

    a, b = one()
    c, d = one()
    return dict(a=repr(a), b=repr(b), c=repr(c), d=repr(d))


def _violations(problem, rng, samples) -> int:
    bad = 0
    lo, hi = problem.box.lo, problem.box.hi
    pts = sample_box(rng, lo, hi, samples)
    v = eval_real(problem, problem.objective, pts)
    for bounder in BOUNDERS:
        R = refine(problem, bounder=bounder).hull_obj
        bad += int(np.sum((v < R.lo) | (v > R.hi)))
        # per-subdomain bounds on a small grid
        part = partition(problem.box, adaptive_counts(list(hi - lo), 16))
        ref = refine(problem, plan=part, bounder=bounder)
        idx = np.zeros(samples, dtype=np.int64)
        stride = 1
        for i, cuts in enumerate(part.cuts):
            j = np.clip(np.searchsorted(cuts, pts[i], side="right") - 1, 0, len(cuts) - 2)
            idx += j * stride
            stride *= len(cuts) - 1
        bad += int(np.sum((v < ref.lo[0, idx]) | (v > ref.hi[0, idx])))
    return bad


def check_1_inclusion() -> Outcome:
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    bad = cases = 0
    for name, (src, kind) in INTRINSICS.items():
        for _ in range(10):
            p = parse_problem(src.format(**_intrinsic_box(rng, kind)))
            bad += _violations(p, rng, 10_000)
            cases += 1
    for _ in range(200):
        bad += _violations(random_case(rng), rng, 10_000)
        cases += 1
    dt = time.monotonic() - t0
    return Outcome(bad == 0 and dt < 60, f"{cases} boxes x 10^4 samples, nie+mvf: {bad} violations, {dt:.1f} s")


# ---------------------------------------------------------------------------
# 2. interval-extension property


def check_2_degenerate() -> Outcome:
    rng = np.random.default_rng(102)
    worst = {b: 0.0 for b in BOUNDERS}
    bad = 0
    for bounder in BOUNDERS:
        for _ in range(1000):
            p = random_case(rng)
            x = sample_box(rng, p.box.lo, p.box.hi, 1, corners=False)[:, 0]
            R = refine(p, X=box([(v, v) for v in x]), bounder=bounder).hull_obj
            v = eval_real(p, p.objective, x)
            A = max(accumulated_ulps(p, p.objective, x), float(np.spacing(abs(v))))
            slack = max(v - R.lo, R.hi - v) / A
            worst[bounder] = max(worst[bounder], slack)
            if not (R.lo <= v <= R.hi) or slack > 8:
                bad += 1
    detail = ", ".join(f"{b} worst {worst[b]:.2f}" for b in BOUNDERS)
    return Outcome(bad == 0, f"2x1000 cases, slack in accumulated ulps: {detail}; {bad} over 8")


# ---------------------------------------------------------------------------
# 3. convergence orders


def check_3_convergence() -> Outcome:
    t0 = time.monotonic()
    probs = {
        "x(1-x)": parse_problem("var x in [0,1]; obj: x*(1-x)"),
        "sin(x)y^2": parse_problem("var x in [0,1]; var y in [1,2]; obj: sin(x)*y^2"),
    }
    ok, parts = True, []
    for name, p in probs.items():
        for bounder in BOUNDERS:
            fit = estimate_convergence_order(p, bounder=bounder, Ns=(2, 4, 8, 16, 32), samples=10**6)
            if bounder == "nie":
                good = fit.status == "ok" and -1.3 <= fit.slope <= -0.85
            else:
                good = fit.status == "ok" and fit.slope <= -1.7
            ok &= good
            shown = f"{fit.slope:.3f}" if fit.status == "ok" else "exact (zero excess width)"
            parts.append(f"{name} {bounder} {shown}{'' if good else ' [fail]'}")
    dt = time.monotonic() - t0
    ok &= dt < 10
    return Outcome(ok, "; ".join(parts) + f"; {dt:.1f} s")


# ---------------------------------------------------------------------------
# 4. refinement dominance and grid nesting


def check_4_nesting() -> Outcome:
    rng = np.random.default_rng(104)
    bad = 0
    for _ in range(100):
        p = random_case(rng)
        for bounder in BOUNDERS:
            unsplit = eval_interval_all(p).obj if bounder == "nie" else refine(p, bounder="mvf").hull_obj
            prev = unsplit
            for N in (1, 2, 4, 8):
                H = refine(p, plan=[N] * p.n, bounder=bounder).hull_obj
                tol = 2 * np.spacing(max(abs(prev.lo), abs(prev.hi))) if bounder == "mvf" else 0.0
                if H.lo < prev.lo - tol or H.hi > prev.hi + tol:
                    bad += 1
                prev = H
    return Outcome(bad == 0, f"100 cases x N in 1,2,4,8 x nie+mvf: {bad} violations")


# ---------------------------------------------------------------------------
# 5. schedule equivalence


def check_5_schedules() -> Outcome:
    rng = np.random.default_rng(105)
    problems = [random_case(rng) for _ in range(100)]
    problems += [builtin_problem(n) for n in builtin_names() if n != "kinetic-ode"]
    workers = sorted({1, 4, MAX_WORKERS})
    mismatches = compared = 0
    for i, p in enumerate(problems):
        target = 1024 if i >= 100 else int(rng.integers(1, 600))
        plan = partition(p.box, adaptive_counts(list(p.box.hi - p.box.lo), target)).plan
        for bounder in BOUNDERS:
            base = refine(p, plan=plan, bounder=bounder, schedule="staged", workers=1)
            for w in workers:
                for schedule in ("staged", "fused"):
                    if (w, schedule) == (1, "staged"):
                        continue
                    other = refine(p, plan=plan, bounder=bounder, schedule=schedule, workers=w)
                    compared += 1
                    mismatches += not other.bitwise_equal(base)
    return Outcome(
        mismatches == 0,
        f"{len(problems)} problems, workers {workers}, {compared} comparisons: {mismatches} mismatches",
    )


# ---------------------------------------------------------------------------
# 6. partitioning


def _union_exact(part) -> bool:
    lo, hi = part.arrays()
    for i, (d, N) in enumerate(zip(part.box, part.plan.counts)):
        los = np.unique(lo[i])
        his = np.unique(hi[i])
        if not (los[0] == d.lo and his[-1] == d.hi):
            return False
        # consecutive subintervals share endpoints bit for bit
        if len(los) == N and not np.array_equal(los[1:], his[:-1]):
            return False
        if len(los) != N and d.lo != d.hi:
            return False
    return len({tuple(c) for c in np.vstack([lo, hi]).T}) == part.total or any(d.lo == d.hi for d in part.box)


def check_6_partition() -> Outcome:
    part = partition_uniform(box([(-3, 1), (0, 2)]), 4)
    got = [tuple((d.lo, d.hi) for d in X) for X in part]
    want = [((-3, -1), (0, 1)), ((-1, 1), (0, 1)), ((-3, -1), (1, 2)), ((-1, 1), (1, 2))]
    uniform_ok = got == want
    counts = adaptive_counts([1.0] * 5, 2560)
    adaptive_ok = counts == [5, 5, 5, 5, 4] and math.prod(counts) == 2500
    rng = np.random.default_rng(106)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        c = rng.uniform(-100, 100, n) * 10.0 ** rng.integers(-5, 3, n)
        w = rng.uniform(0.0, 10.0, n) * 10.0 ** rng.integers(-9, 2, n)
        X = box(zip(c - w / 2, c + w / 2))
        bad += not _union_exact(partition(X, [int(v) for v in rng.integers(1, 9, n)]))
    return Outcome(
        uniform_ok and adaptive_ok and bad == 0,
        f"uniform example {'ok' if uniform_ok else 'wrong'}; adaptive {tuple(counts)} total {math.prod(counts)}; "
        f"1000 random plans: {bad} inexact unions",
    )


# ---------------------------------------------------------------------------
# 7. end-to-end optimization


def check_7_end_to_end() -> Outcome:
    f_peaks, x_peaks = peaks_minimum()
    f_sty = 2 * stybtang_term_minimum()[0]
    cfg = SolverConfig(target_subdomains=1024, workers=4)
    t0 = time.monotonic()
    rp = solve(builtin_problem("peaks"), cfg)
    tp = time.monotonic() - t0
    t0 = time.monotonic()
    rs = solve(builtin_problem("stybtang2"), cfg)
    ts = time.monotonic() - t0
    peaks_ok = (
        rp.status == "optimal"
        and abs(rp.ub - (-6.5511)) <= 1e-3
        and abs(rp.ub - f_peaks) <= 1e-3
        and np.max(np.abs(rp.incumbent - np.array([0.228, -1.626]))) <= 1e-2
        and tp < 120
    )
    sty_ok = rs.status == "optimal" and abs(rs.ub - (-78.332)) <= 1e-2 and abs(rs.ub - f_sty) <= 1e-2 and ts < 120
    return Outcome(
        peaks_ok and sty_ok,
        f"peaks ub {rp.ub:.6f} (oracle {f_peaks:.6f}) at ({rp.incumbent[0]:.4f}, {rp.incumbent[1]:.4f}), "
        f"{rp.iterations} it, {tp:.1f} s; stybtang2 ub {rs.ub:.5f} (oracle {f_sty:.5f}), {rs.iterations} it, {ts:.1f} s",
    )


# ---------------------------------------------------------------------------
# 8. subdomain-count trends on Peaks

NIE_BUDGET = 20_000


def check_8_trends() -> Outcome:
    p = builtin_problem("peaks")
    counts = (1, 4, 16, 64, 256, 1024)
    root = [refine(p, plan=partition(p.box, adaptive_counts([6.0, 6.0], c)).plan).hull_obj.lo for c in counts]
    lb_ok = all(a <= b for a, b in zip(root, root[1:]))
    mvf = {c: solve(p, SolverConfig(target_subdomains=c)) for c in (1, 64, 256, 1024)}
    it = {c: r.iterations for c, r in mvf.items()}
    it_ok = it[1024] <= it[64] <= it[1] and all(r.status == "optimal" for r in mvf.values())
    order_ok, parts = True, []
    for c in (64, 256, 1024):
        r = solve(p, SolverConfig(bounder="nie", target_subdomains=c, max_iter=NIE_BUDGET))
        # a run stopped by the budget needs at least NIE_BUDGET iterations
        shown = f">={r.iterations}" if r.status == "max_iter" else str(r.iterations)
        order_ok &= it[c] <= r.iterations
        parts.append(f"{c}: mvf {it[c]} vs nie {shown}")
    return Outcome(
        lb_ok and it_ok and order_ok,
        "root lb " + ", ".join(f"{v:.4g}" for v in root)
        + f"; mvf iterations 1/64/1024 = {it[1]}/{it[64]}/{it[1024]}; " + "; ".join(parts),
    )


# ---------------------------------------------------------------------------
# 9. constraint handling


def _residual(problem, x) -> float:
    res = [max(0.0, eval_real(problem, r, x)) for r in problem.ineq]
    res += [abs(eval_real(problem, r, x)) for r in problem.eq]
    return max(res)


def check_9_constraints() -> Outcome:
    cfg = SolverConfig()
    pa, pb = builtin_problem("stybtang2-lin"), builtin_problem("stybtang2-eq")
    ra, rb = solve(pa, cfg), solve(pb, cfg)
    f_a = 2 * stybtang_term_minimum()[0]  # the unconstrained minimiser satisfies x1 + x2 <= 0
    f_b = stybtang_hyperbola_minimum()[0]
    res_a, res_b = _residual(pa, ra.incumbent), _residual(pb, rb.incumbent)
    a_ok = ra.status == "optimal" and res_a <= cfg.feas_tol and abs(ra.ub - f_a) <= 1e-2
    b_ok = rb.status == "optimal" and res_b <= cfg.feas_tol and abs(rb.ub - f_b) <= 1e-2
    prune_ok = ra.nodes_pruned_infeasible > 0
    return Outcome(
        a_ok and b_ok and prune_ok,
        f"(a) {ra.status} ub {ra.ub:.5f} (oracle {f_a:.5f}) residual {res_a:.1e}, "
        f"feasibility prunes {ra.nodes_pruned_infeasible}{'' if prune_ok else ' [fail: needs > 0]'}; "
        f"(b) {rb.status} ub {rb.ub:.5f} (oracle {f_b:.5f}) residual {res_b:.1e}",
    )


# ---------------------------------------------------------------------------
# 10. gradient containment


def check_10_gradient() -> Outcome:
    rng = np.random.default_rng(110)
    h = 1e-6
    bad = 0
    for _ in range(1000):
        p = random_case(rng)
        G = interval_gradient(p, p.objective, p.box)
        lo, hi = p.box.lo + 2 * h, p.box.hi - 2 * h
        x = sample_box(rng, lo, hi, 1, corners=False)[:, 0]
        for i, g in enumerate(G):
            e = np.zeros(p.n)
            e[i] = h
            fd = (eval_real(p, p.objective, x + e) - eval_real(p, p.objective, x - e)) / (2 * h)
            tol = 1e-4 * max(1.0, abs(fd))
            bad += not (g.lo - tol <= fd <= g.hi + tol)
    return Outcome(bad == 0, f"1000 (problem, box, point) triples: {bad} violations")


# ---------------------------------------------------------------------------
# 11. parallel and subdomain speedups


def _best_wall(problem, cfg, reps=3) -> float:
    best = math.inf
    for _ in range(reps):
        t0 = time.monotonic()
        solve(problem, cfg)
        best = min(best, time.monotonic() - t0)
    return best


def check_11_speedup() -> Outcome:
    p = builtin_problem("peaks")
    t1 = _best_wall(p, SolverConfig(target_subdomains=1024, schedule="staged", workers=1))
    tmax = _best_wall(p, SolverConfig(target_subdomains=1024, schedule="staged", workers=MAX_WORKERS))
    par_ok = tmax <= 0.6 * t1
    limit = 10 * t1
    r = solve(p, SolverConfig(bounder="nie", target_subdomains=1, time_limit=limit))
    if r.status == "time_limit":
        sub_ok, shown = True, f">= 10x (nie single interval still open after {limit:.1f} s)"
    else:
        ratio = r.wall_ms / 1e3 / t1
        sub_ok, shown = ratio >= 10, f"{ratio:.1f}x"
    return Outcome(
        par_ok and sub_ok,
        f"{MAX_WORKERS} cpu(s): staged 1024 with {MAX_WORKERS} workers {tmax:.3f} s vs 1 worker {t1:.3f} s "
        f"(ratio {tmax / t1:.2f}, needs <= 0.6){'' if par_ok else ' [fail]'}; "
        f"1024 subdomains vs nie single interval: {shown}",
    )


CHECKS = {
    1: ("inclusion", check_1_inclusion),
    2: ("degenerate boxes", check_2_degenerate),
    3: ("convergence order", check_3_convergence),
    4: ("dominance and nesting", check_4_nesting),
    5: ("schedule equivalence", check_5_schedules),
    6: ("partitioning", check_6_partition),
    7: ("end-to-end optimization", check_7_end_to_end),
    8: ("subdomain trends", check_8_trends),
    9: ("constraint handling", check_9_constraints),
    10: ("gradient containment", check_10_gradient),
    11: ("speedup", check_11_speedup),
}


def format_line(k: int, name: str, out: Outcome) -> str:
    return f"{'PASS' if out.ok else 'FAIL'}  {k:>2} {name}: {out.detail}"


@pytest.mark.parametrize("k", sorted(CHECKS), ids=[f"{k:02d}-{CHECKS[k][0].replace(' ', '-')}" for k in sorted(CHECKS)])
def test_acceptance(k):
    name, fn = CHECKS[k]
    out = fn()
    RESULTS[k] = (name, out)
    print(format_line(k, name, out))
    assert out.ok, out.detail


if __name__ == "__main__":
    for k, (name, fn) in CHECKS.items():
        print(format_line(k, name, fn()), flush=True)
