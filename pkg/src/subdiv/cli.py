"""Command-line front end: ``subdiv solve``, ``subdiv bench``, ``subdiv list``.

Exit codes: 0 optimal, 2 iteration/time budget exhausted, 3 infeasible,
1 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from typing import Sequence

from .dag import Problem
from .parser import ParseError, parse_file
from .problems import UnknownProblem, builtin_names, builtin_problem
from .solver import SolverConfig, SolverResult, solve

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_INFEASIBLE = 0, 1, 2, 3
HISTORY_COLUMNS = ("iteration", "nodes_open", "lb", "ub", "gap", "wall_ms")
SWEEP_COLUMNS = ("problem", "bounder", "partition", "subdomains", "root_lb", "iterations", "status", "wall_ms")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threads(text: str) -> int:
    if text == "max":
        return os.cpu_count() or 1
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid thread count {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("thread count must be >= 1")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("counts must be a non-empty list of integers >= 1")
    return values


def _choice_list(choices: Sequence[str]):
    def parse(text: str) -> list[str]:
        values = [t.strip() for t in text.split(",") if t.strip()]
        bad = [v for v in values if v not in choices]
        if not values or bad:
            raise argparse.ArgumentTypeError(f"expected a comma-separated subset of {','.join(choices)}")
        return values

    return parse


def _positive(kind):
    def parse(text: str):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError("value must be > 0")
        return value

    return parse


def _default_threads() -> int:
    env = os.environ.get("SUBDIV_THREADS")
    if not env:
        return 1
    try:
        return _threads(env)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"SUBDIV_THREADS: {exc}") from None


def _add_solver_flags(p: argparse.ArgumentParser, subdomains: bool) -> None:
    p.add_argument("--partition", choices=("uniform", "largest", "adaptive"), default="adaptive")
    if subdomains:
        p.add_argument("--bounder", choices=("nie", "mvf"), default="mvf")
        p.add_argument("--subdomains", type=_positive(int), default=1024, metavar="N")
    p.add_argument("--schedule", choices=("fused", "staged"), default="staged")
    p.add_argument("--threads", type=_threads, default=None, metavar="T", help="worker count or 'max' (default: $SUBDIV_THREADS or 1)")
    p.add_argument("--eps-abs", type=_positive(float), default=1e-4, metavar="A")
    p.add_argument("--eps-rel", type=_positive(float), default=1e-4, metavar="R")
    p.add_argument("--feas-tol", type=_positive(float), default=1e-6, metavar="F")
    p.add_argument("--max-iter", type=_positive(int), default=100_000, metavar="M")
    p.add_argument("--time-limit", type=_positive(float), default=math.inf, metavar="S", help="seconds")
    p.add_argument("--weights", default=None, help="weights file for built-in surrogate problems")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="subdiv", description="Interval branch and bound with subdomain lower bounding.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="solve a problem file or built-in problem")
    s.add_argument("problem", help="problem file or built-in name")
    _add_solver_flags(s, subdomains=True)
    s.add_argument("--log", default=None, metavar="OUT.csv", help="write the iteration history as CSV")

    b = sub.add_parser("bench", help="sweep subdomain counts and bounders")
    b.add_argument("problem", help="problem file or built-in name")
    b.add_argument("--subdomains", type=_int_list, default=[1, 4, 16, 64, 256, 1024], metavar="N1,N2,...")
    b.add_argument("--bounders", type=_choice_list(("nie", "mvf")), default=["nie", "mvf"])
    b.add_argument("--partitions", type=_choice_list(("uniform", "largest", "adaptive")), default=None)
    b.add_argument("--repetitions", type=_positive(int), default=1)
    b.add_argument("--out", default=None, metavar="OUT.csv", help="write the table here instead of stdout")
    _add_solver_flags(b, subdomains=False)

    sub.add_parser("list", help="list built-in problems")
    return ap


def load_problem(target: str, weights: str | None = None) -> Problem:
    if os.path.isfile(target):
        return parse_file(target)
    if target in builtin_names():
        return builtin_problem(target, weights)
    try:
        return builtin_problem(target, weights)
    except UnknownProblem:
        raise UsageError(f"{target}: no such file or built-in problem") from None


def _config(args, bounder: str, partition: str, subdomains: int, threads: int) -> SolverConfig:
    return SolverConfig(
        bounder=bounder,
        partition=partition,
        target_subdomains=subdomains,
        schedule=args.schedule,
        workers=threads,
        eps_abs=args.eps_abs,
        eps_rel=args.eps_rel,
        max_iter=args.max_iter,
        time_limit=args.time_limit,
        feas_tol=args.feas_tol,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def _gap(lb: float, ub: float) -> float:
    return 0.0 if lb == ub else ub - lb


def history_rows(result: SolverResult) -> list[list[str]]:
    return [
        [str(h.iteration), str(h.nodes_open), _fmt(h.lb), _fmt(h.ub), _fmt(_gap(h.lb, h.ub)), f"{h.wall_ms:.3f}"]
        for h in result.history
    ]


def write_csv(path_or_file, header, rows) -> None:
    if hasattr(path_or_file, "write"):
        w = csv.writer(path_or_file, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
        write_csv(fh, header, rows)


def exit_code(status: str) -> int:
    return {"optimal": EXIT_OK, "infeasible": EXIT_INFEASIBLE}.get(status, EXIT_BUDGET)


def summary(problem: Problem, config: SolverConfig, r: SolverResult) -> str:
    lines = [
        f"problem     {problem.name}  (n={problem.n}, {len(problem.ineq)} ineq, {len(problem.eq)} eq, {len(problem.nodes)} DAG nodes)",
        f"config      bounder={config.bounder} partition={config.partition} subdomains={config.target_subdomains} "
        f"schedule={config.schedule} threads={config.workers}",
        f"status      {r.status}",
        f"ub          {r.ub!r}",
        f"lb          {r.lb!r}",
        f"gap         {r.gap!r}",
    ]
    if r.incumbent is not None:
        lines.append("incumbent   " + ", ".join(f"{nm}={float(v)!r}" for nm, v in zip(problem.names, r.incumbent)))
    lines += [
        f"iterations  {r.iterations}",
        f"nodes       {r.nodes_created} created, {r.nodes_pruned_bound} pruned by bound, "
        f"{r.nodes_pruned_infeasible} pruned as infeasible",
        f"wall_ms     {r.wall_ms:.1f}",
    ]
    return "\n".join(lines)


def cmd_solve(args) -> int:
    problem = load_problem(args.problem, args.weights)
    threads = args.threads if args.threads is not None else _default_threads()
    config = _config(args, args.bounder, args.partition, args.subdomains, threads)
    result = solve(problem, config)
    print(summary(problem, config, result))
    if args.log:
        write_csv(args.log, HISTORY_COLUMNS, history_rows(result))
    return exit_code(result.status)


def bench_rows(problem: Problem, args, threads: int) -> list[list[str]]:
    partitions = args.partitions or [args.partition]
    rows = []
    for partition in partitions:
        for bounder in args.bounders:
            for count in args.subdomains:
                config = _config(args, bounder, partition, count, threads)
                best_ms, result = math.inf, None
                for _ in range(args.repetitions):
                    t0 = time.monotonic()
                    result = solve(problem, config)
                    best_ms = min(best_ms, (time.monotonic() - t0) * 1e3)
                rows.append(
                    [problem.name, bounder, partition, str(count), _fmt(result.root_lb),
                     str(result.iterations), result.status, f"{best_ms:.3f}"]
                )
    return rows


def cmd_bench(args) -> int:
    problem = load_problem(args.problem, args.weights)
    threads = args.threads if args.threads is not None else _default_threads()
    rows = bench_rows(problem, args, threads)
    write_csv(args.out or sys.stdout, SWEEP_COLUMNS, rows)
    return EXIT_OK


def cmd_list(args) -> int:
    for name in builtin_names():
        print(name)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return {"solve": cmd_solve, "bench": cmd_bench, "list": cmd_list}[args.command](args)
    except ParseError as exc:
        print(f"subdiv: error: {args.problem}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, UnknownProblem, OSError) as exc:
        print(f"subdiv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
