"""Subdomain lower bounding: bound every root on every subdomain of a
partition and reduce to the interval hull (the refinement).

Two bounders are available:

``nie``
    natural interval extension.
``mvf``
    mean value form ``F(m) + sum_i G_i (X_i - m_i)`` with ``G`` the interval
    gradient from forward sweeps and ``F(m)`` the interval evaluation at the
    (degenerate) midpoint box.  A root falls back to its NIE bound on any
    subdomain where the point value, the gradient or the NIE pass raised a
    status flag.

Two schedules evaluate the same lane kernels in different orders:

``staged``
    node by node over all subdomains, each node's lanes split across workers.
``fused``
    subdomains split into tiles, each worker running the whole DAG on a tile.

Both call the identical elementwise kernels on every lane, so the results
are bitwise equal for any schedule, tile size and worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import ivec
from .arith import INTERVAL
from .dag import BoundsRecord, Problem, eval_interval_all, run_values
from .interval import Interval, IntervalBox
from .ivec import IVec
from .partition import Partition, PartitionPlan, partition, partition_uniform
from .tangent import tangent_sweep

BOUNDERS = ("nie", "mvf")
SCHEDULES = ("staged", "fused")
DEFAULT_TILE = 256
_MIN_CHUNK = 64


@dataclass(frozen=True, eq=False)
class Refinement:
    """Per-subdomain bounds of every root plus their hulls.

    Rows of ``lo``/``hi``/``flags``/``fallback`` follow ``problem.roots``
    (objective, inequalities, equalities); columns are subdomains.
    """

    lo: np.ndarray
    hi: np.ndarray
    flags: np.ndarray
    fallback: np.ndarray
    n_ineq: int
    plan: PartitionPlan

    @property
    def total(self) -> int:
        return self.lo.shape[1]

    def _hull(self, row: int) -> Interval:
        lo = float(np.min(self.lo[row]))
        hi = float(np.max(self.hi[row]))
        return Interval(lo, hi, clipped=bool(np.any(self.flags[row])))

    def bounds(self, row: int) -> list[Interval]:
        return [
            Interval(float(a), float(b), clipped=bool(f))
            for a, b, f in zip(self.lo[row], self.hi[row], self.flags[row])
        ]

    @property
    def obj_bounds(self) -> list[Interval]:
        return self.bounds(0)

    @property
    def con_bounds(self) -> list[list[Interval]]:
        return [self.bounds(r) for r in range(1, self.lo.shape[0])]

    @property
    def hull_obj(self) -> Interval:
        return self._hull(0)

    @property
    def hull_ineq(self) -> tuple:
        return tuple(self._hull(r) for r in range(1, 1 + self.n_ineq))

    @property
    def hull_eq(self) -> tuple:
        return tuple(self._hull(r) for r in range(1 + self.n_ineq, self.lo.shape[0]))

    @property
    def hull_con(self) -> tuple:
        return self.hull_ineq + self.hull_eq

    @property
    def clipped(self) -> np.ndarray:
        """Per subdomain: some root carried a status flag."""
        return np.any(self.flags != 0, axis=0)

    def record(self) -> BoundsRecord:
        return BoundsRecord(self.hull_obj, self.hull_ineq, self.hull_eq)

    def bitwise_equal(self, other: Refinement) -> bool:
        return (
            self.plan == other.plan
            and self.n_ineq == other.n_ineq
            and all(
                a.shape == b.shape and a.tobytes() == b.tobytes()
                for a, b in (
                    (self.lo, other.lo),
                    (self.hi, other.hi),
                    (self.flags, other.flags),
                    (self.fallback, other.fallback),
                )
            )
        )


class _ChunkedArithmetic:
    """Interval arithmetic that splits every lane operation into fixed chunks
    run on a thread pool (the kernels release the GIL)."""

    def __init__(self, pool: ThreadPoolExecutor, slices: Sequence[slice]):
        self.pool = pool
        self.slices = list(slices)

    def _map(self, fn, *args):
        parts = list(self.pool.map(lambda sl: fn(*(a[sl] for a in args)), self.slices))
        return IVec.concat(parts)

    def const(self, c, n):
        return IVec.const(c, n)

    def zero(self, like):
        return IVec.const(0.0, len(like))

    def one(self, like):
        return IVec.const(1.0, len(like))

    def pow_int(self, a, k):
        return self._map(lambda x: ivec.pow_int(x, k), a)


for _name, _fn in {**ivec.UNARY, **ivec.BINARY}.items():
    setattr(_ChunkedArithmetic, _name, (lambda fn: lambda self, *a: self._map(fn, *a))(_fn))


def _bound_lanes(problem: Problem, lo: np.ndarray, hi: np.ndarray, bounder: str, ar):
    """Bounds of all roots on the subdomains given as lane arrays ``(n, S)``."""
    roots = problem.roots
    needed = problem.reachable(roots)
    S = lo.shape[1]
    inputs = [IVec(np.ascontiguousarray(lo[i]), np.ascontiguousarray(hi[i])) for i in range(problem.n)]
    vals = run_values(problem, ar, inputs, needed, S)
    nie = [vals[r] for r in roots]
    out_lo = np.array([v.lo for v in nie]).reshape(len(roots), S)
    out_hi = np.array([v.hi for v in nie]).reshape(len(roots), S)
    flags = np.array([v.flags for v in nie], dtype=np.uint8).reshape(len(roots), S)
    fallback = np.zeros((len(roots), S), dtype=bool)
    if bounder == "mvf":
        mids = [IVec.point(ivec.midpoint(lo[i], hi[i])) for i in range(problem.n)]
        at_mid = run_values(problem, ar, mids, needed, S)
        centered = [ar.sub(inputs[i], mids[i]) for i in range(problem.n)]
        acc = [at_mid[r] for r in roots]
        for s in range(problem.n):
            ders = tangent_sweep(problem, ar, vals, s, needed)
            for j, r in enumerate(roots):
                if ders[r] is not None:
                    acc[j] = ar.add(acc[j], ar.mul(ders[r], centered[s]))
        for j, v in enumerate(acc):
            bad = (v.flags != 0) | (flags[j] != 0) | ~np.isfinite(v.lo) | ~np.isfinite(v.hi)
            fallback[j] = bad
            out_lo[j] = np.where(bad, out_lo[j], v.lo)
            out_hi[j] = np.where(bad, out_hi[j], v.hi)
    nan = np.isnan(out_lo) | np.isnan(out_hi)
    if nan.any():  # never expected; keep the result an enclosure regardless
        out_lo[nan] = -math.inf
        out_hi[nan] = math.inf
        flags[nan] |= ivec.UNBOUNDED
    return out_lo, out_hi, flags, fallback


def _slices(S: int, parts: int) -> list[slice]:
    edges = np.linspace(0, S, parts + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


class BoundingEngine:
    """Reusable bounder/schedule/worker configuration (owns the thread pool)."""

    def __init__(self, bounder: str = "mvf", schedule: str = "staged", workers: int = 1, tile: int = DEFAULT_TILE):
        if bounder not in BOUNDERS:
            raise ValueError(f"unknown bounder {bounder!r}")
        if schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {schedule!r}")
        if workers < 1 or tile < 1:
            raise ValueError("workers and tile must be >= 1")
        self.bounder = bounder
        self.schedule = schedule
        self.workers = int(workers)
        self.tile = int(tile)
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def refine(self, problem: Problem, X: IntervalBox, plan: PartitionPlan | Partition | Sequence[int]) -> Refinement:
        part = plan if isinstance(plan, Partition) else partition(X, plan)
        lo, hi = part.arrays()
        return self.refine_lanes(problem, lo, hi, part.plan)

    def refine_lanes(self, problem: Problem, lo: np.ndarray, hi: np.ndarray, plan: PartitionPlan) -> Refinement:
        S = lo.shape[1]
        if self.schedule == "fused":
            tiles = _slices(S, max(1, -(-S // self.tile)))
            job = lambda sl: _bound_lanes(problem, lo[:, sl], hi[:, sl], self.bounder, INTERVAL)
            parts = list(self._pool.map(job, tiles)) if self._pool else [job(sl) for sl in tiles]
            res = [np.concatenate([p[i] for p in parts], axis=1) for i in range(4)]
        else:
            ar = INTERVAL
            if self._pool is not None and S >= 2 * _MIN_CHUNK:
                ar = _ChunkedArithmetic(self._pool, _slices(S, min(self.workers, S // _MIN_CHUNK)))
            res = _bound_lanes(problem, lo, hi, self.bounder, ar)
        return Refinement(*res, n_ineq=len(problem.ineq), plan=plan)


def refine(
    problem: Problem,
    X: IntervalBox | None = None,
    plan: PartitionPlan | Partition | Sequence[int] | None = None,
    bounder: str = "mvf",
    schedule: str = "staged",
    workers: int = 1,
    tile: int = DEFAULT_TILE,
) -> Refinement:
    """Bound every root of ``problem`` on every subdomain of ``plan`` over ``X``.

    >>> from subdiv.parser import parse_problem
    >>> p = parse_problem("var x in [0, 1]; obj: x*(1-x);")
    >>> refine(p, plan=[2], bounder="nie").hull_obj
    [0.0, 0.5]
    """
    X = problem.box if X is None else IntervalBox(X)
    plan = [1] * X.n if plan is None else plan
    with BoundingEngine(bounder, schedule, workers, tile) as eng:
        return eng.refine(problem, X, plan)


def bound_nie(problem: Problem, X: IntervalBox | None = None) -> BoundsRecord:
    """Natural interval extension of every root over ``X``."""
    return eval_interval_all(problem, X)


def bound_mvf(problem: Problem, X: IntervalBox | None = None) -> BoundsRecord:
    """Mean value form of every root over ``X`` (NIE where it is not usable)."""
    return refine(problem, X, bounder="mvf").record()


# ---------------------------------------------------------------------------
# convergence order of the excess width


class ConvergenceFit(NamedTuple):
    slope: float
    status: str  # "ok" | "exact"
    Ns: tuple
    excess: tuple


def sampled_range(problem: Problem, root: int, X: IntervalBox, samples: int = 10**6) -> tuple[float, float]:
    """Range of ``root`` over a dense grid of about ``samples`` points (an inner
    estimate of the exact range; grids include the box corners)."""
    from .dag import eval_real

    X = IntervalBox(X)
    per = max(2, int(math.ceil(samples ** (1.0 / X.n))))
    axes = [np.linspace(d.lo, d.hi, per) for d in X]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.array([m.ravel() for m in mesh])
    v = eval_real(problem, root, pts)
    return float(np.min(v)), float(np.max(v))


def estimate_convergence_order(
    problem: Problem,
    X: IntervalBox | None = None,
    bounder: str = "nie",
    Ns: Sequence[int] = (2, 4, 8, 16, 32),
    root: int | None = None,
    samples: int = 10**6,
) -> ConvergenceFit:
    """Least-squares slope of ``log w(E_N)`` against ``log N`` under uniform
    splitting with ``N`` subintervals per dimension.  Points whose excess
    width is under 64 ulps are dropped; with fewer than two points left the
    fit reports status ``"exact"``."""
    X = problem.box if X is None else IntervalBox(X)
    root = problem.objective if root is None else root
    row = problem.roots.index(root)
    flo, fhi = sampled_range(problem, root, X, samples)
    floor = 64 * np.spacing(max(abs(flo), abs(fhi), 1e-300))
    keep_N, keep_E = [], []
    with BoundingEngine(bounder, "staged") as eng:
        for N in Ns:
            ref = eng.refine(problem, X, [N] * X.n)
            h = ref._hull(row)
            E = (h.hi - h.lo) - (fhi - flo)
            if E >= floor:
                keep_N.append(N)
                keep_E.append(E)
    if len(keep_N) < 2:
        return ConvergenceFit(0.0, "exact", tuple(keep_N), tuple(keep_E))
    slope = float(np.polyfit(np.log(keep_N), np.log(keep_E), 1)[0])
    return ConvergenceFit(slope, "ok", tuple(keep_N), tuple(keep_E))
