"""Uniform-per-dimension partitions of a box into subdomains.

Every dimension is cut at a shared breakpoint sequence, so neighbouring
subdomains share endpoints bit for bit, the union is exactly the box, and a
grid with ``2N`` cuts contains every breakpoint of the grid with ``N`` cuts.
Subdomain ``k`` decodes to per-dimension indices in mixed radix with the
first dimension varying fastest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .interval import Interval, IntervalBox

STRATEGIES = ("uniform", "largest", "adaptive")


@dataclass(frozen=True)
class PartitionPlan:
    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if not self.counts or any(c < 1 for c in self.counts):
            raise ValueError(f"subinterval counts must be >= 1, got {self.counts}")

    @property
    def total(self) -> int:
        return math.prod(self.counts)

    @property
    def n(self) -> int:
        return len(self.counts)


def breakpoints(lo: float, hi: float, N: int) -> np.ndarray:
    """``N + 1`` cut points of ``[lo, hi]``: ``lo + j*(w/N)`` rounded to
    nearest, pinned at both ends and clamped monotone."""
    j = np.arange(N + 1, dtype=np.float64)
    w = hi - lo
    if math.isfinite(w):
        bp = lo + j * (w / N)
    else:
        t = j / N
        bp = lo * (1.0 - t) + hi * t
    bp[0], bp[-1] = lo, hi
    bp = np.maximum.accumulate(np.minimum(bp, hi))
    return bp


@dataclass(frozen=True)
class Partition:
    """A plan over a concrete box; ``lo``/``hi`` have shape ``(n, total)``."""

    box: IntervalBox
    plan: PartitionPlan
    cuts: tuple  # per-dimension breakpoint arrays

    @property
    def total(self) -> int:
        return self.plan.total

    def indices(self) -> np.ndarray:
        """Per-dimension subinterval index of every subdomain, ``(n, total)``."""
        k = np.arange(self.total)
        return np.array(np.unravel_index(k, self.plan.counts, order="F")).reshape(self.plan.n, -1)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        idx = self.indices()
        lo = np.empty((self.plan.n, self.total))
        hi = np.empty_like(lo)
        for i, bp in enumerate(self.cuts):
            lo[i] = bp[idx[i]]
            hi[i] = bp[idx[i] + 1]
        return lo, hi

    def subdomain(self, k: int) -> IntervalBox:
        if not 0 <= k < self.total:
            raise IndexError(k)
        js = np.unravel_index(k, self.plan.counts, order="F")
        return IntervalBox(Interval(bp[j], bp[j + 1]) for bp, j in zip(self.cuts, js))

    def __iter__(self) -> Iterator[IntervalBox]:
        return (self.subdomain(k) for k in range(self.total))

    def __len__(self) -> int:
        return self.total


def partition(X: IntervalBox, plan: PartitionPlan | Sequence[int]) -> Partition:
    X = IntervalBox(X)
    plan = plan if isinstance(plan, PartitionPlan) else PartitionPlan(plan)
    if plan.n != X.n:
        raise ValueError(f"plan has {plan.n} dimensions, box has {X.n}")
    return Partition(X, plan, tuple(breakpoints(d.lo, d.hi, c) for d, c in zip(X, plan.counts)))


def _check_target(target: int, what: str) -> int:
    target = int(target)
    if target < 1:
        raise ValueError(f"{what} must be >= 1, got {target}")
    return target


def uniform_count(n: int, target: int) -> int:
    """Largest ``N`` with ``N**n <= target``."""
    N = max(1, int(round(target ** (1.0 / n))))
    while N**n > target:
        N -= 1
    while (N + 1) ** n <= target:
        N += 1
    return N


def partition_uniform(X: IntervalBox, target: int) -> Partition:
    X = IntervalBox(X)
    target = _check_target(target, "target")
    return partition(X, [uniform_count(X.n, target)] * X.n)


def _widest(X: IntervalBox) -> int:
    w = [d.hi - d.lo for d in X]
    return max(range(len(w)), key=lambda i: (w[i], -i))


def partition_largest(X: IntervalBox, M: int) -> Partition:
    X = IntervalBox(X)
    M = _check_target(M, "M")
    counts = [1] * X.n
    counts[_widest(X)] = M
    return partition(X, counts)


def adaptive_counts(widths: Sequence[float], budget: int) -> list[int]:
    """Start uniform, then repeatedly give one more cut to the dimension whose
    current subintervals are widest (lowest index on ties) among those whose
    increment keeps the total within ``budget``."""
    n = len(widths)
    counts = [uniform_count(n, budget)] * n
    total = math.prod(counts)
    live = [i for i in range(n) if widths[i] > 0] or list(range(n))
    while True:
        fits = [i for i in live if total // counts[i] * (counts[i] + 1) <= budget]
        if not fits:
            return counts
        i = max(fits, key=lambda i: (widths[i] / counts[i], -i))
        total = total // counts[i] * (counts[i] + 1)
        counts[i] += 1


def partition_adaptive(X: IntervalBox, budget: int) -> Partition:
    X = IntervalBox(X)
    budget = _check_target(budget, "budget")
    return partition(X, adaptive_counts([d.hi - d.lo for d in X], budget))


def make_partition(X: IntervalBox, strategy: str, target: int) -> Partition:
    if strategy == "uniform":
        return partition_uniform(X, target)
    if strategy == "largest":
        return partition_largest(X, target)
    if strategy == "adaptive":
        return partition_adaptive(X, target)
    raise ValueError(f"unknown partition strategy {strategy!r}")
