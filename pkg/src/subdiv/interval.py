"""Scalar intervals and interval boxes.

These are thin wrappers over the lane kernels in :mod:`subdiv.ivec`; a scalar
operation is a one-lane batch, so scalar and batched results agree bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import ivec
from .ivec import IVec


class IntervalError(ValueError):
    """Base class for interval-arithmetic failures."""


class DomainViolation(IntervalError):
    """The argument lies wholly outside the natural domain of an intrinsic."""

    def __init__(self, what: str = "domain violation"):
        super().__init__(what)


class DivisionDomainViolation(DomainViolation):
    def __init__(self):
        super().__init__("division domain violation")


class _Empty:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY"

    def __bool__(self):
        return False


EMPTY = _Empty()
"""Result of intersecting two disjoint intervals."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    clipped: bool = field(default=False, compare=False)

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise IntervalError("interval endpoints must not be NaN")
        if lo > hi:
            raise IntervalError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> Interval:
        return cls(x, x)

    def __contains__(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def subset(self, other: Interval) -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    @property
    def width(self) -> float:
        return width(self)

    @property
    def mid(self) -> float:
        return midpoint(self)

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"

    def __add__(self, other):
        return iv_add(self, _coerce(other))

    def __radd__(self, other):
        return iv_add(_coerce(other), self)

    def __sub__(self, other):
        return iv_sub(self, _coerce(other))

    def __rsub__(self, other):
        return iv_sub(_coerce(other), self)

    def __mul__(self, other):
        return iv_mul(self, _coerce(other))

    def __rmul__(self, other):
        return iv_mul(_coerce(other), self)

    def __truediv__(self, other):
        return iv_div(self, _coerce(other))

    def __rtruediv__(self, other):
        return iv_div(_coerce(other), self)

    def __neg__(self):
        return iv_neg(self)

    def __pow__(self, k: int):
        return iv_pow_int(self, k)


def _coerce(x) -> Interval:
    return x if isinstance(x, Interval) else Interval.point(float(x))


class IntervalBox(tuple):
    """An axis-aligned box: a non-empty tuple of :class:`Interval`."""

    def __new__(cls, dims: Iterable):
        dims = [d if isinstance(d, Interval) else Interval(*d) for d in dims]
        if not dims:
            raise IntervalError("a box needs at least one dimension")
        return super().__new__(cls, dims)

    @property
    def n(self) -> int:
        return len(self)

    @property
    def lo(self) -> np.ndarray:
        return np.array([d.lo for d in self])

    @property
    def hi(self) -> np.ndarray:
        return np.array([d.hi for d in self])

    @property
    def width(self) -> float:
        return width(self)

    @property
    def mid(self) -> np.ndarray:
        return np.array([midpoint(d) for d in self])

    def subset(self, other: IntervalBox) -> bool:
        return len(self) == len(other) and all(a.subset(b) for a, b in zip(self, other))

    def __repr__(self):
        return " x ".join(repr(d) for d in self)


def _lane(x: Interval) -> IVec:
    return IVec(np.array([x.lo]), np.array([x.hi]))


def _unlane(v: IVec) -> Interval:
    st = int(v.flags[0])
    if st & ivec.DOMAIN:
        raise DomainViolation()
    if st & ivec.UNBOUNDED:
        raise DivisionDomainViolation()
    return Interval(v.lo[0], v.hi[0], clipped=bool(st & ivec.CLIPPED))


def width(X) -> float:
    """Width of an interval, or the largest component width of a box.

    Rounded upward, so the result never underestimates ``hi - lo``.
    """
    if isinstance(X, IntervalBox):
        return max(width(d) for d in X)
    lo, hi = ivec._k_sub(np.array([X.hi]), np.array([X.hi]), np.array([X.lo]), np.array([X.lo]))
    return float(hi[0])


def midpoint(X) -> float:
    if isinstance(X, IntervalBox):
        return np.array([midpoint(d) for d in X])
    if math.isinf(X.lo) or math.isinf(X.hi):
        raise IntervalError("unbounded midpoint")
    return float(ivec.midpoint(np.array([X.lo]), np.array([X.hi]))[0])


def hull(X, Y):
    if isinstance(X, IntervalBox):
        return IntervalBox(hull(a, b) for a, b in zip(X, Y))
    return Interval(min(X.lo, Y.lo), max(X.hi, Y.hi))


def intersect(X, Y):
    """Intersection, or :data:`EMPTY` when the operands are disjoint."""
    if isinstance(X, IntervalBox):
        parts = [intersect(a, b) for a, b in zip(X, Y)]
        if any(p is EMPTY for p in parts):
            return EMPTY
        return IntervalBox(parts)
    lo, hi = max(X.lo, Y.lo), min(X.hi, Y.hi)
    if lo > hi:
        return EMPTY
    return Interval(lo, hi)


def iv_add(X: Interval, Y: Interval) -> Interval:
    return _unlane(ivec.add(_lane(X), _lane(Y)))


def iv_sub(X: Interval, Y: Interval) -> Interval:
    return _unlane(ivec.sub(_lane(X), _lane(Y)))


def iv_mul(X: Interval, Y: Interval) -> Interval:
    return _unlane(ivec.mul(_lane(X), _lane(Y)))


def iv_div(X: Interval, Y: Interval) -> Interval:
    if Y.lo <= 0.0 <= Y.hi:
        raise DivisionDomainViolation()
    return _unlane(ivec.div(_lane(X), _lane(Y)))


def iv_neg(X: Interval) -> Interval:
    return Interval(-X.hi, -X.lo)


def iv_pow_int(X: Interval, k: int) -> Interval:
    if k != int(k):
        raise IntervalError("iv_pow_int needs an integer exponent")
    return _unlane(ivec.pow_int(_lane(X), int(k)))


def iv_sqrt(X: Interval) -> Interval:
    return _unlane(ivec.sqrt(_lane(X)))


def iv_exp(X: Interval) -> Interval:
    return _unlane(ivec.exp(_lane(X)))


def iv_log(X: Interval) -> Interval:
    return _unlane(ivec.log(_lane(X)))


def iv_sin(X: Interval) -> Interval:
    return _unlane(ivec.sin(_lane(X)))


def iv_cos(X: Interval) -> Interval:
    return _unlane(ivec.cos(_lane(X)))


def iv_tanh(X: Interval) -> Interval:
    return _unlane(ivec.tanh(_lane(X)))


def box(bounds: Sequence[Sequence[float]]) -> IntervalBox:
    """``box([(lo, hi), ...])`` shorthand."""
    return IntervalBox(Interval(lo, hi) for lo, hi in bounds)
