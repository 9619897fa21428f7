"""Scalar arithmetics the DAG interpreter and the tangent rules run over.

Each arithmetic exposes the same intrinsic names as the DAG (``add``, ``mul``,
``pow_int``, ``tanh``, ...) plus ``const``/``zero``/``one`` constructors, so
evaluation and differentiation code is written once and reused for real
numbers and for intervals.
"""

from __future__ import annotations

import numpy as np

from . import ivec
from .interval import DivisionDomainViolation, DomainViolation
from .ivec import IVec


class RealArithmetic:
    """Round-to-nearest float64 arithmetic on numpy lanes.

    With ``strict=True`` any lane leaving a natural domain raises; otherwise
    such lanes become NaN.
    """

    def __init__(self, strict: bool = True):
        self.strict = strict

    def _check(self, bad, exc):
        if self.strict and np.any(bad):
            raise exc

    def const(self, c, n):
        return np.full(n, c, dtype=np.float64)

    def zero(self, like):
        return np.zeros_like(like)

    def one(self, like):
        return np.ones_like(like)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        self._check(b == 0, DivisionDomainViolation())
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(b == 0, np.nan, a / np.where(b == 0, 1.0, b))

    def neg(self, a):
        return -a

    def pow_int(self, a, k):
        if k < 0:
            self._check(a == 0, DivisionDomainViolation())
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if k == 2:
                return a * a
            return np.power(a, float(k))

    def sqrt(self, a):
        self._check(a < 0, DomainViolation())
        with np.errstate(invalid="ignore"):
            return np.sqrt(a)

    def exp(self, a):
        with np.errstate(over="ignore"):
            return np.exp(a)

    def log(self, a):
        self._check(a <= 0, DomainViolation())
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(a <= 0, np.nan, np.log(np.where(a <= 0, 1.0, a)))

    def sin(self, a):
        return np.sin(a)

    def cos(self, a):
        return np.cos(a)

    def tanh(self, a):
        return np.tanh(a)


class IntervalArithmetic:
    """Outward-rounded interval arithmetic on :class:`~subdiv.ivec.IVec` lanes."""

    def const(self, c, n):
        return IVec.const(c, n)

    def zero(self, like):
        return IVec.const(0.0, len(like))

    def one(self, like):
        return IVec.const(1.0, len(like))

    add = staticmethod(ivec.add)
    sub = staticmethod(ivec.sub)
    mul = staticmethod(ivec.mul)
    div = staticmethod(ivec.div)
    neg = staticmethod(ivec.neg)
    pow_int = staticmethod(ivec.pow_int)
    sqrt = staticmethod(ivec.sqrt)
    exp = staticmethod(ivec.exp)
    log = staticmethod(ivec.log)
    sin = staticmethod(ivec.sin)
    cos = staticmethod(ivec.cos)
    tanh = staticmethod(ivec.tanh)


REAL = RealArithmetic(strict=True)
REAL_NAN = RealArithmetic(strict=False)
INTERVAL = IntervalArithmetic()
