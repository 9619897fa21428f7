"""Forward-mode (tangent) differentiation over a pluggable scalar arithmetic.

A tangent is a ``(val, der)`` pair.  The rules below only ever call the
arithmetic's own operations, so the same code differentiates real lanes and
interval lanes; over intervals the derivative field of the objective encloses
the partial derivative over the whole box.

``der=None`` marks a structurally zero derivative (a node that does not
depend on the seeded variable) and lets sweeps skip work.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .arith import INTERVAL, REAL
from .interval import DomainViolation, Interval, IntervalBox
from . import ivec


@dataclass
class Tangent:
    val: Any
    der: Any = None


@dataclass(frozen=True)
class IntervalGradient:
    components: tuple
    flagged: bool = False

    def __getitem__(self, i):
        return self.components[i]

    def __len__(self):
        return len(self.components)


def der_rule(ar, op: str, a: Tangent, b: Tangent | None, out, k: int = 0):
    """Derivative of ``out = op(a[, b])`` given the operands' tangents."""
    da = a.der
    db = b.der if b is not None else None
    if op == "add":
        if da is None:
            return db
        return da if db is None else ar.add(da, db)
    if op == "sub":
        if db is None:
            return da
        return ar.neg(db) if da is None else ar.sub(da, db)
    if op == "mul":
        if da is None and db is None:
            return None
        if db is None:
            return ar.mul(da, b.val)
        if da is None:
            return ar.mul(a.val, db)
        return ar.add(ar.mul(da, b.val), ar.mul(a.val, db))
    if op == "div":
        if da is None and db is None:
            return None
        if db is None:
            return ar.div(da, b.val)
        t = ar.mul(out, db)
        num = ar.neg(t) if da is None else ar.sub(da, t)
        return ar.div(num, b.val)
    if da is None:
        return None
    if op == "neg":
        return ar.neg(da)
    if op == "pow":
        if k == 0:
            return None
        if k == 1:
            return da
        like = a.val
        kc = ar.const(float(k), len(like)) if hasattr(like, "__len__") else float(k)
        return ar.mul(ar.mul(kc, ar.pow_int(a.val, k - 1)), da)
    if op == "sqrt":
        return ar.div(da, ar.add(out, out))
    if op == "exp":
        return ar.mul(out, da)
    if op == "log":
        return ar.div(da, a.val)
    if op == "sin":
        return ar.mul(ar.cos(a.val), da)
    if op == "cos":
        return ar.neg(ar.mul(ar.sin(a.val), da))
    if op == "tanh":
        return ar.mul(ar.sub(ar.one(out), ar.pow_int(out, 2)), da)
    raise ValueError(f"no tangent rule for {op!r}")


def value_rule(ar, op: str, a, b=None, k: int = 0):
    if op == "pow":
        return ar.pow_int(a, k)
    if b is None:
        return getattr(ar, op)(a)
    return getattr(ar, op)(a, b)


def tangent_rules(op: str, *inputs: Tangent, arith=REAL, k: int = 0) -> Tangent:
    """Apply one intrinsic to tangent operands.

    >>> import numpy as np
    >>> t = tangent_rules("mul", Tangent(np.array([2.0]), np.array([1.0])),
    ...                   Tangent(np.array([3.0]), np.array([0.0])))
    >>> float(t.val[0]), float(t.der[0])
    (6.0, 3.0)
    """
    a = inputs[0]
    b = inputs[1] if len(inputs) > 1 else None
    out = value_rule(arith, op, a.val, None if b is None else b.val, k)
    return Tangent(out, der_rule(arith, op, a, b, out, k))


def tangent_sweep(problem, ar, vals: Sequence, seed: int, needed: Sequence[int]) -> list:
    """One forward sweep seeding variable ``seed``; ``vals`` are the node
    values already computed in arithmetic ``ar``.  Returns per-node
    derivatives (``None`` where structurally zero)."""
    nodes = problem.nodes
    ders: list = [None] * len(nodes)
    deps = problem.var_deps
    for i in needed:
        if not (deps[i] >> seed) & 1:
            continue
        nd = nodes[i]
        if nd.kind == "var":
            ders[i] = ar.one(vals[i])
        elif nd.kind == "unary":
            (ia,) = nd.args
            ders[i] = der_rule(ar, nd.op, Tangent(vals[ia], ders[ia]), None, vals[i], nd.k)
        elif nd.kind == "binary":
            ia, ib = nd.args
            ders[i] = der_rule(
                ar, nd.op, Tangent(vals[ia], ders[ia]), Tangent(vals[ib], ders[ib]), vals[i]
            )
    return ders


def interval_gradient(problem, root: int, X: IntervalBox) -> IntervalGradient:
    """Enclosure of the gradient of ``root`` over ``X`` (one sweep per variable).

    Raises :class:`DomainViolation` when an intrinsic's argument lies wholly
    outside its domain; partial violations and divisions by intervals
    containing zero are reported through ``flagged``.
    """
    from .dag import run_values

    needed = problem.reachable((root,))
    inputs = [ivec.IVec(np.array([d.lo]), np.array([d.hi])) for d in X]
    vals = run_values(problem, INTERVAL, inputs, needed, 1)
    if vals[root].flags[0] & ivec.DOMAIN:
        raise DomainViolation()
    comps = []
    flagged = bool(vals[root].flags[0])
    for s in range(problem.n):
        d = tangent_sweep(problem, INTERVAL, vals, s, needed)[root]
        if d is None:
            comps.append(Interval(0.0, 0.0))
            continue
        flagged = flagged or bool(d.flags[0])
        comps.append(Interval(d.lo[0], d.hi[0]))
    return IntervalGradient(tuple(comps), flagged)


def real_gradient(problem, root: int, x, arith=REAL):
    """Forward-mode gradient at real point(s) ``x`` (shape ``(n,)`` or ``(n, P)``)."""
    from .dag import run_values

    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 1
    pts = x.reshape(problem.n, -1)
    lanes = pts.shape[1]
    needed = problem.reachable((root,))
    vals = run_values(problem, arith, [pts[i].copy() for i in range(problem.n)], needed, lanes)
    out = []
    for s in range(problem.n):
        d = tangent_sweep(problem, arith, vals, s, needed)[root]
        d = np.zeros(lanes) if d is None else d
        out.append(d)
    g = np.array(out)
    return g[:, 0] if scalar else g
