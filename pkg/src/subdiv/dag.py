"""Factorable functions as a shared DAG of intrinsic operations.

Nodes are stored in topological order (children before parents).  A
:class:`Problem` designates the objective and constraint roots inside one
graph, so subexpressions shared between them are evaluated once.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from . import ivec
from .arith import INTERVAL, REAL
from .interval import DomainViolation, Interval, IntervalBox
from .ivec import IVec

UNARY_OPS = ("neg", "sqrt", "exp", "log", "sin", "cos", "tanh", "pow")
BINARY_OPS = ("add", "sub", "mul", "div")


@dataclass(frozen=True)
class DagNode:
    kind: str  # const | var | unary | binary
    op: str = ""
    args: tuple = ()
    value: float = 0.0
    index: int = -1
    k: int = 0  # integer exponent for op == "pow"


class DagBuilder:
    """Appends nodes in topological order, sharing syntactically identical
    subtrees when ``cse`` is on."""

    def __init__(self, cse: bool = True):
        self.cse = cse
        self.nodes: list[DagNode] = []
        self._memo: dict = {}

    def _emit(self, node: DagNode, key) -> int:
        if self.cse and key in self._memo:
            return self._memo[key]
        self.nodes.append(node)
        nid = len(self.nodes) - 1
        if self.cse:
            self._memo[key] = nid
        return nid

    def var(self, index: int) -> int:
        # variables are always shared: a variable is one leaf
        key = ("var", index)
        if key in self._memo:
            return self._memo[key]
        self.nodes.append(DagNode("var", index=index))
        self._memo[key] = len(self.nodes) - 1
        return self._memo[key]

    def const(self, value: float) -> int:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"constant must be finite, got {value}")
        return self._emit(DagNode("const", value=value), ("const", struct.pack("<d", value)))

    def unary(self, op: str, a: int, k: int = 0) -> int:
        if op not in UNARY_OPS:
            raise ValueError(f"unknown unary intrinsic {op!r}")
        return self._emit(DagNode("unary", op, (a,), k=int(k)), ("unary", op, a, int(k)))

    def binary(self, op: str, a: int, b: int) -> int:
        if op not in BINARY_OPS:
            raise ValueError(f"unknown binary intrinsic {op!r}")
        return self._emit(DagNode("binary", op, (a, b)), ("binary", op, a, b))

    # small conveniences for programmatic construction
    def add(self, a, b):
        return self.binary("add", a, b)

    def sub(self, a, b):
        return self.binary("sub", a, b)

    def mul(self, a, b):
        return self.binary("mul", a, b)

    def div(self, a, b):
        return self.binary("div", a, b)

    def pow(self, a, k):
        return self.unary("pow", a, k)

    def call(self, op, a):
        return self.unary(op, a)


@dataclass(frozen=True)
class Problem:
    """min f(x) s.t. g_i(x) <= 0, h_j(x) == 0, x in box."""

    box: IntervalBox
    nodes: tuple
    objective: int
    ineq: tuple = ()
    eq: tuple = ()
    names: tuple = ()
    ineq_names: tuple = ()
    eq_names: tuple = ()
    name: str = field(default="problem", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "box", IntervalBox(self.box))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "ineq", tuple(self.ineq))
        object.__setattr__(self, "eq", tuple(self.eq))
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(self.n)))
        if not self.ineq_names:
            object.__setattr__(self, "ineq_names", tuple(f"g{i + 1}" for i in range(len(self.ineq))))
        if not self.eq_names:
            object.__setattr__(self, "eq_names", tuple(f"h{i + 1}" for i in range(len(self.eq))))
        for i, nd in enumerate(self.nodes):
            if any(not 0 <= a < i for a in nd.args):
                raise ValueError(f"node {i} references a later node")
            if nd.kind == "var" and not 0 <= nd.index < self.n:
                raise ValueError(f"node {i}: variable index {nd.index} out of range")
        for r in self.roots:
            if not 0 <= r < len(self.nodes):
                raise ValueError(f"root {r} is not a node")
        if len(self.names) != self.n:
            raise ValueError("one name per variable required")

    @property
    def n(self) -> int:
        return len(self.box)

    @property
    def roots(self) -> tuple:
        return (self.objective, *self.ineq, *self.eq)

    @cached_property
    def var_deps(self) -> tuple:
        """Per node, a bitmask of the variables it depends on."""
        deps = []
        for nd in self.nodes:
            if nd.kind == "var":
                deps.append(1 << nd.index)
            else:
                m = 0
                for a in nd.args:
                    m |= deps[a]
                deps.append(m)
        return tuple(deps)

    def reachable(self, roots: Sequence[int]) -> tuple:
        return self._reachable(tuple(roots))

    @cached_property
    def _reach_cache(self) -> dict:
        return {}

    def _reachable(self, roots: tuple) -> tuple:
        hit = self._reach_cache.get(roots)
        if hit is not None:
            return hit
        mark = [False] * len(self.nodes)
        stack = list(roots)
        while stack:
            i = stack.pop()
            if not mark[i]:
                mark[i] = True
                stack.extend(self.nodes[i].args)
        out = tuple(i for i, m in enumerate(mark) if m)
        self._reach_cache[roots] = out
        return out

    def with_box(self, box) -> Problem:
        return Problem(
            box, self.nodes, self.objective, self.ineq, self.eq,
            self.names, self.ineq_names, self.eq_names, self.name,
        )

    def canonical(self) -> tuple:
        """Structure with node ids renumbered by a depth-first walk from the
        roots, for comparing DAGs built in different orders."""
        order: dict[int, int] = {}
        out: list = []

        def visit(i):
            if i in order:
                return order[i]
            nd = self.nodes[i]
            args = tuple(visit(a) for a in nd.args)
            order[i] = len(out)
            out.append((nd.kind, nd.op, args, nd.value, nd.index, nd.k))
            return order[i]

        roots = tuple(visit(r) for r in self.roots)
        return (
            tuple((d.lo, d.hi) for d in self.box),
            self.names,
            tuple(out),
            roots,
            len(self.ineq),
            len(self.eq),
        )


def run_values(problem: Problem, ar, inputs: Sequence, needed: Sequence[int], lanes: int) -> list:
    """Evaluate the nodes in ``needed`` (topologically ordered) in arithmetic
    ``ar``; ``inputs[i]`` is the value of variable ``i``."""
    nodes = problem.nodes
    vals: list = [None] * len(nodes)
    for i in needed:
        nd = nodes[i]
        kind = nd.kind
        if kind == "var":
            vals[i] = inputs[nd.index]
        elif kind == "const":
            vals[i] = ar.const(nd.value, lanes)
        elif kind == "unary":
            a = vals[nd.args[0]]
            vals[i] = ar.pow_int(a, nd.k) if nd.op == "pow" else getattr(ar, nd.op)(a)
        else:
            vals[i] = getattr(ar, nd.op)(vals[nd.args[0]], vals[nd.args[1]])
    return vals


def eval_real(problem: Problem, root: int, x, arith=REAL):
    """Evaluate ``root`` at point(s) ``x`` of shape ``(n,)`` or ``(n, P)``.

    >>> from subdiv.parser import parse_problem
    >>> p = parse_problem("var x in [0, 1]; obj: x*(1-x);")
    >>> eval_real(p, p.objective, [0.5])
    0.25
    """
    return eval_real_many(problem, (root,), x, arith)[0]


def eval_real_many(problem: Problem, roots: Sequence[int], x, arith=REAL) -> list:
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 1
    pts = x.reshape(problem.n, -1)
    lanes = pts.shape[1]
    vals = run_values(
        problem, arith, [pts[i].copy() for i in range(problem.n)], problem.reachable(roots), lanes
    )
    return [float(vals[r][0]) if scalar else vals[r] for r in roots]


def box_lanes(X: IntervalBox) -> list:
    return [IVec(np.array([d.lo]), np.array([d.hi])) for d in X]


def eval_interval_lanes(problem: Problem, roots: Sequence[int], inputs: Sequence[IVec], ar=INTERVAL) -> list:
    lanes = len(inputs[0])
    vals = run_values(problem, ar, inputs, problem.reachable(tuple(roots)), lanes)
    return [vals[r] for r in roots]


def _to_interval(v: IVec) -> Interval:
    st = int(v.flags[0])
    if st & ivec.DOMAIN:
        raise DomainViolation()
    return Interval(v.lo[0], v.hi[0], clipped=bool(st & ivec.CLIPPED))


def eval_interval(problem: Problem, root: int, X: IntervalBox | None = None) -> Interval:
    """Natural interval extension of ``root`` over ``X`` (default: the problem box).

    A division by an interval containing zero yields an unbounded result rather
    than an error; a wholly out-of-domain argument raises
    :class:`~subdiv.interval.DomainViolation`.
    """
    X = problem.box if X is None else IntervalBox(X)
    (v,) = eval_interval_lanes(problem, (root,), box_lanes(X))
    return _to_interval(v)


class BoundsRecord(NamedTuple):
    obj: Interval
    ineq: tuple
    eq: tuple


def eval_interval_all(problem: Problem, X: IntervalBox | None = None) -> BoundsRecord:
    """Bounds of every root from one shared pass over the DAG."""
    X = problem.box if X is None else IntervalBox(X)
    vs = eval_interval_lanes(problem, problem.roots, box_lanes(X))
    ivs = [_to_interval(v) for v in vs]
    ng = len(problem.ineq)
    return BoundsRecord(ivs[0], tuple(ivs[1 : 1 + ng]), tuple(ivs[1 + ng :]))


# ---------------------------------------------------------------------------
# pretty printing

_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def expr_text(problem: Problem, root: int) -> str:
    """Fully parenthesised source text for ``root``."""
    memo: dict[int, str] = {}

    def go(i):
        if i in memo:
            return memo[i]
        nd = problem.nodes[i]
        if nd.kind == "var":
            s = problem.names[nd.index]
        elif nd.kind == "const":
            s = repr(nd.value) if nd.value >= 0 and not _neg_zero(nd.value) else f"({nd.value!r})"
        elif nd.kind == "binary":
            s = f"({go(nd.args[0])} {_INFIX[nd.op]} {go(nd.args[1])})"
        elif nd.op == "neg":
            inner = go(nd.args[0])
            s = f"(-({inner}))" if problem.nodes[nd.args[0]].kind == "const" else f"(-{inner})"
        elif nd.op == "pow":
            s = f"({go(nd.args[0])}^{nd.k if nd.k >= 0 else f'({nd.k})'})"
        else:
            s = f"{nd.op}({go(nd.args[0])})"
        memo[i] = s
        return s

    return go(root)


def _neg_zero(v: float) -> bool:
    return v == 0.0 and math.copysign(1.0, v) < 0


def to_text(problem: Problem) -> str:
    """Problem source that :func:`subdiv.parser.parse_problem` reads back to
    the same structure."""
    lines = [f"var {nm} in [{d.lo!r}, {d.hi!r}]" for nm, d in zip(problem.names, problem.box)]
    lines.append(f"obj: {expr_text(problem, problem.objective)}")
    for nm, r in zip(problem.ineq_names, problem.ineq):
        lines.append(f"con {nm}: {expr_text(problem, r)} <= 0")
    for nm, r in zip(problem.eq_names, problem.eq):
        lines.append(f"con {nm}: {expr_text(problem, r)} == 0")
    return "\n".join(lines) + "\n"
