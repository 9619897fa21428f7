"""Reader for the problem-definition language.

::

    var x in [-3, 3]
    var y in [-3, 3]
    obj: 3*(1-x)^2*exp(-x^2 - (y+1)^2) - ...
    con c1: x + y <= 0
    con c2: x*y - 1 == 0
    ann net = mlp("weights.json", x, y)

Statements end at a newline or ``;`` (newlines inside brackets are ignored);
``#`` starts a comment.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

from .dag import DagBuilder, Problem
from .interval import Interval, IntervalBox

FUNCTIONS = ("exp", "log", "sin", "cos", "tanh", "sqrt")
_MAX_INT_EXPONENT = 2**31


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # num | id | str | op | sep | eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<str>"[^"\n]*")
  | (?P<op><=|>=|==|[-+*/^()\[\],:;=])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    text = text.replace("−", "-")  # typographic minus
    toks: list[Token] = []
    pos, line, line_start, depth = 0, 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            if depth == 0:
                toks.append(Token("sep", "\\n", line, col))
            line += 1
            line_start = m.end()
        elif kind != "ws":
            if s in "([":
                depth += 1
            elif s in ")]":
                depth = max(0, depth - 1)
            toks.append(Token("sep" if s == ";" else kind, s, line, col))
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


# AST nodes are tuples whose last element is the source token
_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_BP = 25


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind in ("str", "sep"):
            shown = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {shown!r}")
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def at_end_of_statement(self) -> bool:
        return self.tok.kind in ("sep", "eof")

    # expressions -----------------------------------------------------------

    def expr(self, rbp: int = 0):
        if self.at_end_of_statement():
            self.error("expected an expression")
        left = self.prefix()
        while self.tok.kind == "op" and self.tok.text in _BP and _BP[self.tok.text] > rbp:
            op = self.next()
            if op.text == "^":
                right = self.expr(_BP["^"] - 1)
                left = ("pow", left, right, op)
            else:
                right = self.expr(_BP[op.text])
                left = ("bin", op.text, left, right, op)
        return left

    def prefix(self):
        t = self.next()
        if t.kind == "num":
            return ("num", float(t.text), t)
        if t.kind == "op" and t.text == "-":
            literal = self.tok.kind == "num"
            operand = self.expr(_UNARY_BP)
            if literal and operand[0] == "num":
                # "-2" is a negative literal; "-(2)" stays a negation
                return ("num", -operand[1], t)
            return ("neg", operand, t)
        if t.kind == "op" and t.text == "+":
            return self.expr(_UNARY_BP)
        if t.kind == "op" and t.text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if t.kind == "id":
            if self.tok.text == "(" and self.tok.kind == "op":
                if t.text not in FUNCTIONS:
                    self.error(f"unknown function {t.text}", t)
                self.next()
                arg = self.expr()
                self.expect(")")
                return ("call", t.text, arg, t)
            return ("id", t.text, t)
        self.i -= 1
        self.error(f"unexpected {t.text or 'end of input'!r}", t)

    def signed_number(self) -> float:
        sign = 1.0
        if self.tok.text in ("-", "+") and self.tok.kind == "op":
            sign = -1.0 if self.next().text == "-" else 1.0
        return sign * float(self.expect_kind("num", "a number").text)


class _Lowering:
    def __init__(self, builder: DagBuilder):
        self.b = builder
        self.scope: dict[str, int] = {}

    def __call__(self, node) -> int:
        tag = node[0]
        if tag == "num":
            return self.b.const(node[1])
        if tag == "id":
            name, tok = node[1], node[2]
            if name not in self.scope:
                raise ParseError(f"unknown identifier {name}", tok.line, tok.col)
            return self.scope[name]
        if tag == "neg":
            return self.b.unary("neg", self(node[1]))
        if tag == "call":
            return self.b.unary(node[1], self(node[2]))
        if tag == "bin":
            ops = {"+": "add", "-": "sub", "*": "mul", "/": "div"}
            left = self(node[2])
            return self.b.binary(ops[node[1]], left, self(node[3]))
        if tag == "pow":
            base, expo = node[1], node[2]
            if expo[0] == "num" and expo[1] == int(expo[1]) and abs(expo[1]) < _MAX_INT_EXPONENT:
                return self.b.unary("pow", self(base), int(expo[1]))
            # b^e == exp(e*log(b)); exponent nodes are emitted first so the
            # printed form reparses in the same order
            e = self(expo)
            lb = self.b.unary("log", self(base))
            return self.b.unary("exp", self.b.binary("mul", e, lb))
        raise AssertionError(tag)


def parse_problem(text: str, base_dir: str | None = None, *, cse: bool = True, name: str = "problem") -> Problem:
    """Parse problem source into a :class:`~subdiv.dag.Problem`.

    ``base_dir`` resolves relative weight-file paths in ``ann`` statements.
    Errors raise :class:`ParseError` carrying the line and column.
    """
    from .mlp import build_mlp, load_ann_weights

    p = _Parser(text)
    builder = DagBuilder(cse=cse)
    low = _Lowering(builder)
    var_names: list[str] = []
    bounds: list[Interval] = []
    objective = None
    ineq, eq, ineq_names, eq_names = [], [], [], []
    base_dir = base_dir or "."

    while p.tok.kind != "eof":
        if p.tok.kind == "sep":
            p.next()
            continue
        head = p.tok
        if head.kind != "id":
            p.error(f"expected a statement, found {head.text!r}")
        p.next()
        kw = head.text
        if kw == "var":
            nt = p.expect_kind("id", "a variable name")
            if nt.text in low.scope:
                p.error(f"duplicate name {nt.text}", nt)
            if p.at_end_of_statement() or p.tok.text != "in":
                p.error(f"variable {nt.text} without bounds", nt)
            p.next()
            p.expect("[")
            lo = p.signed_number()
            p.expect(",")
            hi = p.signed_number()
            p.expect("]")
            if not lo <= hi:
                p.error(f"empty bounds for {nt.text}", nt)
            var_names.append(nt.text)
            bounds.append(Interval(lo, hi))
            low.scope[nt.text] = builder.var(len(var_names) - 1)
        elif kw == "obj":
            p.expect(":")
            if p.at_end_of_statement():
                p.error("empty objective")
            if objective is not None:
                p.error("more than one objective", head)
            objective = low(p.expr())
        elif kw == "con":
            nt = p.expect_kind("id", "a constraint name")
            p.expect(":")
            lhs = low(p.expr())
            rel = p.tok
            if rel.text not in ("<=", ">=", "==") or rel.kind != "op":
                p.error("expected '<=', '>=' or '=='")
            p.next()
            rhs_ast = p.expr()
            if rhs_ast[0] == "num" and rhs_ast[1] == 0.0:
                root = lhs
            else:
                root = builder.binary("sub", lhs, low(rhs_ast))
            if rel.text == ">=":
                root = builder.unary("neg", root)
            if rel.text == "==":
                eq.append(root)
                eq_names.append(nt.text)
            else:
                ineq.append(root)
                ineq_names.append(nt.text)
        elif kw == "ann":
            nt = p.expect_kind("id", "a network name")
            if nt.text in low.scope:
                p.error(f"duplicate name {nt.text}", nt)
            p.expect("=")
            fn = p.expect_kind("id", "'mlp'")
            if fn.text != "mlp":
                p.error("expected 'mlp'", fn)
            p.expect("(")
            path_tok = p.expect_kind("str", "a weights-file string")
            args = []
            while p.tok.text == ",":
                p.next()
                args.append(low(p.expr()))
            p.expect(")")
            path = os.path.join(base_dir, path_tok.text[1:-1])
            try:
                layers = load_ann_weights(path)
                outs = build_mlp(builder, layers, args)
            except (OSError, ValueError) as exc:
                raise ParseError(str(exc), path_tok.line, path_tok.col) from exc
            if len(outs) != 1:
                raise ParseError("only scalar-output networks can be used in expressions", nt.line, nt.col)
            low.scope[nt.text] = outs[0]
        else:
            p.error(f"unknown statement {kw!r}", head)
        if not p.at_end_of_statement():
            p.error(f"unexpected {p.tok.text!r}")

    if objective is None:
        t = p.tok
        raise ParseError("empty objective: no 'obj:' statement", t.line, t.col)
    if not var_names:
        raise ParseError("no variables declared", 1, 1)
    return Problem(
        IntervalBox(bounds),
        tuple(builder.nodes),
        objective,
        tuple(ineq),
        tuple(eq),
        tuple(var_names),
        tuple(ineq_names),
        tuple(eq_names),
        name=name,
    )


def parse_file(path: str, *, cse: bool = True) -> Problem:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stem = os.path.splitext(os.path.basename(path))[0]
    return parse_problem(text, os.path.dirname(os.path.abspath(path)), cse=cse, name=stem)
