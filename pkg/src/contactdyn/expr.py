"""Hamiltonian expression language: tokenizer, recursive-descent parser, printer.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("+" | "-") unary | power ;
    power   = atom [ ("^" | "**") unary ] ;      (* right associative *)
    atom    = number | name | name "(" expr { "," expr } ")" | "(" expr ")" ;

Names are coordinates of the chosen manifold, ``t``, or the constants ``pi``
and ``e``. Functions: sin cos tan exp log tanh sqrt pow bump sigmoid
smoothstep bumpstep.
"""

import math
import re
from dataclasses import dataclass

from .errors import ParseError, UnknownIdentifier

FUNCTIONS = {
    "sin": 1, "cos": 1, "tan": 1, "exp": 1, "log": 1, "tanh": 1, "sqrt": 1,
    "pow": 2, "bump": 1, "sigmoid": 1, "smoothstep": 1, "bumpstep": 1,
}
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
""", re.VERBOSE)


def tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group(kind)
            if kind == "op" and val == "**":
                val = "^"
            out.append((kind, val, pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, val):
        kind, v, pos = self.take()
        if v != val or kind == "end":
            found = "end of input" if kind == "end" else repr(v)
            raise ParseError(f"expected {val!r}, found {found}", pos, self.text)

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0, self.text)
        node = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {v!r}", pos, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, v, _ = self.peek()
        if kind == "op" and v in ("+", "-"):
            self.take()
            operand = self.unary()
            return Neg(operand) if v == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, v, pos = self.take()
        if kind == "num":
            return Num(float(v))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if v not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {v!r}", pos, self.text)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[v]:
                    raise ParseError(f"{v} takes {FUNCTIONS[v]} argument(s), got {len(args)}",
                                     pos, self.text)
                return Call(v, tuple(args))
            return Var(v)
        if kind == "op" and v == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(v)
        raise ParseError(f"unexpected {found}", pos, self.text)


def parse(text, allowed=None):
    """Parse ``text`` into an AST; ``allowed`` restricts free variable names."""
    node = _Parser(text).parse()
    if allowed is not None:
        check_names(node, allowed, text)
    return node


def _positions(text, name):
    m = re.search(r"(?<![A-Za-z_0-9])" + re.escape(name) + r"(?![A-Za-z_0-9])", text or "")
    return m.start() if m else None


def check_names(node, allowed, text=None):
    ok = set(allowed) | set(CONSTANTS) | {"t"}
    for name in sorted(free_names(node)):
        if name not in ok:
            raise UnknownIdentifier(f"unknown identifier {name!r}", _positions(text, name), text)


def free_names(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return free_names(node.operand)
    if isinstance(node, BinOp):
        return free_names(node.left) | free_names(node.right)
    return set().union(*(free_names(a) for a in node.args))


# -- printing -------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Num) and (node.value < 0 or math.copysign(1.0, node.value) < 0):
        return 3
    return 5


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v)) if v >= 0 else "-" + str(int(-v))
    return repr(float(v))


def to_string(node):
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_string(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_string(node.operand)
        return f"-({inner})" if _prec(node.operand) < 3 else f"-{inner}"
    p = _PREC[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# -- small AST algebra used to build derived leaf fields ------------------

def num(v):
    return Num(float(v)) if v >= 0 else Neg(Num(float(-v)))


def add(a, b):
    return BinOp("+", a, b)


def sub(a, b):
    return BinOp("-", a, b)


def mul(a, b):
    return BinOp("*", a, b)


def call(f, *args):
    return Call(f, tuple(args))


def substitute(node, mapping):
    """Replace variables by subtrees."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    return Call(node.func, tuple(substitute(a, mapping) for a in node.args))


def count_nodes(node):
    if isinstance(node, (Num, Var)):
        return 1
    if isinstance(node, Neg):
        return 1 + count_nodes(node.operand)
    if isinstance(node, BinOp):
        return 1 + count_nodes(node.left) + count_nodes(node.right)
    return 1 + sum(count_nodes(a) for a in node.args)
