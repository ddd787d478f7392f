"""Parser and evaluator for the potential expression language.

Grammar (whitespace insensitive)::

    expr     := term (("+"|"-") term)*
    term     := factor (("*"|"/") factor)*
    factor   := unary ("^" factor)?
    unary    := "-" unary | atom
    atom     := number | variable | func "(" expr ")" | "(" expr ")"
    variable := "q" digit+
    func     := "sin" | "cos" | "exp" | "log" | "sqrt" | "tanh"

Unary minus binds tighter than ``^``, so ``-q1^2`` is ``(-q1)^2``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import (
    ExprDomainError,
    ExprSyntaxError,
    UnknownIdentifierError,
    VariableIndexError,
)

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class PotentialExpr:
    """Immutable parsed potential V(q1..qN)."""

    root: Node
    dimension: int
    source: str

    def __call__(self, point: Sequence[float]) -> float:
        return evaluate(self, point)

    def variables(self) -> frozenset:
        return frozenset(_collect_vars(self.root))

    def serialize(self) -> str:
        return serialize(self)

    def is_constant(self, node: Node | None = None) -> bool:
        return not _collect_vars(self.root if node is None else node)


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)
_VAR_RE = re.compile(r"q(\d+)\Z")


@dataclass(frozen=True)
class _Token:
    kind: str  # number, name, op, end
    text: str
    offset: int  # byte offset


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte_pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", byte_pos)
        text = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, text, byte_pos))
        pos = m.end()
        byte_pos += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte_pos))
    return tokens


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, source: str, dimension: int):
        self.tokens = _tokenize(source)
        self.i = 0
        self.dimension = dimension

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def _expect(self, text: str) -> None:
        if self.tok.text != text or self.tok.kind != "op":
            raise ExprSyntaxError(f"expected {text!r}, got {self._describe()}", self.tok.offset)
        self._advance()

    def _describe(self) -> str:
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self._describe()}", self.tok.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        base = self.unary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._advance()
            return BinOp("^", base, self.factor())
        return base

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            self._advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self._advance()
            return Const(float(tok.text))
        if tok.kind == "name":
            self._advance()
            m = _VAR_RE.match(tok.text)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.dimension:
                    raise VariableIndexError(
                        f"variable {tok.text} outside q1..q{self.dimension}", tok.offset
                    )
                return Var(index)
            if tok.text in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(tok.text, arg)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {self._describe()}", tok.offset)


def parse(source: str, dimension: int, *, fold: bool = True) -> PotentialExpr:
    """Parse ``source`` into a :class:`PotentialExpr` over ``dimension`` variables.

    Constant subtrees are folded unless ``fold`` is false.  Raises
    :class:`ExprSyntaxError` (or one of its subclasses) on malformed input.
    """
    if not isinstance(dimension, int) or dimension < 1:
        raise ValueError(f"dimension must be a positive integer, got {dimension!r}")
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    root = _Parser(source, dimension).parse()
    if fold:
        root = fold_constants(root)
    return PotentialExpr(root, dimension, source)


def fold_constants(node: Node) -> Node:
    """Replace variable-free subtrees by their value.

    Subtrees whose evaluation fails or is non-finite are kept unfolded so
    the error surfaces at evaluation time.
    """
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        child = fold_constants(node.operand)
        node = Neg(child)
    elif isinstance(node, BinOp):
        node = BinOp(node.op, fold_constants(node.left), fold_constants(node.right))
    else:
        node = Call(node.func, fold_constants(node.arg))
    if _collect_vars(node):
        return node
    try:
        value = _eval(node, ())
    except ExprDomainError:
        return node
    if not math.isfinite(value):
        return node
    return Const(value)


def _collect_vars(node: Node) -> set:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Const):
        return set()
    if isinstance(node, Neg):
        return _collect_vars(node.operand)
    if isinstance(node, BinOp):
        return _collect_vars(node.left) | _collect_vars(node.right)
    return _collect_vars(node.arg)


# ---------------------------------------------------------------- evaluation


def _power(base: float, exponent: float) -> float:
    if float(exponent).is_integer():
        if base == 0.0 and exponent < 0:
            raise ExprDomainError("zero raised to a negative power")
        try:
            return math.pow(base, exponent)
        except OverflowError as exc:
            raise ExprDomainError(f"overflow in {base!r}^{exponent!r}") from exc
    if base <= 0.0:
        raise ExprDomainError(f"non-integer power {exponent!r} of non-positive base {base!r}")
    try:
        return math.pow(base, exponent)
    except OverflowError as exc:
        raise ExprDomainError(f"overflow in {base!r}^{exponent!r}") from exc


def _call(func: str, x: float) -> float:
    if func == "log":
        if x <= 0.0:
            raise ExprDomainError(f"log of non-positive value {x!r}")
        return math.log(x)
    if func == "sqrt":
        if x < 0.0:
            raise ExprDomainError(f"sqrt of negative value {x!r}")
        return math.sqrt(x)
    if func == "exp":
        try:
            return math.exp(x)
        except OverflowError as exc:
            raise ExprDomainError(f"exp overflow at {x!r}") from exc
    return getattr(math, func)(x)


def _eval(node: Node, point: Sequence[float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return float(point[node.index - 1])
    if isinstance(node, Neg):
        return -_eval(node.operand, point)
    if isinstance(node, Call):
        return _call(node.func, _eval(node.arg, point))
    a = _eval(node.left, point)
    b = _eval(node.right, point)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0.0:
            raise ExprDomainError("division by zero")
        return a / b
    return _power(a, b)


def evaluate(expr: PotentialExpr, point: Sequence[float]) -> float:
    """Evaluate ``expr`` at ``point`` (length must equal the dimension)."""
    if len(point) != expr.dimension:
        raise ValueError(f"point has {len(point)} coordinates, expected {expr.dimension}")
    return _eval(expr.root, point)


# ---------------------------------------------------------------- serialization


def _ser(node: Node) -> str:
    if isinstance(node, Const):
        v = node.value
        if not math.isfinite(v):
            raise ValueError(f"cannot serialize non-finite constant {v!r}")
        if math.copysign(1.0, v) < 0:
            return f"(-{-v!r})"
        return repr(v)
    if isinstance(node, Var):
        return f"q{node.index}"
    if isinstance(node, Neg):
        return f"(-{_ser(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({_ser(node.arg)})"
    return f"({_ser(node.left)}{node.op}{_ser(node.right)})"


def serialize(expr: PotentialExpr | Node) -> str:
    """Fully parenthesised text that re-parses to the same tree."""
    return _ser(expr.root if isinstance(expr, PotentialExpr) else expr)
