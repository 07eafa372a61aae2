"""Arithmetic expressions for right-hand sides f(x) and addition formulas R(x, y).

Grammar (whitespace ignored, ``**`` accepted as a synonym for ``^``)::

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = ("-" | "+") unary | power ;
    power    = atom [ "^" unary ] ;             (* right-associative *)
    atom     = number | variable | "sqrt" "(" expr ")" | "(" expr ")" ;
    number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;

The exponent of ``^`` must reduce to a constant rational.  Literals are kept as
exact :class:`fractions.Fraction` values and a quotient of two constants is
folded exactly, so ``35/216`` is one rational constant rather than a rounded
float.  Precedence is ``^`` > unary minus > ``* /`` > ``+ -``, so ``-x^2`` is
``-(x^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import DivisionByZero, DomainError, ExprSyntaxError, UnknownIdentifier
from . import jet as _jet
from .jet import Jet

FUNCTIONS = ("sqrt",)


# -- AST -----------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: Fraction


@dataclass(frozen=True)
class Sqrt:
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Pow, Sqrt]


@dataclass(frozen=True)
class ExprAst:
    root: Node
    variables: tuple[str, ...] = ("x",)
    source: str = ""

    def __call__(self, *values: float) -> float:
        return eval_scalar(self, *values)

    def __str__(self) -> str:
        return pretty(self)

    def free_variables(self) -> set[str]:
        out: set[str] = set()
        _collect_vars(self.root, out)
        return out


def _collect_vars(node: Node, out: set[str]) -> None:
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Neg):
        _collect_vars(node.operand, out)
    elif isinstance(node, BinOp):
        _collect_vars(node.left, out)
        _collect_vars(node.right, out)
    elif isinstance(node, Pow):
        _collect_vars(node.base, out)
    elif isinstance(node, Sqrt):
        _collect_vars(node.arg, out)


# -- tokenizer -----------------------------------------------------------------

@dataclass
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int  # character index


def _tokenize(src: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == ".":
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    while k < n and src[k].isdigit():
                        k += 1
                    j = k
            toks.append(_Tok("num", src[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Tok("name", src[i:j], i))
            i = j
            continue
        if src.startswith("**", i):
            toks.append(_Tok("op", "^", i))
            i += 2
            continue
        if c in "+-*/^()":
            toks.append(_Tok("op", c, i))
            i += 1
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", _byte_offset(src, i))
    toks.append(_Tok("end", "", n))
    return toks


def _byte_offset(src: str, index: int) -> int:
    return len(src[:index].encode("utf-8"))


# -- parser --------------------------------------------------------------------

class _Parser:
    def __init__(self, src: str, variables: tuple[str, ...]):
        self.src = src
        self.variables = variables
        self.toks = _tokenize(src)
        self.i = 0

    def error(self, msg: str, tok: _Tok | None = None) -> ExprSyntaxError:
        tok = tok or self.peek()
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        return ExprSyntaxError(f"{msg}, found {what}", _byte_offset(self.src, tok.pos))

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def accept(self, op: str) -> bool:
        tok = self.peek()
        if tok.kind == "op" and tok.text == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str) -> None:
        if not self.accept(op):
            raise self.error(f"expected {op!r}")

    def parse(self) -> Node:
        node = self.expr()
        if self.peek().kind != "end":
            raise self.error("expected operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.i += 1
                node = BinOp(tok.text, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "*/":
                self.i += 1
                rhs = self.unary()
                node = _fold(BinOp(tok.text, node, rhs), self, tok)
            else:
                return node

    def unary(self) -> Node:
        if self.accept("-"):
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Neg(operand)
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if self.accept("^"):
            exp_node = self.unary()
            value = _constant_value(exp_node)
            if value is None:
                raise ExprSyntaxError(
                    "exponent must be a constant rational", _byte_offset(self.src, tok.pos)
                )
            return Pow(base, value)
        return base

    def atom(self) -> Node:
        tok = self.next()
        if tok.kind == "num":
            return Const(Fraction(tok.text))
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Sqrt(arg)
            if tok.text in self.variables:
                return Var(tok.text)
            raise UnknownIdentifier(tok.text, _byte_offset(self.src, tok.pos))
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.i -= 1
        raise self.error("expected number, variable or '('")


def _fold(node: BinOp, parser: _Parser, tok: _Tok) -> Node:
    if node.op == "/" and isinstance(node.left, Const) and isinstance(node.right, Const):
        if node.right.value == 0:
            raise ExprSyntaxError("constant division by zero", _byte_offset(parser.src, tok.pos))
        return Const(node.left.value / node.right.value)
    return node


def _constant_value(node: Node) -> Fraction | None:
    """Exact value of a variable-free subtree built from + - * / ^int, else None."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg):
        v = _constant_value(node.operand)
        return None if v is None else -v
    if isinstance(node, BinOp):
        a, b = _constant_value(node.left), _constant_value(node.right)
        if a is None or b is None:
            return None
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0:
            return None
        return a / b
    if isinstance(node, Pow) and node.exponent.denominator == 1:
        a = _constant_value(node.base)
        if a is None or (a == 0 and node.exponent < 0):
            return None
        return a**node.exponent.numerator
    return None


def parse(source: str, bivariate: bool = False, variables: tuple[str, ...] | None = None) -> ExprAst:
    """Parse ``source`` into an :class:`ExprAst`.

    Variables default to ``x`` (plus ``y`` when ``bivariate``); pass
    ``variables`` explicitly for other names, e.g. ``("t",)`` for solutions.
    """
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    if variables is None:
        variables = ("x", "y") if bivariate else ("x",)
    root = _Parser(source, tuple(variables)).parse()
    return ExprAst(root, tuple(variables), source)


# -- pretty printer --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_fraction(q: Fraction) -> str:
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    if q.denominator == 1:
        return f"({q.numerator})"
    return f"({q.numerator}/{q.denominator})"


def _pp(node: Node) -> tuple[str, int]:
    # returns (text, precedence); atoms get 9
    if isinstance(node, Const):
        return _fmt_fraction(node.value), 9
    if isinstance(node, Var):
        return node.name, 9
    if isinstance(node, Sqrt):
        return f"sqrt({_pp(node.arg)[0]})", 9
    if isinstance(node, Pow):
        text, prec = _pp(node.base)
        if prec < 9:
            text = f"({text})"
        return f"{text}^{_fmt_fraction(node.exponent)}", 4
    if isinstance(node, Neg):
        text, prec = _pp(node.operand)
        if prec < 4:
            text = f"({text})"
        return f"-{text}", 3
    p = _PREC[node.op]
    lt, lp = _pp(node.left)
    rt, rp = _pp(node.right)
    if lp < p:
        lt = f"({lt})"
    if rp <= p:
        rt = f"({rt})"
    return f"{lt} {node.op} {rt}", p


def pretty(ast: ExprAst | Node) -> str:
    node = ast.root if isinstance(ast, ExprAst) else ast
    return _pp(node)[0]


# -- evaluation ------------------------------------------------------------------

def _scalar_pow(base: float, p: Fraction) -> float:
    if p.denominator == 1:
        if base == 0.0 and p < 0:
            raise DivisionByZero("zero raised to a negative power")
        return float(base) ** p.numerator
    if base < 0.0:
        raise DomainError(f"negative base {base} with non-integer exponent {p}")
    if base == 0.0:
        if p < 0:
            raise DivisionByZero("zero raised to a negative power")
        return 0.0
    return base ** float(p)


def _eval(node: Node, env: dict):
    if isinstance(node, Const):
        return float(node.value)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if not isinstance(b, Jet) and b == 0.0:
            raise DivisionByZero("division by zero")
        return a / b
    if isinstance(node, Pow):
        a = _eval(node.base, env)
        if isinstance(a, Jet):
            return _jet.power(a, node.exponent)
        return _scalar_pow(a, node.exponent)
    if isinstance(node, Sqrt):
        a = _eval(node.arg, env)
        if isinstance(a, Jet):
            return _jet.sqrt(a)
        if a < 0.0:
            raise DomainError(f"sqrt of negative number {a}")
        return math.sqrt(a)
    raise TypeError(f"unknown node {node!r}")


def _bind(ast: ExprAst, values) -> dict:
    if len(values) > len(ast.variables):
        raise TypeError(f"expression takes {len(ast.variables)} variables")
    env = dict(zip(ast.variables, values))
    missing = ast.free_variables() - env.keys()
    if missing:
        raise TypeError(f"unbound variables: {sorted(missing)}")
    return env


def eval_scalar(ast: ExprAst, *values: float) -> float:
    """Evaluate in binary64.  Values bind to ``ast.variables`` in order."""
    env = _bind(ast, [float(v) for v in values])
    return float(_eval(ast.root, env))


def eval_jet(ast: ExprAst, *values) -> Jet:
    """Evaluate on jets (scalars are allowed for the other variables).

    The result has the order and center of the jet argument(s).
    """
    env = _bind(ast, values)
    out = _eval(ast.root, env)
    if not isinstance(out, Jet):
        ref = next(v for v in values if isinstance(v, Jet))
        out = _jet.constant(out, ref.center, ref.order)
    return out
