"""Arithmetic expression language for scenario objectives.

Expressions are written over decision variables ``x1..xn`` and scenario
parameters ``p1..pk`` with the grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = factor { ("*" | "/") factor } ;
    factor  = "-" factor | power ;
    power   = atom [ "^" factor ] ;            (* right-associative *)
    atom    = NUMBER | IDENT | "(" expr ")"
            | FUNC "(" expr { "," expr } ")" ;
    IDENT   = ("x" | "p") DIGITS ;             (* 1-based indices *)
    FUNC    = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs_smooth" ;

``abs_smooth(u, d)`` is the smooth surrogate ``sqrt(u^2 + d^2)``; a plain
``abs`` is rejected at parse time because objectives must stay continuously
differentiable.  ``^`` needs a constant integer exponent or a positive base;
anything else is a domain error at evaluation time.

Gradients are exact, computed in a single forward pass with n-wide dual
numbers (value plus a vector of partials).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExpressionError",
    "ExpressionProgram",
    "DualVector",
    "parse",
    "eval_grad",
    "pretty",
]

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "abs_smooth": 2}


class ExpressionError(ValueError):
    """Parse or evaluation failure, carrying the byte offset into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Node:
    offset: int = field(compare=False)


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    index: int  # 0-based


@dataclass(frozen=True)
class Param(Node):
    index: int  # 0-based


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class Bin(Node):
    op: str
    lhs: Node
    rhs: Node


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple


@dataclass(frozen=True)
class ExpressionProgram:
    """Parsed expression over n decision variables and k scenario parameters."""

    root: Node
    n_vars: int
    n_params: int
    source: str = field(compare=False)


@dataclass
class DualVector:
    """Value together with its partials w.r.t. the n decision variables."""

    value: float
    partials: np.ndarray


# ---------------------------------------------------------------------------
# Tokenizer

_OPS = set("+-*/^(),")


def _tokenize(text: str):
    tokens = []
    i = 0
    length = len(text)
    while i < length:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPS:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_dot = False
            seen_exp = False
            while j < length:
                d = text[j]
                if d.isdigit():
                    j += 1
                elif d == "." and not seen_dot and not seen_exp:
                    seen_dot = True
                    j += 1
                elif d in "eE" and not seen_exp and j > i:
                    seen_exp = True
                    j += 1
                    if j < length and text[j] in "+-":
                        j += 1
                else:
                    break
            lexeme = text[i:j]
            try:
                value = float(lexeme)
            except ValueError:
                raise ExpressionError(f"malformed numeral {lexeme!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < length and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ExpressionError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", length))
    return tokens


# ---------------------------------------------------------------------------
# Parser (recursive descent, standard precedence)

class _Parser:
    def __init__(self, tokens, n: int, k: int):
        self.tokens = tokens
        self.pos = 0
        self.n = n
        self.k = k

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            raise ExpressionError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def parse_expr(self) -> Node:
        node = self.parse_term()
        while self.peek()[0] in ("+", "-"):
            op, _, off = self.advance()
            rhs = self.parse_term()
            node = Bin(off, op, node, rhs)
        return node

    def parse_term(self) -> Node:
        node = self.parse_factor()
        while self.peek()[0] in ("*", "/"):
            op, _, off = self.advance()
            rhs = self.parse_factor()
            node = Bin(off, op, node, rhs)
        return node

    def parse_factor(self) -> Node:
        if self.peek()[0] == "-":
            _, _, off = self.advance()
            return Neg(off, self.parse_factor())
        return self.parse_power()

    def parse_power(self) -> Node:
        base = self.parse_atom()
        if self.peek()[0] == "^":
            _, _, off = self.advance()
            # exponent at factor level: right-associative, unary minus allowed
            exponent = self.parse_factor()
            return Bin(off, "^", base, exponent)
        return base

    def parse_atom(self) -> Node:
        kind, value, off = self.advance()
        if kind == "num":
            return Num(off, value)
        if kind == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if kind == "ident":
            if self.peek()[0] == "(":
                if value not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {value!r}", off)
                self.advance()
                args = [self.parse_expr()]
                while self.peek()[0] == ",":
                    self.advance()
                    args.append(self.parse_expr())
                self.expect(")")
                arity = FUNCTIONS[value]
                if len(args) != arity:
                    raise ExpressionError(
                        f"{value} takes {arity} argument(s), got {len(args)}", off
                    )
                return Call(off, value, tuple(args))
            return self._identifier(value, off)
        raise ExpressionError(f"unexpected token {value!r}", off)

    def _identifier(self, name: str, off: int) -> Node:
        head, tail = name[:1], name[1:]
        if head in ("x", "p") and tail.isdigit():
            index = int(tail)
            if index < 1:
                raise ExpressionError(f"variable index must be 1-based: {name}", off)
            if head == "x":
                if index > self.n:
                    raise ExpressionError(
                        f"variable index out of range: {name} (n={self.n})", off
                    )
                return Var(off, index - 1)
            if index > self.k:
                raise ExpressionError(
                    f"parameter index out of range: {name} (k={self.k})", off
                )
            return Param(off, index - 1)
        raise ExpressionError(f"unknown identifier {name!r}", off)


def parse(text: str, n: int, k: int) -> ExpressionProgram:
    """Parse ``text`` against n decision variables and k scenario parameters.

    Raises ExpressionError with the byte offset of the defect on bad input.
    """
    if not text or not text.strip():
        raise ExpressionError("empty expression", 0)
    parser = _Parser(_tokenize(text), n, k)
    root = parser.parse_expr()
    end = parser.advance()
    if end[0] != "end":
        raise ExpressionError(f"trailing input {end[1]!r}", end[2])
    return ExpressionProgram(root=root, n_vars=n, n_params=k, source=text)


# ---------------------------------------------------------------------------
# Forward-mode evaluation

def _eval(node: Node, x: np.ndarray, xi: np.ndarray, n: int) -> DualVector:
    if isinstance(node, Num):
        return DualVector(node.value, np.zeros(n))
    if isinstance(node, Var):
        partials = np.zeros(n)
        partials[node.index] = 1.0
        return DualVector(float(x[node.index]), partials)
    if isinstance(node, Param):
        return DualVector(float(xi[node.index]), np.zeros(n))
    if isinstance(node, Neg):
        u = _eval(node.operand, x, xi, n)
        return DualVector(-u.value, -u.partials)
    if isinstance(node, Bin):
        return _eval_bin(node, x, xi, n)
    if isinstance(node, Call):
        return _eval_call(node, x, xi, n)
    raise TypeError(f"unknown node {node!r}")


def _eval_bin(node: Bin, x, xi, n) -> DualVector:
    u = _eval(node.lhs, x, xi, n)
    v = _eval(node.rhs, x, xi, n)
    op = node.op
    if op == "+":
        return DualVector(u.value + v.value, u.partials + v.partials)
    if op == "-":
        return DualVector(u.value - v.value, u.partials - v.partials)
    if op == "*":
        return DualVector(
            u.value * v.value, u.partials * v.value + u.value * v.partials
        )
    if op == "/":
        if v.value == 0.0:
            raise ExpressionError("division by zero", node.offset)
        value = u.value / v.value
        return DualVector(value, (u.partials - value * v.partials) / v.value)
    if op == "^":
        return _eval_pow(node, u, v)
    raise TypeError(f"unknown operator {op!r}")


def _eval_pow(node: Bin, u: DualVector, v: DualVector) -> DualVector:
    exponent_constant = not v.partials.any()
    if exponent_constant and float(v.value).is_integer():
        e = int(v.value)
        if u.value == 0.0 and e < 0:
            raise ExpressionError("zero raised to a negative power", node.offset)
        if e == 0:
            return DualVector(1.0, np.zeros_like(u.partials))
        try:
            value = u.value**e
            deriv = e * u.value ** (e - 1)
        except OverflowError:
            raise ExpressionError("power overflow", node.offset) from None
        return DualVector(float(value), deriv * u.partials)
    # non-integer or varying exponent: need a positive base
    if u.value <= 0.0:
        raise ExpressionError(
            "power with non-integer exponent needs a positive base", node.offset
        )
    try:
        value = u.value**v.value
    except OverflowError:
        raise ExpressionError("power overflow", node.offset) from None
    partials = value * (
        v.partials * math.log(u.value) + v.value * u.partials / u.value
    )
    return DualVector(float(value), partials)


def _eval_call(node: Call, x, xi, n) -> DualVector:
    args = [_eval(arg, x, xi, n) for arg in node.args]
    name = node.name
    if name == "sin":
        (u,) = args
        return DualVector(math.sin(u.value), math.cos(u.value) * u.partials)
    if name == "cos":
        (u,) = args
        return DualVector(math.cos(u.value), -math.sin(u.value) * u.partials)
    if name == "exp":
        (u,) = args
        if u.value > 700.0:
            raise ExpressionError("exp overflow", node.offset)
        value = math.exp(u.value)
        return DualVector(value, value * u.partials)
    if name == "log":
        (u,) = args
        if u.value <= 0.0:
            raise ExpressionError("log of non-positive value", node.offset)
        return DualVector(math.log(u.value), u.partials / u.value)
    if name == "sqrt":
        (u,) = args
        if u.value < 0.0:
            raise ExpressionError("sqrt of negative value", node.offset)
        if u.value == 0.0:
            if u.partials.any():
                raise ExpressionError("sqrt not differentiable at zero", node.offset)
            return DualVector(0.0, np.zeros_like(u.partials))
        value = math.sqrt(u.value)
        return DualVector(value, u.partials / (2.0 * value))
    if name == "abs_smooth":
        u, d = args
        value = math.hypot(u.value, d.value)
        if value == 0.0:
            if u.partials.any() or d.partials.any():
                raise ExpressionError(
                    "abs_smooth not differentiable at (0, 0)", node.offset
                )
            return DualVector(0.0, np.zeros_like(u.partials))
        partials = (u.value * u.partials + d.value * d.partials) / value
        return DualVector(value, partials)
    raise TypeError(f"unknown function {name!r}")


def eval_grad(
    program: ExpressionProgram, x: np.ndarray, xi: np.ndarray
) -> tuple[float, np.ndarray]:
    """Evaluate ``program`` at (x, xi), returning the value and exact gradient.

    Parameters
    ----------
    program : ExpressionProgram
    x : array of length n_vars
    xi : array of length n_params

    Raises
    ------
    ExpressionError
        On domain errors (log of non-positive, division by zero, ...), with
        the offending node's source offset.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if x.shape != (program.n_vars,):
        raise ValueError(f"x has shape {x.shape}, expected ({program.n_vars},)")
    if xi.shape != (program.n_params,):
        raise ValueError(f"xi has shape {xi.shape}, expected ({program.n_params},)")
    out = _eval(program.root, x, xi, program.n_vars)
    return float(out.value), np.asarray(out.partials, dtype=float)


# ---------------------------------------------------------------------------
# Pretty printer (parse . pretty . parse is the identity on the AST)

def _fmt_num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _pretty(node: Node, parent_prec: int) -> str:
    # precedence: + - (1), * / (2), unary - (3), ^ (4), atoms (5)
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Param):
        return f"p{node.index + 1}"
    if isinstance(node, Neg):
        inner = f"-{_pretty(node.operand, 3)}"
        return f"({inner})" if parent_prec > 3 else inner
    if isinstance(node, Call):
        args = ", ".join(_pretty(a, 0) for a in node.args)
        return f"{node.name}({args})"
    if isinstance(node, Bin):
        if node.op in ("+", "-"):
            prec, lp, rp = 1, 1, 2
        elif node.op in ("*", "/"):
            prec, lp, rp = 2, 2, 3
        else:  # ^
            prec, lp, rp = 4, 5, 3  # right-assoc, exponent may be unary
        text = f"{_pretty(node.lhs, lp)} {node.op} {_pretty(node.rhs, rp)}"
        if node.op == "^":
            text = f"{_pretty(node.lhs, lp)}^{_pretty(node.rhs, rp)}"
        return f"({text})" if parent_prec > prec else text
    raise TypeError(f"unknown node {node!r}")


def pretty(program: ExpressionProgram) -> str:
    """Render the AST back to source text."""
    return _pretty(program.root, 0)
