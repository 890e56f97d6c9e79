"""Expression language for generator functions, with second-order jets.

Grammar::

    expr   := term { ("+"|"-") term }
    term   := factor { ("*"|"/") factor }
    factor := ["-"] power
    power  := atom ["^" factor]
    atom   := number | "x" | "pi" | "e" | name "(" expr ")" | "(" expr ")"

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)``.  Evaluation propagates truncated Taylor jets
``(value, d1, d2)`` through the tree.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Union

from .errors import EvaluationError, ParseError, UnknownIdentifierError

CATALOG = (
    "exp", "ln", "sqrt", "sin", "cos", "tan", "sec", "csc", "cot",
    "asin", "acos", "atan", "arcsec", "arccsc",
    "sinh", "cosh", "tanh", "coth", "arsinh", "arcosh", "artanh", "arcoth",
)
CONSTANTS = {"pi": math.pi, "e": math.e}


# --- jets -------------------------------------------------------------------


class Jet2:
    """Value with first and second derivative, ``(value, d1, d2)``."""

    __slots__ = ("value", "d1", "d2")

    def __init__(self, value: float, d1: float = 0.0, d2: float = 0.0):
        self.value = value
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def variable(cls, x: float) -> "Jet2":
        return cls(float(x), 1.0, 0.0)

    def __iter__(self):
        yield self.value
        yield self.d1
        yield self.d2

    def __eq__(self, other):
        if isinstance(other, Jet2):
            return tuple(self) == tuple(other)
        if isinstance(other, tuple):
            return tuple(self) == other
        return NotImplemented

    def __repr__(self):
        return f"Jet2({self.value!r}, {self.d1!r}, {self.d2!r})"

    def __add__(self, o):
        if isinstance(o, Jet2):
            return Jet2(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)
        return Jet2(self.value + o, self.d1, self.d2)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Jet2):
            return Jet2(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)
        return Jet2(self.value - o, self.d1, self.d2)

    def __rsub__(self, o):
        return Jet2(o - self.value, -self.d1, -self.d2)

    def __neg__(self):
        return Jet2(-self.value, -self.d1, -self.d2)

    def __mul__(self, o):
        if isinstance(o, Jet2):
            return Jet2(
                self.value * o.value,
                self.d1 * o.value + self.value * o.d1,
                self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
            )
        return Jet2(self.value * o, self.d1 * o, self.d2 * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if not isinstance(o, Jet2):
            o = Jet2(float(o))
        if o.value == 0.0:
            raise ZeroDivisionError("division by zero")
        q = self.value / o.value
        q1 = (self.d1 - q * o.d1) / o.value
        q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.value
        return Jet2(q, q1, q2)

    def __rtruediv__(self, o):
        return Jet2(float(o)) / self

    def chain(self, g: float, g1: float, g2: float) -> "Jet2":
        """Compose with an outer function whose jet at ``self.value`` is (g, g1, g2)."""
        return Jet2(g, g1 * self.d1, g2 * self.d1 * self.d1 + g1 * self.d2)

    def isfinite(self) -> bool:
        return math.isfinite(self.value) and math.isfinite(self.d1) and math.isfinite(self.d2)


# --- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Const:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"
    pos: int = field(default=0, compare=False)


Node = Union[Num, Var, Const, Neg, BinOp, Call]


# --- parser -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if not m or m.end() == pos:
            off = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(f"unexpected character {source[off]!r}", off, "number, name or operator")
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, value: str, hint: str):
        kind, text, pos = self.tok
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"found {found}", pos, hint)
        self.advance()

    def expr(self) -> Node:
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            _, op, pos = self.advance()
            node = BinOp(op, node, self.term(), pos)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            _, op, pos = self.advance()
            node = BinOp(op, node, self.factor(), pos)
        return node

    def factor(self) -> Node:
        if self.tok[0] == "op" and self.tok[1] == "-":
            _, _, pos = self.advance()
            return Neg(self.power(), pos)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            _, _, pos = self.advance()
            return BinOp("^", base, self.factor(), pos)
        return base

    def atom(self) -> Node:
        kind, text, pos = self.tok
        if kind == "num":
            self.advance()
            return Num(float(text), pos)
        if kind == "name":
            self.advance()
            if text == "x":
                return Var(pos)
            if text in CONSTANTS:
                return Const(text, pos)
            if text in CATALOG:
                self.expect("(", f"'(' after function name {text!r}")
                arg = self.expr()
                self.expect(")", "')'")
                return Call(text, arg, pos)
            raise UnknownIdentifierError(text, pos, CATALOG)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")", "')'")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"found {found}", pos, "number, 'x', constant, function call or '('")


def parse(source: str) -> Node:
    """Parse an expression in ``x`` into an immutable AST."""
    if not source or not source.strip():
        raise ParseError("empty expression", 0, "an expression")
    p = _Parser(source)
    node = p.expr()
    kind, text, pos = p.tok
    if kind != "end":
        raise ParseError(f"unexpected {text!r}", pos, "operator or end of input")
    return node


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(node: Node) -> str:
    """Render an AST back to text that re-parses to an equal AST."""

    def atomic(n):
        return isinstance(n, (Num, Var, Const, Call))

    def wrap(n):
        s = to_source(n)
        return s if atomic(n) else f"({s})"

    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({to_source(node.arg)})"
    if isinstance(node, Neg):
        return f"-{wrap(node.operand)}"
    return f"{wrap(node.left)} {node.op} {wrap(node.right)}"


def depends_on_x(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, Neg):
        return depends_on_x(node.operand)
    if isinstance(node, Call):
        return depends_on_x(node.arg)
    return depends_on_x(node.left) or depends_on_x(node.right)


# --- elementary functions: value, first and second derivative ----------------


def _need(cond: bool, what: str):
    if not cond:
        raise ValueError(what)


def _sqrt3(u):
    _need(u > 0, "sqrt of nonpositive argument")
    s = math.sqrt(u)
    return s, 0.5 / s, -0.25 / (s * u)


def _ln3(u):
    _need(u > 0, "ln of nonpositive argument")
    return math.log(u), 1.0 / u, -1.0 / (u * u)


def _exp3(u):
    e = math.exp(u)
    return e, e, e


def _tan3(u):
    t = math.tan(u)
    d = 1.0 + t * t
    return t, d, 2.0 * t * d


def _sec3(u):
    c = math.cos(u)
    _need(c != 0, "sec pole")
    s = 1.0 / c
    t = math.tan(u)
    return s, s * t, s * (t * t + s * s)


def _csc3(u):
    sn = math.sin(u)
    _need(sn != 0, "csc pole")
    c = 1.0 / sn
    ct = math.cos(u) / sn
    return c, -c * ct, c * (ct * ct + c * c)


def _cot3(u):
    sn = math.sin(u)
    _need(sn != 0, "cot pole")
    ct = math.cos(u) / sn
    d = 1.0 + ct * ct
    return ct, -d, 2.0 * ct * d


def _asin3(u):
    _need(-1 < u < 1, "asin argument outside (-1, 1)")
    w = 1.0 - u * u
    r = math.sqrt(w)
    return math.asin(u), 1.0 / r, u / (w * r)


def _acos3(u):
    _need(-1 < u < 1, "acos argument outside (-1, 1)")
    w = 1.0 - u * u
    r = math.sqrt(w)
    return math.acos(u), -1.0 / r, -u / (w * r)


def _atan3(u):
    w = 1.0 + u * u
    return math.atan(u), 1.0 / w, -2.0 * u / (w * w)


def _arcsec3(u):
    _need(abs(u) > 1, "arcsec argument inside [-1, 1]")
    w = u * u - 1.0
    r = math.sqrt(w)
    return math.acos(1.0 / u), 1.0 / (abs(u) * r), -math.copysign(1.0, u) * (2.0 * u * u - 1.0) / (u * u * w * r)


def _arccsc3(u):
    _need(abs(u) > 1, "arccsc argument inside [-1, 1]")
    w = u * u - 1.0
    r = math.sqrt(w)
    return math.asin(1.0 / u), -1.0 / (abs(u) * r), math.copysign(1.0, u) * (2.0 * u * u - 1.0) / (u * u * w * r)


def _tanh3(u):
    t = math.tanh(u)
    d = 1.0 - t * t
    return t, d, -2.0 * t * d


def _coth3(u):
    _need(u != 0, "coth pole at 0")
    c = 1.0 / math.tanh(u)
    d = 1.0 - c * c
    return c, d, -2.0 * c * d


def _arsinh3(u):
    w = 1.0 + u * u
    r = math.sqrt(w)
    return math.asinh(u), 1.0 / r, -u / (w * r)


def _arcosh3(u):
    _need(u > 1, "arcosh argument not above 1")
    w = u * u - 1.0
    r = math.sqrt(w)
    return math.acosh(u), 1.0 / r, -u / (w * r)


def _artanh3(u):
    _need(-1 < u < 1, "artanh argument outside (-1, 1)")
    w = 1.0 - u * u
    return math.atanh(u), 1.0 / w, 2.0 * u / (w * w)


def _arcoth3(u):
    _need(abs(u) > 1, "arcoth argument inside [-1, 1]")
    w = 1.0 - u * u
    return 0.5 * math.log((u + 1.0) / (u - 1.0)), 1.0 / w, 2.0 * u / (w * w)


_JET_RULES: dict[str, Callable[[float], tuple[float, float, float]]] = {
    "exp": _exp3,
    "ln": _ln3,
    "sqrt": _sqrt3,
    "sin": lambda u: (math.sin(u), math.cos(u), -math.sin(u)),
    "cos": lambda u: (math.cos(u), -math.sin(u), -math.cos(u)),
    "tan": _tan3,
    "sec": _sec3,
    "csc": _csc3,
    "cot": _cot3,
    "asin": _asin3,
    "acos": _acos3,
    "atan": _atan3,
    "arcsec": _arcsec3,
    "arccsc": _arccsc3,
    "sinh": lambda u: (math.sinh(u), math.cosh(u), math.sinh(u)),
    "cosh": lambda u: (math.cosh(u), math.sinh(u), math.cosh(u)),
    "tanh": _tanh3,
    "coth": _coth3,
    "arsinh": _arsinh3,
    "arcosh": _arcosh3,
    "artanh": _artanh3,
    "arcoth": _arcoth3,
}
assert set(_JET_RULES) == set(CATALOG)


# --- compilation to closures --------------------------------------------------


def _const_value(node: Node) -> float:
    return _compile(node)(Jet2(0.0)).value


def _int_power(base: Jet2, n: int) -> Jet2:
    if n < 0:
        return 1.0 / _int_power(base, -n)
    result = Jet2(1.0)
    sq = base
    while n:
        if n & 1:
            result = result * sq
        n >>= 1
        if n:
            sq = sq * sq
    return result


def _guard(fn, pos):
    def run(x: Jet2) -> Jet2:
        try:
            return fn(x)
        except EvaluationError:
            raise
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise EvaluationError(str(exc), x=x.value, node=pos) from None

    return run


def _compile(node: Node) -> Callable[[Jet2], Jet2]:
    if isinstance(node, Num):
        v = node.value
        return lambda x: Jet2(v)
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda x: Jet2(v)
    if isinstance(node, Neg):
        inner = _compile(node.operand)
        return lambda x: -inner(x)
    if isinstance(node, Call):
        inner = _compile(node.arg)
        rule = _JET_RULES[node.name]
        return _guard(lambda x: (lambda u: u.chain(*rule(u.value)))(inner(x)), node.pos)
    left = _compile(node.left)
    op = node.op
    if op == "^":
        if not depends_on_x(node.right):
            p = _const_value(node.right)
            if p == int(p) and abs(p) <= 64:
                n = int(p)

                def int_pow(x):
                    b = left(x)
                    if n < 0 and b.value == 0:
                        raise ZeroDivisionError("zero base with negative exponent")
                    return _int_power(b, n)

                return _guard(int_pow, node.pos)

            def real_pow(x):
                b = left(x)
                u = b.value
                if not u > 0:
                    raise ValueError("non-integer exponent requires a positive base")
                g = u ** p
                return b.chain(g, p * g / u, p * (p - 1.0) * g / (u * u))

            return _guard(real_pow, node.pos)
        right = _compile(node.right)

        def gen_pow(x):
            b = left(x)
            if not b.value > 0:
                raise ValueError("variable exponent requires a positive base")
            lnb = b.chain(*_ln3(b.value))
            w = right(x) * lnb
            return w.chain(*_exp3(w.value))

        return _guard(gen_pow, node.pos)
    right = _compile(node.right)
    if op == "+":
        return lambda x: left(x) + right(x)
    if op == "-":
        return lambda x: left(x) - right(x)
    if op == "*":
        return lambda x: left(x) * right(x)
    return _guard(lambda x: left(x) / right(x), node.pos)


class Expression:
    """Parsed expression with a compiled jet evaluator."""

    def __init__(self, source: str | Node):
        if isinstance(source, str):
            self.source = source
            self.ast = parse(source)
        else:
            self.ast = source
            self.source = to_source(source)
        self._fn = _compile(self.ast)

    def jet(self, x: float) -> Jet2:
        j = self._fn(Jet2.variable(x))
        if not j.isfinite():
            raise EvaluationError(f"non-finite result of {self.source!r}", x=x)
        return j

    def __call__(self, x: float) -> float:
        return self.jet(x).value

    def __repr__(self):
        return f"Expression({self.source!r})"


def eval_jet(ast: Node | str | Expression, x: float) -> Jet2:
    """Return ``(f(x), f'(x), f''(x))`` for an expression."""
    if not isinstance(ast, Expression):
        ast = Expression(ast)
    return ast.jet(x)
