"""Coordinate expressions and forward-mode jets.

Expressions are parsed from a small grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' integer)?
    atom   := number | ident | '(' expr ')' | func '(' expr ')' | '-' atom
    func   := sin | cos | exp | log | sqrt

Note that unary minus lives in ``atom``, so ``-x1^2`` is ``(-x1)^2``.

Every derivative used by the package comes from :func:`eval_jet`, which
propagates truncated Taylor coefficients (value, gradient, Hessian, third
derivative tensor) through the tree.  Evaluation is vectorized over a batch
of points.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
MAX_ORDER = 3

_IDENT = re.compile(r"[a-z][a-z0-9]*")
_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_DEFAULT_VAR = re.compile(r"[xy][1-9][0-9]*")


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class ExprDomainError(ExprError):
    """Raised when a subexpression is evaluated outside its domain."""

    def __init__(self, message: str, subexpression: "Node"):
        super().__init__(f"{message} in '{format_node(subexpression)}'")
        self.subexpression = subexpression


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


Node = Num | Var | Neg | BinOp | Pow | Func


def format_node(node: Node) -> str:
    """Fully parenthesized rendering that re-parses to the same tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"-({format_node(node.arg)})"
    if isinstance(node, BinOp):
        return f"({format_node(node.left)} {node.op} {format_node(node.right)})"
    if isinstance(node, Pow):
        return f"({format_node(node.base)})^{node.exponent}"
    if isinstance(node, Func):
        return f"{node.name}({format_node(node.arg)})"
    raise TypeError(node)


def _free_variables(node: Node) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset((node.name,))
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, BinOp):
        return _free_variables(node.left) | _free_variables(node.right)
    if isinstance(node, Neg | Func):
        return _free_variables(node.arg)
    return _free_variables(node.base)


# --------------------------------------------------------------------------
# Parser


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^(),":
            tokens.append(("op", c, i))
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            tokens.append(("num", m.group(0), i))
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(("ident", m.group(0), i))
            i = m.end()
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i, text)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: frozenset[str] | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, tok=None, cls=ExprSyntaxError):
        tok = tok or self.peek()
        raise cls(message, tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != value:
            self.fail(f"expected {value!r}")
        return self.take()

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        node = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            tok = self.peek()
            if tok[0] != "num" or not tok[1].isdigit():
                self.fail("exponent must be a non-negative integer literal")
            self.take()
            node = Pow(node, int(tok[1]))
        return node

    def atom(self) -> Node:
        tok = self.peek()
        kind, value, _ = tok
        if kind == "num":
            self.take()
            return Num(float(value))
        if kind == "op" and value == "-":
            self.take()
            return Neg(self.atom())
        if kind == "op" and value == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            self.take()
            nxt = self.peek()
            calls = nxt[0] == "op" and nxt[1] == "("
            if value in FUNCTIONS:
                if not calls:
                    self.fail(f"function {value!r} requires an argument", nxt, ArityError)
                self.take()
                if self.peek()[0] == "op" and self.peek()[1] == ")":
                    self.fail(f"{value} takes exactly one argument", cls=ArityError)
                arg = self.expr()
                if self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.fail(f"{value} takes exactly one argument", cls=ArityError)
                self.expect(")")
                return Func(value, arg)
            if calls:
                self.fail(f"unknown function {value!r}", tok, UnknownIdentifierError)
            if self.variables is None:
                if not _DEFAULT_VAR.fullmatch(value):
                    self.fail(f"unknown identifier {value!r}", tok, UnknownIdentifierError)
            elif value not in self.variables:
                self.fail(f"unknown identifier {value!r}", tok, UnknownIdentifierError)
            return Var(value)
        if kind == "end":
            self.fail("unexpected end of input")
        self.fail(f"unexpected token {value!r}")


class Expression:
    """An immutable parsed expression in chart coordinates.

    Expressions can also be combined with ``+ - * /`` and unary minus,
    which builds new trees (zeros and ones are folded away).
    """

    __slots__ = ("ast", "_vars")

    def __init__(self, ast: Node):
        self.ast = ast
        self._vars = _free_variables(ast)

    @property
    def variables(self) -> frozenset[str]:
        return self._vars

    @property
    def is_constant(self) -> bool:
        return not self._vars

    @property
    def is_zero(self) -> bool:
        return isinstance(self.ast, Num) and self.ast.value == 0.0

    def __str__(self) -> str:
        return format_node(self.ast)

    def __repr__(self) -> str:
        return f"Expression({format_node(self.ast)!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and self.ast == other.ast

    def __hash__(self) -> int:
        return hash(self.ast)

    # algebra used when assembling derived fields
    def __add__(self, other):
        other = as_expression(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        return Expression(BinOp("+", self.ast, other.ast))

    __radd__ = __add__

    def __sub__(self, other):
        other = as_expression(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return -other
        return Expression(BinOp("-", self.ast, other.ast))

    def __rsub__(self, other):
        return as_expression(other) - self

    def __mul__(self, other):
        other = as_expression(other)
        if self.is_zero or other.is_zero:
            return ZERO
        if isinstance(self.ast, Num) and self.ast.value == 1.0:
            return other
        if isinstance(other.ast, Num) and other.ast.value == 1.0:
            return self
        return Expression(BinOp("*", self.ast, other.ast))

    def __rmul__(self, other):
        return as_expression(other) * self

    def __truediv__(self, other):
        other = as_expression(other)
        if self.is_zero:
            return ZERO
        return Expression(BinOp("/", self.ast, other.ast))

    def __neg__(self):
        if self.is_zero:
            return self
        if isinstance(self.ast, Num):
            return Expression(Num(-self.ast.value))
        return Expression(Neg(self.ast))


ZERO = Expression(Num(0.0))


def as_expression(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float)):
        return Expression(Num(float(value)))
    raise TypeError(f"cannot convert {type(value).__name__} to Expression")


def parse(text: str, variables: Iterable[str] | None = None) -> Expression:
    """Parse ``text`` into an :class:`Expression`.

    With ``variables=None`` any identifier of the form ``x<k>`` or ``y<k>`` is
    accepted; otherwise identifiers must belong to ``variables``.
    """
    allowed = None if variables is None else frozenset(variables)
    return Expression(_Parser(text, allowed).parse())


def coordinate_names(n: int, holomorphic: bool = False) -> tuple[str, ...]:
    """Chart coordinate names: ``x1..xn`` or ``x1..xn, y1..yn``."""
    names = tuple(f"x{i + 1}" for i in range(n))
    if holomorphic:
        names += tuple(f"y{i + 1}" for i in range(n))
    return names


# --------------------------------------------------------------------------
# Jets


@lru_cache(maxsize=None)
def _sym3_index(n: int):
    idx = np.indices((n, n, n)).reshape(3, -1)
    s = np.sort(idx, axis=0)
    return tuple(s)


class Jet:
    """Truncated Taylor expansion of a scalar field at one or many points.

    ``coeffs[k]`` holds the k-th derivative tensor; for a batch of ``B``
    points in ``n`` variables ``coeffs[0]`` has shape ``(B,)``, ``coeffs[1]``
    ``(B, n)`` and so on.  Unbatched jets drop the leading axis.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[np.ndarray]):
        self.coeffs = list(coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self):
        return self.coeffs[0]

    @property
    def grad(self):
        return self.coeffs[1]

    @property
    def hess(self):
        return self.coeffs[2]

    @property
    def third(self):
        return self.coeffs[3]

    @property
    def partials(self) -> tuple:
        return tuple(self.coeffs[1:])

    def truncate(self, order: int) -> "Jet":
        return Jet(self.coeffs[: order + 1])

    def derivative(self, i: int) -> "Jet":
        """Jet of the partial derivative along coordinate ``i`` (order drops by one)."""
        return Jet([c[..., i] for c in self.coeffs[1:]])

    # arithmetic ---------------------------------------------------------
    def _binary(self, other):
        if isinstance(other, Jet):
            k = min(self.order, other.order)
            return self.coeffs[: k + 1], other.coeffs[: k + 1]
        return self.coeffs, None

    def __add__(self, other):
        a, b = self._binary(other)
        if b is None:
            return Jet([a[0] + other] + a[1:])
        return Jet([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Jet([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._binary(other)
        if b is None:
            return Jet([c * other for c in a])
        return Jet(_leibniz(a, b))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet([c / other for c in self.coeffs])

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self) -> "Jet":
        u = self.coeffs[0]
        if np.any(u == 0):
            raise ZeroDivisionError("reciprocal of zero")
        inv = 1.0 / u
        return self.compose([inv, -inv * inv, 2 * inv**3, -6 * inv**4])

    def compose(self, h: Sequence[np.ndarray]) -> "Jet":
        """Jet of ``g(self)`` given ``h[k] = g^(k)(self.value)``."""
        return Jet(_faa_di_bruno(self.coeffs, h))


def _leibniz(a, b):
    out = [a[0] * b[0]]
    k = len(a) - 1
    if k >= 1:
        a0 = a[0][..., None]
        b0 = b[0][..., None]
        out.append(a[1] * b0 + a0 * b[1])
    if k >= 2:
        a0 = a[0][..., None, None]
        b0 = b[0][..., None, None]
        ab = a[1][..., :, None] * b[1][..., None, :]
        out.append(a[2] * b0 + ab + np.swapaxes(ab, -1, -2) + a0 * b[2])
    if k >= 3:
        a0 = a[0][..., None, None, None]
        b0 = b[0][..., None, None, None]
        # a_ij b_k + a_ik b_j + a_jk b_i, and the mirror with a,b swapped
        t1 = a[2][..., :, :, None] * b[1][..., None, None, :]
        t2 = b[2][..., :, :, None] * a[1][..., None, None, :]
        sym = (
            t1 + np.swapaxes(t1, -1, -2) + np.moveaxis(t1, -1, -3)
            + t2 + np.swapaxes(t2, -1, -2) + np.moveaxis(t2, -1, -3)
        )
        out.append(a[3] * b0 + sym + a0 * b[3])
    return out


def _faa_di_bruno(u, h):
    out = [h[0] + 0.0 * u[0]]
    k = len(u) - 1
    if k >= 1:
        out.append(h[1][..., None] * u[1])
    if k >= 2:
        uu = u[1][..., :, None] * u[1][..., None, :]
        out.append(h[2][..., None, None] * uu + h[1][..., None, None] * u[2])
    if k >= 3:
        uuu = u[1][..., :, None, None] * u[1][..., None, :, None] * u[1][..., None, None, :]
        t = u[2][..., :, :, None] * u[1][..., None, None, :]
        sym = t + np.swapaxes(t, -1, -2) + np.moveaxis(t, -1, -3)
        out.append(
            h[3][..., None, None, None] * uuu
            + h[2][..., None, None, None] * sym
            + h[1][..., None, None, None] * u[3]
        )
    return out


def _symmetrize(jet: Jet) -> Jet:
    c = list(jet.coeffs)
    if len(c) > 2:
        h = c[2]
        upper = np.triu(np.ones(h.shape[-2:], dtype=bool))
        c[2] = np.where(upper, h, np.swapaxes(h, -1, -2))
    if len(c) > 3:
        t = c[3]
        i, j, k = _sym3_index(t.shape[-1])
        n = t.shape[-1]
        c[3] = t[..., i, j, k].reshape(t.shape[:-3] + (n, n, n))
    return Jet(c)


def _falling(k: int, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= k - i
    return out


def _eval(node: Node, env: dict, order: int, batch: int, n: int) -> Jet:
    if isinstance(node, Num):
        return _constant(node.value, order, batch, n)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, env, order, batch, n)
    if isinstance(node, BinOp):
        a = _eval(node.left, env, order, batch, n)
        b = _eval(node.right, env, order, batch, n)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if np.any(b.value == 0):
            raise ExprDomainError("division by zero", node)
        return a * b.reciprocal()
    if isinstance(node, Pow):
        u = _eval(node.base, env, order, batch, n)
        k = node.exponent
        if k == 0:
            return _constant(1.0, order, batch, n)
        if k == 1:
            return u
        v = u.value
        h = []
        for j in range(order + 1):
            c = _falling(k, j)
            h.append(c * v ** (k - j) if c != 0.0 else np.zeros_like(v))
        return u.compose(h)
    if isinstance(node, Func):
        u = _eval(node.arg, env, order, batch, n)
        v = u.value
        name = node.name
        if name == "sin":
            s, c = np.sin(v), np.cos(v)
            h = [s, c, -s, -c]
        elif name == "cos":
            s, c = np.sin(v), np.cos(v)
            h = [c, -s, -c, s]
        elif name == "exp":
            e = np.exp(v)
            h = [e, e, e, e]
        elif name == "log":
            if np.any(v <= 0):
                raise ExprDomainError("log of non-positive value", node)
            inv = 1.0 / v
            h = [np.log(v), inv, -inv**2, 2 * inv**3]
        else:
            if np.any(v < 0) or (order > 0 and np.any(v == 0)):
                raise ExprDomainError("sqrt outside its domain", node)
            r = np.sqrt(v)
            if order == 0:
                h = [r]
            else:
                inv = 1.0 / v
                h = [r, 0.5 / r, -0.25 * r * inv**2, 0.375 * r * inv**3]
        return u.compose(h[: order + 1])
    raise TypeError(node)


def _constant(value: float, order: int, batch: int, n: int) -> Jet:
    coeffs = [np.full(batch, float(value))]
    for k in range(1, order + 1):
        coeffs.append(np.zeros((batch,) + (n,) * k))
    return Jet(coeffs)


def _variable_env(points: np.ndarray, names: Sequence[str], order: int) -> dict:
    batch, n = points.shape
    env = {}
    for i, name in enumerate(names):
        coeffs = [points[:, i].astype(float)]
        if order >= 1:
            g = np.zeros((batch, n))
            g[:, i] = 1.0
            coeffs.append(g)
        for k in range(2, order + 1):
            coeffs.append(np.zeros((batch,) + (n,) * k))
        env[name] = Jet(coeffs)
    return env


def eval_jets(
    exprs: Sequence[Expression | None],
    points,
    order: int,
    variables: Sequence[str] | None = None,
) -> list[Jet | None]:
    """Evaluate several expressions on a batch of points ``(B, n)``.

    ``None`` entries stand for structurally zero components and are passed
    through unchanged.  Returned jets carry the batch axis.
    """
    if order not in range(MAX_ORDER + 1):
        raise ValueError(f"order must be in 0..{MAX_ORDER}, got {order}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    batch, n = pts.shape
    names = tuple(variables) if variables is not None else coordinate_names(n)
    if len(names) != n:
        raise ValueError(f"point has dimension {n} but chart has {len(names)} coordinates")
    env = _variable_env(pts, names, order)
    out = []
    for e in exprs:
        if e is None:
            out.append(None)
            continue
        missing = e.variables - env.keys()
        if missing:
            raise ValueError(f"expression uses variables {sorted(missing)} outside the chart")
        out.append(_symmetrize(_eval(e.ast, env, order, batch, n)))
    return out


def eval_jet(
    e: Expression,
    point,
    order: int,
    variables: Sequence[str] | None = None,
) -> Jet:
    """Value and partial derivatives of ``e`` up to ``order`` at ``point``.

    A 1-D ``point`` gives an unbatched jet; a 2-D array of points gives a
    batched one.
    """
    arr = np.asarray(point, dtype=float)
    (jet,) = eval_jets([e], arr, order, variables)
    if arr.ndim == 1:
        jet = Jet([c[0] for c in jet.coeffs])
    if not all(np.all(np.isfinite(c)) for c in jet.coeffs):
        raise ExprDomainError("non-finite value", e.ast)
    return jet


def jet_zero(order: int, batch: int, n: int) -> Jet:
    return _constant(0.0, order, batch, n)


def evaluate(e: Expression, point, variables: Sequence[str] | None = None) -> float:
    return float(eval_jet(e, point, 0, variables).value)


__all__ = [
    "ArityError",
    "Expression",
    "ExprDomainError",
    "ExprError",
    "ExprSyntaxError",
    "FUNCTIONS",
    "Jet",
    "UnknownIdentifierError",
    "ZERO",
    "as_expression",
    "coordinate_names",
    "eval_jet",
    "eval_jets",
    "evaluate",
    "format_node",
    "jet_zero",
    "parse",
]

