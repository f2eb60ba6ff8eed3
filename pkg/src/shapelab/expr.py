"""Closed-form scalar expressions in the coordinates R1..Rn.

Expressions are parsed from a small infix language, evaluated on numpy
arrays, and differentiated symbolically.  Every metric coefficient and free
function in the package is a :class:`ScalarExpr`.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := number | ident | ident "(" expr ")" | "(" expr ")"

so ``-x^2`` is ``-(x^2)`` and ``^`` is right-associative.  Numeric literals
are never negative in the tree; a leading minus is always a :class:`Neg`.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Mapping

import numpy as np

__all__ = [
    "ExprSyntaxError",
    "UnknownIdentifier",
    "UnboundName",
    "DomainError",
    "ScalarExpr",
    "parse",
    "as_expr",
    "const",
    "var",
    "FUNCTIONS",
]


class ExprSyntaxError(ValueError):
    """Malformed source text.  ``offset`` is a byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    pass


class UnboundName(KeyError):
    pass


class DomainError(ArithmeticError):
    """A function was evaluated outside its domain."""

    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


FUNCTIONS = (
    "sin", "cos", "tan", "sinh", "cosh", "tanh",
    "exp", "ln", "sqrt", "arcsin", "arccos", "arctan",
)

_VAR_RE = re.compile(r"R[1-9][0-9]*\Z")


# ---------------------------------------------------------------------------
# Tree nodes.  Immutable, structurally compared, with cached hashes so that
# large derivative trees can be memoised cheaply.


class Node:
    __slots__ = ("_hash",)
    prec = 5

    def _key(self):
        raise NotImplementedError

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError("expression nodes are immutable")


class Num(Node):
    __slots__ = ("value",)

    def __init__(self, value: float):
        value = float(value)
        if not value >= 0.0 or math.isinf(value):
            raise ValueError(f"literal must be finite and non-negative, got {value}")
        object.__setattr__(self, "value", value)

    def _key(self):
        return (self.value,)


class Var(Node):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)

    def _key(self):
        return (self.name,)


class Neg(Node):
    __slots__ = ("arg",)
    prec = 3

    def __init__(self, arg: Node):
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.arg,)


class Bin(Node):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Node, right: Node):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @property
    def prec(self):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[self.op]

    def _key(self):
        return (self.op, self.left, self.right)


class Call(Node):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Node):
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return (self.fn, self.arg)


ZERO = Num(0.0)
ONE = Num(1.0)
TWO = Num(2.0)


def _num(value: float) -> Node:
    return Num(value) if value >= 0 else Neg(Num(-value))


def _const_value(node: Node):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.arg, Num):
        return -node.arg.value
    return None


# Folding constructors.  Only trivial identities are applied; there is no
# general simplifier.

def _add(a: Node, b: Node) -> Node:
    va, vb = _const_value(a), _const_value(b)
    if va == 0.0:
        return b
    if vb == 0.0:
        return a
    if va is not None and vb is not None:
        return _num(va + vb)
    if isinstance(b, Neg):
        return Bin("-", a, b.arg)
    return Bin("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    va, vb = _const_value(a), _const_value(b)
    if vb == 0.0:
        return a
    if va == 0.0:
        return _neg(b)
    if va is not None and vb is not None:
        return _num(va - vb)
    if a == b:
        return ZERO
    return Bin("-", a, b)


def _neg(a: Node) -> Node:
    va = _const_value(a)
    if va is not None:
        return _num(-va)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Node, b: Node) -> Node:
    va, vb = _const_value(a), _const_value(b)
    if va == 0.0 or vb == 0.0:
        return ZERO
    if va == 1.0:
        return b
    if vb == 1.0:
        return a
    if va == -1.0:
        return _neg(b)
    if vb == -1.0:
        return _neg(a)
    if va is not None and vb is not None:
        return _num(va * vb)
    if isinstance(a, Neg) and isinstance(b, Neg):
        return _mul(a.arg, b.arg)
    if isinstance(a, Neg):
        return _neg(_mul(a.arg, b))
    if isinstance(b, Neg):
        return _neg(_mul(a, b.arg))
    return Bin("*", a, b)


def _div(a: Node, b: Node) -> Node:
    va, vb = _const_value(a), _const_value(b)
    if va == 0.0:
        return ZERO
    if vb == 1.0:
        return a
    if vb == -1.0:
        return _neg(a)
    if isinstance(a, Neg):
        return _neg(_div(a.arg, b))
    if isinstance(b, Neg):
        return _neg(_div(a, b.arg))
    return Bin("/", a, b)


def _pow(a: Node, b: Node) -> Node:
    vb = _const_value(b)
    if vb == 0.0:
        return ONE
    if vb == 1.0:
        return a
    va = _const_value(a)
    if va is not None and vb is not None and va >= 0:
        return _num(va ** vb)
    return Bin("^", a, b)


def _call(fn: str, a: Node) -> Node:
    return Call(fn, a)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()−])
    """,
    re.VERBOSE,
)


class _Parser:
    def __init__(self, src: str, names: frozenset[str]):
        self.src = src
        self.names = names
        self.tokens = []  # (kind, text, byte offset)
        pos = 0
        while pos < len(src):
            m = _TOKEN_RE.match(src, pos)
            if m is None:
                raise ExprSyntaxError(f"unexpected character {src[pos]!r}", self._byte(pos))
            kind = m.lastgroup
            if kind != "ws":
                text = m.group()
                if text == "−":
                    text = "-"
                self.tokens.append((kind, text, self._byte(pos)))
            pos = m.end()
        self.end = self._byte(len(src))
        self.i = 0

    def _byte(self, char_index: int) -> int:
        return len(self.src[:char_index].encode("utf-8"))

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("eof", "", self.end)

    def take(self, text=None):
        tok = self.peek()
        if text is not None and tok[1] != text:
            found = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise ExprSyntaxError(f"expected {text!r}, found {found}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Node:
        if not self.tokens:
            raise ExprSyntaxError("empty expression", 0)
        node = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, text, offset = self.peek()
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "ident":
            self.take()
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownIdentifier(f"unknown function {text!r}", offset)
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Call(text, arg)
            if text in FUNCTIONS:
                raise ExprSyntaxError(f"function {text!r} needs an argument", offset)
            if not (_VAR_RE.match(text) or text == "pi" or text in self.names):
                raise UnknownIdentifier(f"unknown identifier {text!r}", offset)
            return Var(text)
        if text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        found = "end of input" if kind == "eof" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", offset)


# ---------------------------------------------------------------------------
# Printing


def _fmt_num(v: float) -> str:
    if v.is_integer() and v < 1e15:
        return str(int(v))
    return repr(v)


def _to_str(node: Node) -> str:
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({_to_str(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, 3)
    op = node.op
    if op == "^":
        return _wrap(node.left, 5) + "^" + _wrap(node.right, 3)
    p = node.prec
    sep = f" {op} " if p == 1 else op
    return _wrap(node.left, p) + sep + _wrap(node.right, p + 1)


def _wrap(node: Node, min_prec: int) -> str:
    s = _to_str(node)
    return s if node.prec >= min_prec else f"({s})"


# ---------------------------------------------------------------------------
# Differentiation


def _depends(node: Node, name: str, memo: dict) -> bool:
    hit = memo.get(node)
    if hit is not None:
        return hit
    if isinstance(node, Num):
        out = False
    elif isinstance(node, Var):
        out = node.name == name
    elif isinstance(node, (Neg, Call)):
        out = _depends(node.arg, name, memo)
    else:
        out = _depends(node.left, name, memo) or _depends(node.right, name, memo)
    memo[node] = out
    return out


def _diff(node: Node, name: str, memo: dict, dep: dict) -> Node:
    hit = memo.get(node)
    if hit is not None:
        return hit
    if not _depends(node, name, dep):
        out = ZERO
    elif isinstance(node, Var):
        out = ONE
    elif isinstance(node, Neg):
        out = _neg(_diff(node.arg, name, memo, dep))
    elif isinstance(node, Call):
        u = node.arg
        du = _diff(u, name, memo, dep)
        out = _mul(_chain(node.fn, u), du)
    else:
        u, v, op = node.left, node.right, node.op
        du = _diff(u, name, memo, dep)
        dv = _diff(v, name, memo, dep)
        if op == "+":
            out = _add(du, dv)
        elif op == "-":
            out = _sub(du, dv)
        elif op == "*":
            out = _add(_mul(du, v), _mul(u, dv))
        elif op == "/":
            out = _sub(_div(du, v), _div(_mul(u, dv), _pow(v, TWO)))
        elif not _depends(v, name, dep):
            cv = _const_value(v)
            lowered = _num(cv - 1.0) if cv is not None else _sub(v, ONE)
            out = _mul(_mul(v, _pow(u, lowered)), du)
        elif not _depends(u, name, dep):
            out = _mul(_mul(node, Call("ln", u)), dv)
        else:
            out = _mul(node, _add(_mul(dv, Call("ln", u)), _div(_mul(v, du), u)))
    memo[node] = out
    return out


def _chain(fn: str, u: Node) -> Node:
    """Outer derivative f'(u)."""
    if fn == "sin":
        return Call("cos", u)
    if fn == "cos":
        return _neg(Call("sin", u))
    if fn == "tan":
        return _div(ONE, _pow(Call("cos", u), TWO))
    if fn == "sinh":
        return Call("cosh", u)
    if fn == "cosh":
        return Call("sinh", u)
    if fn == "tanh":
        return _div(ONE, _pow(Call("cosh", u), TWO))
    if fn == "exp":
        return Call("exp", u)
    if fn == "ln":
        return _div(ONE, u)
    if fn == "sqrt":
        return _div(ONE, _mul(TWO, Call("sqrt", u)))
    if fn == "arcsin":
        return _div(ONE, Call("sqrt", _sub(ONE, _pow(u, TWO))))
    if fn == "arccos":
        return _neg(_div(ONE, Call("sqrt", _sub(ONE, _pow(u, TWO)))))
    if fn == "arctan":
        return _div(ONE, _add(ONE, _pow(u, TWO)))
    raise AssertionError(fn)


# ---------------------------------------------------------------------------
# Evaluation

_NP_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
    "exp": np.exp, "ln": np.log, "sqrt": np.sqrt,
    "arcsin": np.arcsin, "arccos": np.arccos, "arctan": np.arctan,
}


def _domain_check(node: Node, x, fn: str):
    if fn == "sqrt":
        bad = np.any(x < 0)
        what = "sqrt of negative value"
    elif fn == "ln":
        bad = np.any(x <= 0)
        what = "ln of non-positive value"
    elif fn in ("arcsin", "arccos"):
        bad = np.any(np.abs(x) > 1)
        what = f"{fn} argument outside [-1, 1]"
    else:
        return
    if bad:
        raise DomainError(what, _to_str(node))


def _eval(node: Node, env: Mapping, memo: dict, strict: bool):
    hit = memo.get(node)
    if hit is not None:
        return hit
    if isinstance(node, Num):
        out = node.value
    elif isinstance(node, Var):
        try:
            out = env[node.name]
        except KeyError:
            raise UnboundName(node.name) from None
    elif isinstance(node, Neg):
        out = -_eval(node.arg, env, memo, strict)
    elif isinstance(node, Call):
        x = _eval(node.arg, env, memo, strict)
        if strict:
            _domain_check(node, x, node.fn)
        out = _NP_FUNCS[node.fn](x)
    else:
        a = _eval(node.left, env, memo, strict)
        b = _eval(node.right, env, memo, strict)
        op = node.op
        if op == "+":
            out = a + b
        elif op == "-":
            out = a - b
        elif op == "*":
            out = a * b
        elif op == "/":
            if strict and np.any(np.asarray(b) == 0):
                raise DomainError("division by zero", _to_str(node))
            out = a / b
        else:
            if strict:
                cb = _const_value(node.right)
                integral = cb is not None and float(cb).is_integer()
                if not integral and np.any(np.asarray(a) < 0):
                    raise DomainError("non-integer power of negative value", _to_str(node))
                if np.any((np.asarray(a) == 0) & (np.asarray(b) < 0)):
                    raise DomainError("division by zero", _to_str(node))
            out = np.power(a, b)
    memo[node] = out
    return out


def _subs(node: Node, mapping: Mapping[str, Node], memo: dict) -> Node:
    hit = memo.get(node)
    if hit is not None:
        return hit
    if isinstance(node, Num):
        out = node
    elif isinstance(node, Var):
        out = mapping.get(node.name, node)
    elif isinstance(node, Neg):
        out = _neg(_subs(node.arg, mapping, memo))
    elif isinstance(node, Call):
        out = Call(node.fn, _subs(node.arg, mapping, memo))
    else:
        a = _subs(node.left, mapping, memo)
        b = _subs(node.right, mapping, memo)
        out = {"+": _add, "-": _sub, "*": _mul, "/": _div, "^": _pow}[node.op](a, b)
    memo[node] = out
    return out


def _names(node: Node, acc: set):
    if isinstance(node, Var):
        acc.add(node.name)
    elif isinstance(node, (Neg, Call)):
        _names(node.arg, acc)
    elif isinstance(node, Bin):
        _names(node.left, acc)
        _names(node.right, acc)
    return acc


def _size(node: Node) -> int:
    if isinstance(node, (Num, Var)):
        return 1
    if isinstance(node, (Neg, Call)):
        return 1 + _size(node.arg)
    return 1 + _size(node.left) + _size(node.right)


# ---------------------------------------------------------------------------
# Public wrapper


class ScalarExpr:
    """An immutable closed-form scalar expression.

    Arithmetic operators build new expressions with trivial constant folding,
    so derived quantities (Christoffel fields, curvature residuals) stay
    symbolic.
    """

    __slots__ = ("node",)

    def __init__(self, node: Node):
        object.__setattr__(self, "node", node)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarExpr is immutable")

    # -- introspection
    def __str__(self):
        return _to_str(self.node)

    def __repr__(self):
        return f"ScalarExpr({_to_str(self.node)!r})"

    def __eq__(self, other):
        return isinstance(other, ScalarExpr) and self.node == other.node

    def __hash__(self):
        return hash(self.node)

    @property
    def names(self) -> frozenset[str]:
        """All free names, coordinates included."""
        return frozenset(_names(self.node, set()))

    @property
    def coordinates(self) -> frozenset[str]:
        return frozenset(n for n in self.names if _VAR_RE.match(n))

    @property
    def size(self) -> int:
        return _size(self.node)

    def is_zero(self) -> bool:
        return _const_value(self.node) == 0.0

    def constant_value(self):
        """The value if the tree is a bare literal, else ``None``."""
        return _const_value(self.node)

    def depends_on(self, name: str) -> bool:
        return _depends(self.node, name, {})

    # -- calculus
    def diff(self, name: str) -> ScalarExpr:
        return ScalarExpr(_diff(self.node, name, {}, {}))

    def subs(self, mapping: Mapping[str, object]) -> ScalarExpr:
        """Replace names by expressions or numbers."""
        nodes = {k: as_expr(v).node for k, v in mapping.items()}
        return ScalarExpr(_subs(self.node, nodes, {}))

    def evaluate(self, bindings: Mapping[str, object] | None = None, strict: bool = True, **kw):
        """Evaluate with numpy broadcasting over the bound arrays.

        With ``strict`` a :class:`DomainError` names the first offending
        subexpression; otherwise numpy produces ``nan``/``inf`` silently.
        """
        env = {"pi": math.pi}
        if bindings:
            env.update(bindings)
        env.update(kw)
        if strict:
            out = _eval(self.node, env, {}, True)
        else:
            with np.errstate(all="ignore"):
                out = _eval(self.node, env, {}, False)
        return out

    __call__ = evaluate

    # -- operators
    def _bin(self, other, fn, swap=False):
        o = as_expr(other).node
        return ScalarExpr(fn(o, self.node) if swap else fn(self.node, o))

    def __add__(self, o):
        return self._bin(o, _add)

    def __radd__(self, o):
        return self._bin(o, _add, True)

    def __sub__(self, o):
        return self._bin(o, _sub)

    def __rsub__(self, o):
        return self._bin(o, _sub, True)

    def __mul__(self, o):
        return self._bin(o, _mul)

    def __rmul__(self, o):
        return self._bin(o, _mul, True)

    def __truediv__(self, o):
        return self._bin(o, _div)

    def __rtruediv__(self, o):
        return self._bin(o, _div, True)

    def __pow__(self, o):
        return self._bin(o, _pow)

    def __rpow__(self, o):
        return self._bin(o, _pow, True)

    def __neg__(self):
        return ScalarExpr(_neg(self.node))

    def apply(self, fn: str) -> ScalarExpr:
        if fn not in FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        return ScalarExpr(_call(fn, self.node))


def parse(src: str, names: Iterable[str] = ()) -> ScalarExpr:
    """Parse ``src``.

    Coordinates ``R1, R2, ...`` and ``pi`` are always accepted; any other
    identifier must be listed in ``names``.
    """
    return ScalarExpr(_Parser(src, frozenset(names)).parse())


def const(value: float) -> ScalarExpr:
    return ScalarExpr(_num(float(value)))


def var(name: str) -> ScalarExpr:
    return ScalarExpr(Var(name))


def as_expr(x, names: Iterable[str] = ()) -> ScalarExpr:
    if isinstance(x, ScalarExpr):
        return x
    if isinstance(x, str):
        return parse(x, names)
    if isinstance(x, (int, float, np.floating, np.integer)):
        return const(float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to ScalarExpr")
