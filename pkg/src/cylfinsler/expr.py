"""Symbolic expressions for the reduced metric function phi(x0, r, s, z).

Nodes are hash-consed: building the same expression twice returns the same
object, so structural equality is identity and derivative caches share work
across every partial of a model.
"""
from __future__ import annotations

import math
import re
import threading
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

COORDINATES = ("x0", "r", "s", "z")
FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos")

_UNARY = frozenset(FUNCTIONS)


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text
        self.reason = message


class UnknownFunctionError(ParseError):
    pass


class UnboundVariableError(ExprError):
    def __init__(self, names: Iterable[str]):
        self.names = tuple(sorted(names))
        super().__init__("unbound variable(s): " + ", ".join(self.names))


class DomainError(ExprError, ArithmeticError):
    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in {subexpr}")
        self.subexpr = subexpr


class Expr:
    """Immutable expression node. Build through the module constructors."""

    __slots__ = ("op", "args", "value", "_hash", "__weakref__")

    op: str
    args: tuple
    value: object

    def __init__(self, op, args, value, h):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "_hash", h)

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def __str__(self):
        return to_string(self)

    def __reduce__(self):
        return (parse, (to_string(self),))

    # operator sugar, mostly for tests and the catalog
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    @property
    def is_number(self) -> bool:
        return self.op == "num"


_intern: dict = {}
_intern_lock = threading.Lock()


def _num_key(v):
    if isinstance(v, Fraction):
        return ("q", v.numerator, v.denominator)
    return ("f", float(v).hex())


def _make(op: str, args: tuple = (), value=None) -> Expr:
    vkey = _num_key(value) if op in ("num", "pow") else value
    key = (op, args, vkey)
    node = _intern.get(key)
    if node is None:
        with _intern_lock:
            node = _intern.get(key)
            if node is None:
                node = Expr(op, args, value, hash(key))
                _intern[key] = node
    return node


def _lift(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return num(v)


# ---------------------------------------------------------------- constructors

def num(v) -> Expr:
    if isinstance(v, bool):
        v = int(v)
    if isinstance(v, int):
        v = Fraction(v)
    elif isinstance(v, Fraction):
        pass
    elif isinstance(v, float):
        if not math.isfinite(v):
            raise ExprError(f"non-finite constant {v!r}")
    else:
        raise TypeError(f"cannot make a constant from {type(v).__name__}")
    return _make("num", (), v)


def sym(name: str) -> Expr:
    return _make("sym", (), name)


ZERO = num(0)
ONE = num(1)
TWO = num(2)


def _is_zero(e: Expr) -> bool:
    return e.op == "num" and e.value == 0 and isinstance(e.value, Fraction)


def _is_one(e: Expr) -> bool:
    return e.op == "num" and e.value == 1 and isinstance(e.value, Fraction)


def _combine(a, b, f):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return f(a, b)
    return f(float(a), float(b))


def add(*terms: Expr) -> Expr:
    flat: list = []
    const = None
    const_pos = -1
    for t in terms:
        parts = t.args if t.op == "add" else (t,)
        for p in parts:
            if p.op == "num":
                if const is None:
                    const = p.value
                    const_pos = len(flat)
                    flat.append(None)
                else:
                    const = _combine(const, p.value, lambda x, y: x + y)
            else:
                flat.append(p)
    if const is not None:
        if isinstance(const, Fraction) and const == 0:
            del flat[const_pos]
        else:
            flat[const_pos] = num(const)
    if not flat:
        return num(const) if const is not None else ZERO
    if len(flat) == 1:
        return flat[0]
    return _make("add", tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat: list = []
    const = None
    const_pos = -1
    for f in factors:
        parts = f.args if f.op == "mul" else (f,)
        for p in parts:
            if p.op == "num":
                if isinstance(p.value, Fraction) and p.value == 0:
                    return ZERO
                if const is None:
                    const = p.value
                    const_pos = len(flat)
                    flat.append(None)
                else:
                    const = _combine(const, p.value, lambda x, y: x * y)
            else:
                flat.append(p)
    if const is not None:
        if isinstance(const, Fraction) and const == 1:
            del flat[const_pos]
        elif isinstance(const, Fraction) and const == -1 and len(flat) == 2:
            return neg(flat[1 - const_pos])
        else:
            flat[const_pos] = num(const)
    if not flat:
        return num(const) if const is not None else ONE
    if len(flat) == 1:
        return flat[0]
    return _make("mul", tuple(flat))


def neg(a: Expr) -> Expr:
    if a.op == "num":
        return num(-a.value)
    if a.op == "neg":
        return a.args[0]
    return _make("neg", (a,))


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    if _is_one(b):
        return a
    if _is_zero(a) and not _is_zero(b):
        return ZERO
    if a.op == "num" and b.op == "num" and b.value != 0:
        return num(_combine(a.value, b.value, lambda x, y: x / y))
    return _make("div", (a, b))


def _exact_root(q: Fraction, p: Fraction):
    # rational q**p when it is exactly rational, else None
    if p.denominator == 1:
        if q == 0 and p < 0:
            return None
        return q ** int(p)
    if q < 0:
        return None
    k = p.denominator
    rn = round(q.numerator ** (1.0 / k))
    rd = round(q.denominator ** (1.0 / k))
    for cn in (rn - 1, rn, rn + 1):
        for cd in (rd - 1, rd, rd + 1):
            if cn >= 0 and cd > 0 and cn ** k == q.numerator and cd ** k == q.denominator:
                root = Fraction(cn, cd)
                if root == 0 and p < 0:
                    return None
                return root ** p.numerator
    return None


def power(base: Expr, p) -> Expr:
    """base**p for a rational exponent; anything else becomes exp(p*log(base))."""
    if isinstance(p, Expr):
        if p.op == "num":
            p = p.value
            if isinstance(p, float):
                p = Fraction(repr(p))
        else:
            return exp(mul(p, log(base)))
    if isinstance(p, float):
        p = Fraction(repr(p))
    p = Fraction(p)
    if p == 0:
        return ONE
    if p == 1:
        return base
    if base.op == "num":
        if isinstance(base.value, Fraction):
            r = _exact_root(base.value, p)
            if r is not None:
                return num(r)
        elif p.denominator == 1 and base.value != 0:
            return num(base.value ** int(p))
    return _make("pow", (base,), p)


def _func(name: str, a: Expr) -> Expr:
    if a.op == "num" and isinstance(a.value, Fraction):
        v = a.value
        if name == "sqrt" and v >= 0:
            r = _exact_root(v, Fraction(1, 2))
            if r is not None:
                return num(r)
        elif name == "exp" and v == 0:
            return ONE
        elif name == "log" and v == 1:
            return ZERO
        elif name == "sin" and v == 0:
            return ZERO
        elif name == "cos" and v == 0:
            return ONE
    return _make(name, (a,))


def sqrt(a: Expr) -> Expr:
    return _func("sqrt", a)


def exp(a: Expr) -> Expr:
    return _func("exp", a)


def log(a: Expr) -> Expr:
    return _func("log", a)


def sin(a: Expr) -> Expr:
    return _func("sin", a)


def cos(a: Expr) -> Expr:
    return _func("cos", a)


_FUNC_BUILDERS = {"sqrt": sqrt, "exp": exp, "log": log, "sin": sin, "cos": cos}


def rebuild(op: str, args: Sequence[Expr], value=None) -> Expr:
    if op == "add":
        return add(*args)
    if op == "mul":
        return mul(*args)
    if op == "neg":
        return neg(args[0])
    if op == "div":
        return div(args[0], args[1])
    if op == "pow":
        return power(args[0], value)
    if op in _UNARY:
        return _func(op, args[0])
    if op == "num":
        return num(value)
    if op == "sym":
        return sym(value)
    raise ExprError(f"unknown node type {op!r}")


# ------------------------------------------------------------------ traversal

def postorder(roots: Iterable[Expr]) -> list:
    """Unique nodes reachable from ``roots``, children before parents."""
    seen = set()
    order = []
    for root in roots:
        if root in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if node in seen:
                continue
            seen.add(node)
            stack.append((node, True))
            for a in reversed(node.args):
                if a not in seen:
                    stack.append((a, False))
    return order


def free_symbols(e: Expr) -> frozenset:
    return frozenset(n.value for n in postorder([e]) if n.op == "sym")


def parameters(e: Expr) -> frozenset:
    return frozenset(n for n in free_symbols(e) if n not in COORDINATES)


def count_nodes(roots: Iterable[Expr]) -> int:
    return len(postorder(roots))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    mapping = {k: _lift(v) for k, v in mapping.items()}
    done: dict = {}
    for node in postorder([e]):
        if node.op == "sym":
            done[node] = mapping.get(node.value, node)
        elif node.op == "num":
            done[node] = node
        else:
            done[node] = rebuild(node.op, [done[a] for a in node.args], node.value)
    return done[e]


# ------------------------------------------------------------- differentiation

_deriv_cache: dict = {}
_deriv_lock = threading.Lock()


def _d_node(node: Expr, var: str, d: dict) -> Expr:
    op = node.op
    if op == "num":
        return ZERO
    if op == "sym":
        return ONE if node.value == var else ZERO
    args = node.args
    if op == "add":
        return add(*(d[a] for a in args))
    if op == "mul":
        terms = []
        for i, a in enumerate(args):
            da = d[a]
            if _is_zero(da):
                continue
            terms.append(mul(*args[:i], da, *args[i + 1:]))
        return add(*terms)
    if op == "neg":
        return neg(d[args[0]])
    if op == "div":
        a, b = args
        da, db = d[a], d[b]
        first = div(da, b)
        if _is_zero(db):
            return first
        return sub(first, div(mul(a, db), power(b, 2)))
    a = args[0]
    da = d[a]
    if _is_zero(da):
        return ZERO
    if op == "pow":
        p = node.value
        return mul(num(p), power(a, p - 1), da)
    if op == "sqrt":
        return div(da, mul(TWO, node))
    if op == "exp":
        return mul(node, da)
    if op == "log":
        return div(da, a)
    if op == "sin":
        return mul(cos(a), da)
    if op == "cos":
        return neg(mul(sin(a), da))
    raise ExprError(f"cannot differentiate node {op!r}")


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to a coordinate."""
    if var not in COORDINATES:
        raise ValueError(f"can only differentiate with respect to {COORDINATES}, got {var!r}")
    cached = _deriv_cache.get((e, var))
    if cached is not None:
        return cached
    d: dict = {}
    for node in postorder([e]):
        hit = _deriv_cache.get((node, var))
        if hit is None:
            hit = _d_node(node, var, d)
        d[node] = hit
    with _deriv_lock:
        for node, dn in d.items():
            _deriv_cache.setdefault((node, var), dn)
    return d[e]


def partial(e: Expr, index: Sequence[int]) -> Expr:
    """d^a/dx0^a d^b/dr^b d^c/ds^c d^d/dz^d of ``e`` for index (a, b, c, d).

    Every index is reached by one canonical differentiation path, so mixed
    partials are the same node regardless of how they were requested.
    """
    index = tuple(int(k) for k in index)
    if len(index) != 4 or min(index) < 0:
        raise ValueError(f"multi-index must have four non-negative entries, got {index}")
    out = e
    for var, k in zip(COORDINATES, index):
        for _ in range(k):
            out = differentiate(out, var)
    return out


# ------------------------------------------------------------------ evaluation

def _as_float(v):
    return float(v) if isinstance(v, Fraction) else v


def _real_pow(x, p: Fraction, node: Expr):
    if p.denominator == 1:
        k = int(p)
        if k < 0 and x == 0:
            raise DomainError("division by zero in negative power", node)
        return x ** k
    if x < 0:
        raise DomainError(f"fractional power of negative value {x!r}", node)
    if x == 0 and p < 0:
        raise DomainError("division by zero in negative power", node)
    return x ** float(p)


def _eval_node(node: Expr, vals: dict, bindings: Mapping):
    op = node.op
    if op == "num":
        return _as_float(node.value)
    if op == "sym":
        return bindings[node.value]
    args = [vals[a] for a in node.args]
    if op == "add":
        acc = args[0]
        for v in args[1:]:
            acc = acc + v
        return acc
    if op == "mul":
        acc = args[0]
        for v in args[1:]:
            acc = acc * v
        return acc
    if op == "neg":
        return -args[0]
    if op == "div":
        b = args[1]
        if _scalar_of(b) == 0:
            raise DomainError("division by zero", node)
        return args[0] / b
    x = args[0]
    if hasattr(x, "apply"):  # truncated Taylor jets
        x0 = x.value
        _check_domain(op, x0, node)
        if op == "pow":
            return x.apply_power(float(node.value)) if node.value.denominator != 1 else x ** int(node.value)
        return x.apply(op)
    if op == "pow":
        return _real_pow(x, node.value, node)
    _check_domain(op, x, node)
    try:
        return _MATH[op](x)
    except OverflowError:
        raise DomainError(f"overflow in {op}", node) from None


def _scalar_of(v):
    return v.value if hasattr(v, "apply") else v


def _check_domain(op, x, node):
    if op == "sqrt" and x < 0:
        raise DomainError(f"sqrt of negative value {x!r}", node)
    if op == "log" and x <= 0:
        raise DomainError(f"log of non-positive value {x!r}", node)
    if op == "pow":
        p = node.value
        if p.denominator != 1 and x < 0:
            raise DomainError(f"fractional power of negative value {x!r}", node)
        if p < 0 and x == 0:
            raise DomainError("division by zero in negative power", node)


_MATH = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos}


def _check_bound(roots: Sequence[Expr], bindings: Mapping):
    missing = set()
    for r in roots:
        missing |= free_symbols(r) - set(bindings)
    if missing:
        raise UnboundVariableError(missing)


def evaluate(e: Expr, bindings: Mapping[str, float]):
    """Evaluate ``e``. Bindings may be floats or truncated Taylor jets."""
    _check_bound([e], bindings)
    vals: dict = {}
    for node in postorder([e]):
        vals[node] = _eval_node(node, vals, bindings)
    return vals[e]


def evaluate_many(roots: Sequence[Expr], bindings: Mapping[str, float]) -> list:
    _check_bound(roots, bindings)
    vals: dict = {}
    for node in postorder(roots):
        vals[node] = _eval_node(node, vals, bindings)
    return [vals[r] for r in roots]


class CompiledExprs:
    """Straight-line float evaluator for a fixed list of expressions.

    Shared sub-expressions are computed once. On any arithmetic failure the
    evaluation is replayed node by node so the error names the sub-expression.
    """

    def __init__(self, roots: Sequence[Expr]):
        self.roots = tuple(roots)
        order = postorder(self.roots)
        self.symbols = tuple(sorted({n.value for n in order if n.op == "sym"}))
        names = {}
        lines = ["def _f(_b):"]
        for sname in self.symbols:
            names[sym(sname)] = f"v{len(names)}"
            lines.append(f"    {names[sym(sname)]} = _b[{sname!r}]")
        for node in order:
            if node in names:
                continue
            nm = f"v{len(names)}"
            names[node] = nm
            op = node.op
            if op == "num":
                lines.append(f"    {nm} = {float(node.value)!r}")
                continue
            a = [names[x] for x in node.args]
            if op == "add":
                rhs = " + ".join(a)
            elif op == "mul":
                rhs = " * ".join(a)
            elif op == "neg":
                rhs = f"-{a[0]}"
            elif op == "div":
                rhs = f"{a[0]} / {a[1]}"
            elif op == "pow":
                p = node.value
                if p.denominator == 1:
                    rhs = f"{a[0]} ** {int(p)}"
                else:
                    rhs = f"_fpow({a[0]}, {float(p)!r})"
            else:
                rhs = f"_{op}({a[0]})"
            lines.append(f"    {nm} = {rhs}")
        lines.append("    return (" + "".join(f"{names[r]}, " for r in self.roots) + ")")
        src = "\n".join(lines)
        env = {
            "_sqrt": math.sqrt, "_exp": math.exp, "_log": math.log,
            "_sin": math.sin, "_cos": math.cos, "_fpow": _fpow,
        }
        exec(compile(src, "<cylfinsler-compiled>", "exec"), env)
        self._fn = env["_f"]
        self.size = len(order)

    def __call__(self, bindings: Mapping[str, float]) -> tuple:
        missing = set(self.symbols) - set(bindings)
        if missing:
            raise UnboundVariableError(missing)
        try:
            return self._fn(bindings)
        except (ValueError, ZeroDivisionError, OverflowError, TypeError):
            # replay for a precise diagnosis; raises DomainError
            evaluate_many(self.roots, bindings)
            raise


def _fpow(x, p):
    if x < 0:
        raise ValueError("fractional power of negative value")
    return x ** p


# -------------------------------------------------------------------- printing

def _fmt_number(v) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"({v.numerator}/{v.denominator})"
    return repr(v)


def _is_negative_num(e: Expr) -> bool:
    return e.op == "num" and e.value < 0


def _atomic(e: Expr) -> bool:
    if e.op == "sym" or e.op in _UNARY:
        return True
    if e.op == "num":
        return not _is_negative_num(e)
    return False


def _wrap(e: Expr) -> str:
    s = to_string(e)
    return s if _atomic(e) else f"({s})"


def to_string(e: Expr) -> str:
    """Render ``e`` in the input grammar; ``parse`` inverts it exactly."""
    op = e.op
    if op == "num":
        return _fmt_number(e.value)
    if op == "sym":
        return e.value
    if op in _UNARY:
        return f"{op}({to_string(e.args[0])})"
    if op == "neg":
        a = e.args[0]
        inner = to_string(a) if (_atomic(a) or a.op == "pow") else f"({to_string(a)})"
        return "-" + inner
    if op == "add":
        parts = []
        for i, t in enumerate(e.args):
            if i == 0:
                parts.append(to_string(t) if t.op != "add" else f"({to_string(t)})")
            elif t.op == "neg":
                a = t.args[0]
                parts.append(" - " + (f"({to_string(a)})" if a.op in ("add", "neg") or _is_negative_num(a) else to_string(a)))
            elif _is_negative_num(t):
                parts.append(" - " + to_string(num(-t.value)))
            else:
                parts.append(" + " + to_string(t))
        return "".join(parts)
    if op == "mul":
        return "*".join(
            to_string(f) if (_atomic(f) or f.op == "pow") else f"({to_string(f)})"
            for f in e.args
        )
    if op == "div":
        a, b = e.args
        left = to_string(a) if (_atomic(a) or a.op in ("pow", "mul")) else f"({to_string(a)})"
        right = to_string(b) if (_atomic(b) or b.op == "pow") else f"({to_string(b)})"
        if b.op == "num" and b.value.__class__ is Fraction and b.value.denominator != 1:
            right = to_string(b)
        return f"{left}/{right}"
    if op == "pow":
        b = e.args[0]
        p = e.value
        base = to_string(b) if (b.op in ("sym",) or b.op in _UNARY
                                or (b.op == "num" and isinstance(b.value, Fraction)
                                    and b.value.denominator == 1 and b.value >= 0)) else f"({to_string(b)})"
        if p.denominator == 1 and p >= 0:
            ex = str(p.numerator)
        elif p.denominator == 1:
            ex = f"({p.numerator})"
        else:
            ex = f"({p.numerator}/{p.denominator})"
        return f"{base}^{ex}"
    raise ExprError(f"unknown node type {op!r}")


# --------------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        n = len(text)
        while True:
            while pos < n and text[pos].isspace():
                pos += 1
            if pos >= n:
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.tokens.append(("eof", "", n))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, expected: str):
        kind, text, off = self.peek()
        got = "end of input" if kind == "eof" else repr(text)
        raise ParseError(f"expected {expected}, got {got}", off, self.text)

    def expect(self, op: str):
        kind, text, _ = self.peek()
        if kind != "op" or text != op:
            self.error(repr(op))
        self.take()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "eof":
            self.error("operator or end of input")
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                t = self.term()
                terms.append(t if text == "+" else neg(t))
            else:
                break
        return add(*terms) if len(terms) > 1 else terms[0]

    def term(self) -> Expr:
        e = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                at = self.peek()[2]
                f = self.factor()
                if text == "/" and f.op == "num" and f.value == 0:
                    raise ParseError("division by literal zero", at, self.text)
                e = mul(e, f) if text == "*" else div(e, f)
            else:
                break
        return e

    def factor(self) -> Expr:
        b = self.base()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return power(b, self.factor())
        return b

    def base(self) -> Expr:
        kind, text, off = self.peek()
        if kind == "num":
            self.take()
            if re.fullmatch(r"\d+", text):
                return num(int(text))
            return num(float(text))
        if kind == "ident":
            self.take()
            nkind, ntext, _ = self.peek()
            if nkind == "op" and ntext == "(":
                if text not in _FUNC_BUILDERS:
                    raise UnknownFunctionError(f"unknown function {text!r}", off, self.text)
                self.take()
                arg = self.expr()
                self.expect(")")
                return _FUNC_BUILDERS[text](arg)
            if text in _FUNC_BUILDERS:
                raise ParseError(f"expected '(' after function {text!r}", self.peek()[2], self.text)
            return sym(text)
        if kind == "op" and text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "op" and text == "-":
            self.take()
            return neg(self.factor())
        self.error("number, identifier, '(' or '-'")


def parse(text: str) -> Expr:
    """Parse an expression in x0, r, s, z and named parameters.

    Exponents must fold to rational constants; any other exponent ``g`` in
    ``f^g`` is rewritten as ``exp(g*log(f))``.
    """
    if not isinstance(text, str):
        raise TypeError("parse expects a string")
    return _Parser(text).parse()
