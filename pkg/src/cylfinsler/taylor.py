"""Truncated multivariate Taylor polynomials ("jets").

A jet of order K in m variables stores the Taylor coefficients of a function
at a base point, for every monomial of total degree <= K. Monomials are kept
in graded order, so the coefficients of a lower-order truncation are a prefix
of the vector.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class _Basis:
    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        monos = []
        self.prefix = []
        for deg in range(order + 1):
            monos.extend(_compositions(deg, nvars))
            self.prefix.append(len(monos))
        self.monomials = monos
        self.degrees = np.array([sum(m) for m in monos])
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.factorials = np.array(
            [math.prod(math.factorial(k) for k in m) for m in monos], dtype=float
        )
        ii, jj, kk = [], [], []
        for i, a in enumerate(monos):
            da = self.degrees[i]
            for j, b in enumerate(monos):
                if da + self.degrees[j] > order:
                    continue
                ii.append(i)
                jj.append(j)
                kk.append(self.index[tuple(x + y for x, y in zip(a, b))])
        self.mul_i = np.array(ii, dtype=np.intp)
        self.mul_j = np.array(jj, dtype=np.intp)
        self.mul_k = np.array(kk, dtype=np.intp)
        # derivative maps: target basis has order-1
        self.deriv = []
        if order > 0:
            n_low = self.prefix[order - 1]
            for v in range(nvars):
                src = np.empty(n_low, dtype=np.intp)
                fac = np.empty(n_low)
                for t, m in enumerate(monos[:n_low]):
                    up = list(m)
                    up[v] += 1
                    src[t] = self.index[tuple(up)]
                    fac[t] = up[v]
                self.deriv.append((src, fac))


@lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> _Basis:
    return _Basis(nvars, order)


def _taylor_coeffs(op: str, x: float, order: int, p: float = 0.0) -> list:
    """f^(k)(x)/k! for k = 0..order."""
    if op == "exp":
        e = math.exp(x)
        return [e / math.factorial(k) for k in range(order + 1)]
    if op == "log":
        out = [math.log(x)]
        for k in range(1, order + 1):
            out.append((-1) ** (k + 1) / (k * x ** k))
        return out
    if op == "sin" or op == "cos":
        s, c = math.sin(x), math.cos(x)
        cyc = [s, c, -s, -c] if op == "sin" else [c, -s, -c, s]
        return [cyc[k % 4] / math.factorial(k) for k in range(order + 1)]
    if op == "sqrt":
        p = 0.5
    elif op == "recip":
        p = -1.0
    elif op != "pow":
        raise ValueError(f"no Taylor rule for {op!r}")
    out = []
    binom = 1.0
    for k in range(order + 1):
        out.append(binom * x ** (p - k) if not (op == "sqrt" and k == 0) else math.sqrt(x))
        binom *= (p - k) / (k + 1)
    return out


class Jet:
    """Truncated Taylor polynomial; arithmetic truncates to the lower order."""

    __slots__ = ("nvars", "order", "c", "base")
    __array_priority__ = 1000

    def __init__(self, nvars: int, order: int, coeffs, base=None):
        self.nvars = nvars
        self.order = order
        self.c = np.asarray(coeffs, dtype=float)
        # optional tag: the point the expansion is taken at
        self.base = base
        if self.c.shape != (basis(nvars, order).size,):
            raise ValueError("coefficient vector does not match basis size")

    def _new(self, order: int, coeffs, other=None) -> "Jet":
        base = self.base
        if base is None and isinstance(other, Jet):
            base = other.base
        return Jet(self.nvars, order, coeffs, base)

    # ----------------------------------------------------------- construction
    @classmethod
    def constant(cls, nvars: int, order: int, value: float, base=None) -> "Jet":
        c = np.zeros(basis(nvars, order).size)
        c[0] = value
        return cls(nvars, order, c, base)

    @classmethod
    def variable(cls, nvars: int, order: int, which: int, value: float, base=None) -> "Jet":
        c = np.zeros(basis(nvars, order).size)
        c[0] = value
        if order > 0:
            unit = [0] * nvars
            unit[which] = 1
            c[basis(nvars, order).index[tuple(unit)]] = 1.0
        return cls(nvars, order, c, base)

    @classmethod
    def variables(cls, order: int, values: Sequence[float]) -> list:
        n = len(values)
        return [cls.variable(n, order, i, v) for i, v in enumerate(values)]

    @classmethod
    def from_partials(cls, nvars: int, order: int, lookup: Callable[[tuple], float],
                      base=None) -> "Jet":
        """Build from partial derivatives: ``lookup(multi_index)`` -> value."""
        b = basis(nvars, order)
        c = np.array([lookup(m) for m in b.monomials], dtype=float) / b.factorials
        return cls(nvars, order, c, base)

    # ------------------------------------------------------------- accessors
    @property
    def value(self) -> float:
        return float(self.c[0])

    def coefficient(self, mono: Sequence[int]) -> float:
        return float(self.c[basis(self.nvars, self.order).index[tuple(mono)]])

    def partial(self, mono: Sequence[int]) -> float:
        b = basis(self.nvars, self.order)
        i = b.index[tuple(mono)]
        return float(self.c[i] * b.factorials[i])

    def partials(self) -> dict:
        b = basis(self.nvars, self.order)
        vals = self.c * b.factorials
        return {m: float(v) for m, v in zip(b.monomials, vals)}

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        if order == self.order:
            return self
        return self._new(order, self.c[: basis(self.nvars, self.order).prefix[order]])

    def d(self, var: int, times: int = 1) -> "Jet":
        """Partial derivative in variable ``var``; consumes one order per use."""
        out = self
        for _ in range(times):
            if out.order == 0:
                raise ValueError("jet order exhausted by differentiation")
            src, fac = basis(out.nvars, out.order).deriv[var]
            out = out._new(out.order - 1, out.c[src] * fac)
        return out

    # ------------------------------------------------------------ arithmetic
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return self, other

    def __add__(self, other):
        a, b = self._coerce(other)
        if isinstance(b, Jet):
            return a._new(a.order, a.c + b.c, b)
        c = a.c.copy()
        c[0] += b
        return a._new(a.order, c)

    __radd__ = __add__

    def __neg__(self):
        return self._new(self.order, -self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if isinstance(b, Jet):
            bs = basis(a.nvars, a.order)
            prod = np.bincount(bs.mul_k, weights=a.c[bs.mul_i] * b.c[bs.mul_j], minlength=bs.size)
            return a._new(a.order, prod, b)
        return a._new(a.order, a.c * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self._new(self.order, self.c / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            p = int(p)
            if p < 0:
                return (self ** (-p)).reciprocal()
            out = self._new(self.order, np.zeros_like(self.c))
            out.c[0] = 1.0
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        return self.apply_power(float(p))

    def _series(self, coeffs: list) -> "Jet":
        # sum_k coeffs[k] * (self - value)^k, Horner form
        t = self._new(self.order, self.c.copy())
        t.c[0] = 0.0
        out = self._new(self.order, np.zeros_like(self.c))
        out.c[0] = coeffs[-1]
        for ck in reversed(coeffs[:-1]):
            out = out * t
            out.c[0] += ck
        return out

    def reciprocal(self) -> "Jet":
        if self.c[0] == 0:
            raise ZeroDivisionError("reciprocal of a jet with zero value")
        return self._series(_taylor_coeffs("recip", self.value, self.order))

    def apply_power(self, p: float) -> "Jet":
        return self._series(_taylor_coeffs("pow", self.value, self.order, p))

    def apply(self, op: str) -> "Jet":
        return self._series(_taylor_coeffs(op, self.value, self.order))

    def sqrt(self) -> "Jet":
        return self.apply("sqrt")

    def exp(self) -> "Jet":
        return self.apply("exp")

    def log(self) -> "Jet":
        return self.apply("log")

    def sin(self) -> "Jet":
        return self.apply("sin")

    def cos(self) -> "Jet":
        return self.apply("cos")

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value!r})"


def compose(outer: Jet, inner: Sequence[Jet]) -> Jet:
    """Substitute jets ``inner`` into the Taylor polynomial ``outer``.

    ``outer`` is expanded about the values of ``inner``; the result lives in
    the variables of the inner jets.
    """
    if len(inner) != outer.nvars:
        raise ValueError("need one inner jet per variable of the outer jet")
    nv = inner[0].nvars
    order = min(min(j.order for j in inner), outer.order)
    deltas = []
    for j in inner:
        t = j.truncate(order)
        t = Jet(nv, order, t.c.copy())
        t.c[0] = 0.0
        deltas.append(t)
    powers = []
    for t in deltas:
        pw = [Jet.constant(nv, order, 1.0)]
        for _ in range(order):
            pw.append(pw[-1] * t)
        powers.append(pw)
    ob = basis(outer.nvars, outer.order)
    acc = np.zeros(basis(nv, order).size)
    for idx, mono in enumerate(ob.monomials):
        if ob.degrees[idx] > order:
            break
        coef = outer.c[idx]
        if coef == 0.0:
            continue
        term = None
        for v, k in enumerate(mono):
            if k == 0:
                continue
            term = powers[v][k] if term is None else term * powers[v][k]
        acc += coef * (term.c if term is not None else powers[0][0].c)
    return Jet(nv, order, acc)


def multi_indices(nvars: int, order: int) -> list:
    return list(basis(nvars, order).monomials)


def sym_tensor_from_jet(jet: Jet, degree: int) -> np.ndarray:
    """All degree-``degree`` partial derivatives as a symmetric ndarray."""
    n = jet.nvars
    out = np.empty((n,) * degree)
    for idx in itertools.product(range(n), repeat=degree):
        mono = [0] * n
        for v in idx:
            mono[v] += 1
        out[idx] = jet.partial(mono)
    return out
