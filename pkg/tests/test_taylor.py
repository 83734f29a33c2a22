import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylfinsler import expr as ex
from cylfinsler.taylor import Jet, basis, compose, sym_tensor_from_jet


def test_variable_and_partials():
    x, y = Jet.variables(3, [0.5, -1.0])
    f = x * x * y
    assert f.value == pytest.approx(-0.25)
    assert f.partial((1, 0)) == pytest.approx(-1.0)
    assert f.partial((2, 1)) == pytest.approx(2.0)
    assert f.partial((0, 2)) == 0.0


def test_graded_prefix_truncation():
    b = basis(3, 4)
    assert b.prefix[-1] == b.size == math.comb(7, 3)
    x, y, z = Jet.variables(4, [0.1, 0.2, 0.3])
    f = (x + y * z).exp()
    assert np.array_equal(f.truncate(2).c, f.c[: b.prefix[2]])


def test_d_consumes_order():
    x, = Jet.variables(2, [1.0])
    assert x.d(0).order == 1
    with pytest.raises(ValueError):
        x.d(0, 3)


def test_reciprocal_of_zero():
    with pytest.raises(ZeroDivisionError):
        Jet.constant(1, 2, 0.0).reciprocal()


FUNCS = {
    "sqrt": (lambda j: j.sqrt(), lambda e: ex.sqrt(e)),
    "exp": (lambda j: j.exp(), lambda e: ex.exp(e)),
    "log": (lambda j: j.log(), lambda e: ex.log(e)),
    "sin": (lambda j: j.sin(), lambda e: ex.sin(e)),
    "cos": (lambda j: j.cos(), lambda e: ex.cos(e)),
    "pow": (lambda j: j ** 1.5, lambda e: ex.power(e, ex.Fraction(3, 2))),
    "recip": (lambda j: 1.0 / j, lambda e: 1 / e),
}


@pytest.mark.parametrize("name", sorted(FUNCS))
def test_jet_matches_symbolic_partials(name):
    jf, ef = FUNCS[name]
    pt = {"x0": 0.3, "r": 0.7, "s": -0.2, "z": 0.4}
    vals = [pt[v] for v in ex.COORDINATES]
    X = Jet.variables(4, vals)
    x0, r, s, z = X
    inner_j = 2 + r * s + z * z * x0 + s
    e_in = ex.parse("2 + r*s + z^2*x0 + s")
    jet = jf(inner_j)
    sym = ef(e_in)
    for mono in basis(4, 4).monomials:
        want = ex.evaluate(ex.partial(sym, mono), pt)
        assert jet.partial(mono) == pytest.approx(want, rel=1e-11, abs=1e-12)


def test_compose_chain_rule():
    # outer f(a, b) = a^2 b at (a, b) = (1, 2); inner a = 1 + t, b = 2 + t^2
    a, b = Jet.variables(3, [1.0, 2.0])
    outer = a * a * b
    (t,) = Jet.variables(3, [0.0])
    out = compose(outer, [1 + t, 2 + t * t])
    # (1+t)^2 (2+t^2) = 2 + 4t + 3t^2 + 2t^3 + ...
    assert out.c.tolist() == pytest.approx([2.0, 4.0, 3.0, 2.0])


def test_sym_tensor():
    x, y = Jet.variables(3, [1.0, 2.0])
    T = sym_tensor_from_jet(x * x * y, 3)
    assert T[0, 0, 1] == T[0, 1, 0] == T[1, 0, 0] == pytest.approx(2.0)
    assert T[1, 1, 1] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.8, 0.8), min_size=3, max_size=3))
def test_product_rule_against_finite_difference(v):
    def f(a, b, c):
        return (1.5 + a * b).sqrt() * (c - a).exp() if isinstance(a, Jet) else \
            math.sqrt(1.5 + a * b) * math.exp(c - a)

    J = f(*Jet.variables(2, v))
    h = 1e-5
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (f(*(np.array(v) + e)) - f(*(np.array(v) - e))) / (2 * h)
        mono = [0, 0, 0]
        mono[k] = 1
        assert J.partial(mono) == pytest.approx(fd, rel=1e-7, abs=1e-8)
