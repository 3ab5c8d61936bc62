import math
import random
from fractions import Fraction

import numpy as np
import pytest

from varinv.expr import Indep, Jet, ZeroStatus, add, evaluate, is_zero, mul, parse, power, simplify
from varinv.jet import JetContext
from varinv.tonti import (
    ClosedForm,
    HomotopyIntegrand,
    QuadratureForm,
    gauss_legendre_01,
    homotopy_substitute,
    integrate_t,
    tonti_lagrangian,
)
from varinv.variational import euler_lagrange

from _gen import rand_lagrangian

C11 = JetContext(1, 1)


def P(s, n=1, m=1):
    return parse(s, n=n, m=m)


def test_homotopy_substitute_examples():
    assert homotopy_substitute(P("w1"), None, C11).integrand == P("t*w1")
    assert homotopy_substitute(P("w1[1,1]"), [P("x1")], C11).integrand == P("t*w1[1,1]")
    h = homotopy_substitute(P("exp(w1)"), [P("x1")], C11)
    assert simplify(h.integrand, normalize=True) == simplify(P("exp(t*w1 + (1 - t)*x1)"), normalize=True)
    assert not h.t_polynomial


def test_reference_must_be_x_only():
    with pytest.raises(ValueError):
        homotopy_substitute(P("w1"), [P("w1")], C11)


def test_integrate_t_examples():
    t = Indep(2)
    r = integrate_t(HomotopyIntegrand(P("t^2*w1^2"), t, True))
    assert isinstance(r, ClosedForm) and r.expr == P("w1^2/3")
    assert integrate_t(HomotopyIntegrand(P("1"), t, True)).expr == P("1")
    q = integrate_t(HomotopyIntegrand(P("exp(t*w1)*w1"), t, False))
    assert isinstance(q, QuadratureForm) and q.order == 32
    val = q.evaluate({Jet(1): np.array([1.0])}, use_numba=False)[0]
    assert abs(val - (math.e - 1)) < 1e-12
    assert abs(float(q.evaluate_mp({Jet(1): 1}, 30)) - (math.e - 1)) < 1e-12


def test_tonti_examples():
    f = tonti_lagrangian([P("-w1[1,1]")], None, C11)
    assert f.expr == P("-w1*w1[1,1]/2")
    assert euler_lagrange(f.expr, C11) == [P("-w1[1,1]")]
    assert tonti_lagrangian([P("1")], None, C11).expr == P("w1")
    assert tonti_lagrangian([P("w1^2")], None, C11).expr == P("w1^3/3")


def test_tonti_transcendental_is_quadrature():
    e = P("2*exp(w1)*(1 - w1[1,1]/w1[1]^2)/w1[1]")
    assert isinstance(tonti_lagrangian([e], [P("x1")], C11), QuadratureForm)


@pytest.mark.parametrize("deg", range(0, 11))
def test_closed_form_agrees_with_64_point_rule(deg):
    rng = random.Random(deg)
    coeffs = [Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(deg + 1)]
    t = Indep(2)
    poly = add(*[mul(c, power(P("t"), k), P("w1") if k % 2 else P("1")) for k, c in enumerate(coeffs)])
    closed = integrate_t(HomotopyIntegrand(poly, t, True)).expr
    q = QuadratureForm(poly, t, 64)
    for wv in (0.5, 1.75, -2.0):
        a = q.evaluate({Jet(1): np.array([wv])}, use_numba=False)[0]
        b = float(evaluate(closed, {Jet(1): Fraction(wv)}))
        assert abs(a - b) < 1e-12


def test_gauss_legendre_weights_sum_to_one():
    nodes, weights = gauss_legendre_01(32)
    assert abs(weights.sum() - 1) < 1e-14
    assert np.all((nodes > 0) & (nodes < 1))


@pytest.mark.parametrize("seed", range(25))
def test_tonti_reproduces_euler_lagrange(seed):
    rng = random.Random(seed)
    n, m = rng.choice([(1, 1), (2, 1), (1, 2), (2, 2)])
    ctx = JetContext(n, m)
    f = rand_lagrangian(rng, n, m, degree=3)
    e = euler_lagrange(f, ctx)
    ft = tonti_lagrangian(e, None, ctx)
    assert isinstance(ft, ClosedForm)
    for a, b in zip(euler_lagrange(ft.expr, ctx), e):
        assert is_zero(add(a, mul(-1, b))).status is not ZeroStatus.NONZERO
