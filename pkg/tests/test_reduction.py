import random

import pytest

from varinv.errors import WrongShape
from varinv.expr import ZeroStatus, add, is_zero, mul, parse
from varinv.expr.core import max_jet_order
from varinv.jet import JetContext
from varinv.reduction import TopKind, classify_top_order, reduce_order
from varinv.variational import euler_lagrange

from _gen import rand_linear_top

C11 = JetContext(1, 1)


def P(s, m=1):
    return parse(s, n=1, m=m)


def test_classify_examples():
    assert classify_top_order(P("w1[1]^2"), C11).kind is TopKind.NONLINEAR
    top = classify_top_order(P("w1*w1[1,1]"), C11)
    assert top.kind is TopKind.LINEAR and top.coeffs == (P("w1"),) and top.coeff_order == 0
    assert classify_top_order(P("x1"), C11).kind is TopKind.CONSTANT
    with pytest.raises(WrongShape):
        classify_top_order(parse("w1", n=2, m=1), JetContext(2, 1))


def test_reduce_examples():
    tr = reduce_order(P("x1*w1[1,1]"), C11)
    assert len(tr.steps) == 2
    assert tr.steps[0][1] == P("-w1[1]")
    assert tr.final.is_zero_literal()
    tr = reduce_order(P("w1*w1[1,1]"), C11)
    assert tr.final == P("-w1[1]^2")
    assert euler_lagrange(tr.final, C11) == euler_lagrange(P("w1*w1[1,1]"), C11) == [P("2*w1[1,1]")]
    tr = reduce_order(P("w1[1]^2/2"), C11)
    assert tr.steps == [] and tr.final == P("w1[1]^2/2")


def test_stops_on_mixed_dependence():
    # coefficient of the top jet depends on w1[1] = w1_{R-1}
    f = P("w1[1]*w1[1,1]")
    tr = reduce_order(f, C11)
    assert tr.steps == [] and tr.stop.kind is TopKind.LINEAR and tr.stop.coeff_order == 1


@pytest.mark.parametrize("seed", range(20))
def test_random_linear_top_order(seed):
    rng = random.Random(seed)
    m = rng.choice([1, 2])
    f, R = rand_linear_top(rng, m)
    ctx = JetContext(1, m)
    tr = reduce_order(f, ctx)
    assert tr.steps, "a linear top order with low-order coefficients admits a step"
    orders = [max_jet_order(f)] + [max_jet_order(g) for _, g in tr.steps]
    assert all(b < a for a, b in zip(orders, orders[1:]))
    assert len(tr.steps) <= R
    assert tr.status is not ZeroStatus.NONZERO
    for a, b in zip(euler_lagrange(tr.final, ctx), euler_lagrange(f, ctx)):
        assert is_zero(add(a, mul(-1, b))).status is not ZeroStatus.NONZERO


@pytest.mark.parametrize("seed", range(10))
def test_half_order_bound(seed):
    """Even EL order 2K with a nonlinear or constant stop ends at order K."""
    rng = random.Random(seed)
    f, _ = rand_linear_top(rng, 1)
    tr = reduce_order(f, C11)
    el_order = max(max_jet_order(e) for e in euler_lagrange(f, C11))
    if el_order < 0:
        return
    K, odd = divmod(el_order, 2)
    if tr.stop.kind in (TopKind.NONLINEAR, TopKind.CONSTANT) and not odd:
        assert max_jet_order(tr.final) == K
    if odd:
        top = classify_top_order(tr.final, C11)
        assert top.kind is TopKind.LINEAR and top.order == K + 1
