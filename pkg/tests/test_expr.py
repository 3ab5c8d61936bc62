import random
from fractions import Fraction

import mpmath
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from varinv.expr import (
    ConstructionError,
    Indep,
    Jet,
    ParseError,
    ZeroStatus,
    ZeroTestConfig,
    add,
    cos,
    evaluate,
    exp,
    is_zero,
    ln,
    mul,
    parse,
    pdiff,
    power,
    simplify,
    sin,
    substitute,
    to_text,
    w,
    x,
)
from varinv.expr.core import max_jet_order
from varinv.expr.zerotest import Pole, evaluate_interval, evaluate_mp

from _oracle import sym_of, to_sympy


def P(s, n=2, m=2):
    return parse(s, n=n, m=m)


# --------------------------------------------------------------------------
# canonical form


def test_constant_folding():
    assert simplify(w(1, 1) + w(1, 1)) == mul(2, w(1, 1))
    assert to_text(w(1, 1) + w(1, 1), 1) == "2*w1[1]"


def test_exp_product_cancels():
    assert exp(w(1)) * exp(-w(1)) == parse("1", n=1, m=1)


def test_rational_normalization_only_on_request():
    e = P("(w1[1]^2 - 1)/(w1[1] - 1)")
    assert simplify(e) != P("w1[1] + 1")
    assert simplify(e, normalize=True) == P("w1[1] + 1")


def test_normalization_value_oracle():
    e = P("(w1[1]^2 - 1)/(w1[1] - 1)")
    rng = random.Random(3)
    for _ in range(10):
        v = Fraction(rng.randint(2, 40), rng.randint(1, 7))
        pt = {Jet(1, (1,)): v}
        assert evaluate(e, pt) == evaluate(simplify(e, normalize=True), pt)


def test_sum_and_product_are_flat_and_sorted():
    a = add(w(2), add(x(1), w(1)))
    b = add(w(1), w(2), x(1))
    assert a == b
    assert mul(w(2), mul(x(1), w(1))) == mul(x(1), w(1), w(2))
    assert to_text(b, 2) == "x1 + w1 + w2"


def test_empty_and_unit_cases():
    assert add() == parse("0", n=1, m=1)
    assert mul() == parse("1", n=1, m=1)
    assert power(w(1), 1) == w(1)


def test_floats_and_bad_exponents_rejected():
    with pytest.raises(ConstructionError):
        add(w(1), 0.5)
    with pytest.raises(ConstructionError):
        power(w(1), w(2))
    with pytest.raises(ConstructionError):
        mul(w(1), power(0, -1))


def test_ln_exp_inverse_pair():
    assert ln(exp(w(1))) == w(1)
    assert exp(ln(w(1))) == w(1)


# --------------------------------------------------------------------------
# parser and printer


def test_parse_grammar():
    e = parse("3/4*x1 + w2[2,1] - exp(w1)^2 / t", n=2, m=2)
    assert Jet(2, (1, 2)) in e.free
    assert Indep(3) in e.free
    assert to_text(parse("w2[1,t]", n=1, m=2), 1) == "w2[1,t]"


@pytest.mark.parametrize("bad", ["w3", "x4", "w1[3]", "2 +", "foo(w1)", "w1[1,", "1/0", "w1^w1", "3.5"])
def test_parse_errors(bad):
    with pytest.raises((ParseError, ConstructionError)):
        parse(bad, n=2, m=2)


def test_parse_error_reports_token():
    with pytest.raises(ParseError) as info:
        parse("w1 + foo", n=1, m=1)
    assert "foo" in str(info.value)


# random expression strategy over a few jet atoms

ATOMS = [x(1), x(2), w(1), w(2), w(1, 1), w(2, 2), w(1, 1, 2)]


@st.composite
def exprs(draw, depth=3, transcendental=True):
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        if draw(st.booleans()):
            return draw(st.sampled_from(ATOMS))
        return parse(str(draw(st.fractions(-5, 5, max_denominator=4))), n=2, m=2)
    kind = draw(st.sampled_from(["add", "mul", "pow", "func"] if transcendental else ["add", "mul", "pow"]))
    if kind == "add":
        return add(*draw(st.lists(exprs(depth - 1, transcendental), min_size=2, max_size=3)))
    if kind == "mul":
        return mul(*draw(st.lists(exprs(depth - 1, transcendental), min_size=2, max_size=3)))
    if kind == "pow":
        return power(draw(st.sampled_from(ATOMS)), draw(st.integers(-2, 3)))
    f = draw(st.sampled_from([exp, sin, cos]))
    return f(draw(exprs(depth - 1, transcendental)))


@settings(max_examples=150, deadline=None)
@given(exprs())
def test_print_parse_round_trip(e):
    assert parse(to_text(e, 2), n=2, m=2) == e


@settings(max_examples=150, deadline=None)
@given(exprs())
def test_simplify_idempotent(e):
    s = simplify(e)
    assert simplify(s) == s
    assert simplify(s, normalize=True) == simplify(simplify(s, normalize=True), normalize=True)


def _point(rng):
    return {a.ref: Fraction(rng.randint(-9, 9) or 1, rng.randint(1, 5)) for a in ATOMS}


@settings(max_examples=100, deadline=None)
@given(exprs(transcendental=False), st.integers(0, 10 ** 6))
def test_evaluation_homomorphism_against_sympy(e, seed):
    rng = random.Random(seed)
    pt = _point(rng)
    try:
        ours = evaluate(e, pt)
    except Pole:
        return
    theirs = to_sympy(e).subs({sym_of(r): sp.Rational(v.numerator, v.denominator) for r, v in pt.items()})
    assert sp.Rational(ours.numerator, ours.denominator) == theirs


@settings(max_examples=100, deadline=None)
@given(exprs(transcendental=False))
def test_normalize_preserves_values(e):
    rng = random.Random(1)
    ne = simplify(e, normalize=True)
    for _ in range(3):
        pt = _point(rng)
        try:
            a = evaluate(e, pt)
        except Pole:
            continue
        try:
            b = evaluate(ne, pt)
        except Pole:
            continue
        assert a == b


# --------------------------------------------------------------------------
# partial derivatives


def test_pdiff_examples():
    assert pdiff(P("w1[1]^2", 1, 1), Jet(1, (1,))) == P("2*w1[1]", 1, 1)
    assert pdiff(P("exp(w1)/w1[1]", 1, 1), Jet(1, (1,))) == P("-exp(w1)/w1[1]^2", 1, 1)
    assert pdiff(P("x1*w1"), Jet(2)).is_zero_literal()


@settings(max_examples=100, deadline=None)
@given(exprs(), exprs(), st.fractions(-3, 3, max_denominator=3), st.fractions(-3, 3, max_denominator=3),
       st.sampled_from([a.ref for a in ATOMS]))
def test_pdiff_linear(e1, e2, a, b, v):
    lhs = pdiff(add(mul(a, e1), mul(b, e2)), v)
    rhs = add(mul(a, pdiff(e1, v)), mul(b, pdiff(e2, v)))
    assert is_zero(add(lhs, mul(-1, rhs))).status is not ZeroStatus.NONZERO
    assert simplify(lhs) == simplify(rhs) or is_zero(lhs - rhs).status is ZeroStatus.ZERO


@settings(max_examples=100, deadline=None)
@given(exprs(), st.sampled_from([a.ref for a in ATOMS]), st.sampled_from([a.ref for a in ATOMS]))
def test_partials_commute(e, u, v):
    assert pdiff(pdiff(e, u), v) == pdiff(pdiff(e, v), u)


@settings(max_examples=60, deadline=None)
@given(exprs(transcendental=False), st.sampled_from([a.ref for a in ATOMS]))
def test_pdiff_matches_sympy(e, v):
    ours = to_sympy(pdiff(e, v))
    theirs = sp.diff(to_sympy(e), sym_of(v))
    assert sp.simplify(ours - theirs) == 0


def test_chain_rule_finite_difference_oracle():
    """Derivative of a substituted polynomial versus a central difference."""
    rng = random.Random(11)
    refs = [a.ref for a in ATOMS[:5]]
    for _ in range(100):
        e = add(*[mul(Fraction(rng.randint(-3, 3)), *[x_ for x_ in rng.choices(ATOMS[:5], k=rng.randint(0, 3))])
                  for _ in range(4)])
        inner = add(mul(Fraction(rng.randint(1, 3)), x(1), x(2)), w(2))
        s = substitute(e, {Jet(1): inner})
        d = pdiff(s, Indep(1))
        pt = {r: Fraction(rng.randint(-20, 20), 7) for r in refs}
        h = 1e-5
        fpt = {r: float(v) for r, v in pt.items()}

        def val(shift):
            q = dict(fpt)
            q[Indep(1)] += shift
            return float(evaluate_mp(s, q, 30))

        fd = (val(h) - val(-h)) / (2 * h)
        exact = float(evaluate(d, pt))
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


# --------------------------------------------------------------------------
# substitution


def test_substitute_examples():
    t = parse("t", n=1, m=1)
    assert substitute(P("w1 + x1", 1, 1), {Jet(1): mul(t, w(1))}) == P("t*w1 + x1", 1, 1)
    assert substitute(P("w1[1]^2", 1, 1), {Jet(1, (1,)): parse("0", n=1, m=1)}).is_zero_literal()
    e = substitute(exp(w(1)), {Jet(1): P("t*w1 + (1 - t)*x1", 1, 1)})
    assert e == P("exp(t*w1 + (1 - t)*x1)", 1, 1)


def test_substitution_is_simultaneous():
    e = add(w(1), mul(2, w(2)))
    out = substitute(e, {Jet(1): w(2), Jet(2): w(1)})
    assert out == add(w(2), mul(2, w(1)))


# --------------------------------------------------------------------------
# zero testing


def test_zero_test_examples():
    assert is_zero(w(1) - w(1)).status is ZeroStatus.ZERO
    res = is_zero(w(1, 1))
    assert res.status is ZeroStatus.NONZERO
    assert evaluate(w(1, 1), res.witness) != 0
    assert is_zero(add(power(sin(w(1)), 2), power(cos(w(1)), 2), -1)).status is ZeroStatus.LIKELY_ZERO


def test_transcendental_nonzero_uses_interval_enclosure():
    res = is_zero(add(exp(w(1)), mul(-1, w(1))))
    assert res.status is ZeroStatus.NONZERO
    lo, hi = res.enclosure
    assert lo > 0 or hi < 0


def test_interval_encloses_high_precision_value():
    e = P("exp(w1)*sin(x1) + ln(1 + w2^2)")
    pt = {Indep(1): Fraction(1, 3), Jet(1): Fraction(-2, 5), Jet(2): Fraction(7, 2), Indep(2): Fraction(0)}
    enc = evaluate_interval(e, pt, 256)
    val = evaluate_mp(e, pt, 60)
    with mpmath.workprec(300):
        lo, hi = mpmath.mpf(enc.a.a), mpmath.mpf(enc.b.b)
        assert hi - lo < mpmath.mpf(10) ** -60
        assert abs(val - lo) < mpmath.mpf(10) ** -55


def test_zero_test_deterministic_under_seed():
    e = P("w1*w2 - x1 + 3")
    cfg = ZeroTestConfig(seed=5)
    assert is_zero(e, cfg) == is_zero(e, cfg)


def test_pole_exhaustion():
    from varinv.expr import PoleExhaustion

    # every sample point is a pole of ln(-w1^2)
    e = ln(mul(-1, power(w(1), 2)))
    with pytest.raises(PoleExhaustion):
        is_zero(add(e, w(1)), ZeroTestConfig(samples=2))


def test_normalization_turns_rational_identity_into_zero():
    e = P("1/(w1 - 1) - 1/(w1 + 1) - 2/(w1^2 - 1)")
    assert is_zero(e).status is ZeroStatus.ZERO


def test_max_jet_order():
    assert max_jet_order(P("x1 + 2")) == -1
    assert max_jet_order(P("w1 + w2[1,2]*w1[1]")) == 2
