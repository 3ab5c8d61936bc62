import random

import pytest

from varinv.errors import ConditionsFailed, MissingG, NotClosedFormIntegrable, WrongShape
from varinv.expr import Jet, ZeroStatus, add, is_zero, mul, parse, simplify, substitute
from varinv.expr.calculus import pdiff
from varinv.inverse import (
    ReferenceFunctions,
    SkewCorrection,
    build_fbar,
    build_G_m2,
    compute_mixed,
    solve,
    solve_linear,
    solve_m1,
    solve_m2,
    solve_n1,
)
from varinv.jet import JetContext
from varinv.variational import (
    InverseProblemData,
    decompose_second_order,
    el_split_first_order,
    euler_lagrange,
    is_null_lagrangian,
)

from _gen import rand_lagrangian


def P(s, n=1, m=1):
    return parse(s, n=n, m=m)


def data_of(f, n, m):
    ctx = JetContext(n, m)
    return decompose_second_order(euler_lagrange(f, ctx), ctx)


def assert_round_trip(sol, data, f0=None):
    n, m = data.n, data.m
    ctx = JetContext(n, m)
    dec = el_split_first_order(sol.f, ctx)
    for k, v in data.F2.items():
        assert is_zero(add(dec.E2[k], mul(-1, v))).status is ZeroStatus.ZERO
    for j in range(m):
        assert is_zero(add(dec.E[j], mul(-1, data.F1[j]))).status is not ZeroStatus.NONZERO
    if f0 is not None:
        assert is_null_lagrangian(add(sol.f, mul(-1, f0)), ctx).is_null


def assert_level_set_zero(sol, n, m):
    level = {Jet(j, (i,)): sol.c.c1[(j, i)] for j in range(1, m + 1) for i in range(1, n + 1)}
    assert simplify(substitute(sol.fbar, level), normalize=True).is_zero_literal()
    for j in range(1, m + 1):
        for i in range(1, n + 1):
            d = substitute(pdiff(sol.fbar, Jet(j, (i,))), level)
            assert simplify(d, normalize=True).is_zero_literal()


# --------------------------------------------------------------------------
# building blocks


def test_compute_mixed_examples():
    data = data_of(P("w1*w2[1]", 1, 2), 1, 2)
    mixed = compute_mixed(data, None)
    assert mixed[(2, 1, 1)] == P("1") and mixed[(1, 2, 1)] == P("-1")
    zero = compute_mixed(InverseProblemData(2, 1, [0], {}), None)
    assert all(v.is_zero_literal() for v in zero.values())
    m1 = compute_mixed(InverseProblemData.from_entries(1, 1, [P("w1")], {(1, 1, 1, 1): 1}), None)
    assert m1[(1, 1, 1)].is_zero_literal()


def test_missing_g():
    data = InverseProblemData.from_entries(2, 2, [0, 0], {(1, 2, 1, 2): P("w1", 2, 2)})
    with pytest.raises(MissingG):
        compute_mixed(data, None)


def test_build_fbar_examples():
    ref1 = ReferenceFunctions.make(1, 1)
    d1 = InverseProblemData.from_entries(1, 1, [0], {(1, 1, 1, 1): 1})
    assert build_fbar(d1, None, ref1, None) == P("w1[1]^2/2")
    ref2 = ReferenceFunctions.make(2, 1)
    d2 = InverseProblemData.from_entries(2, 1, [0], {(1, 1, 1, 1): 1, (1, 1, 2, 2): 1})
    assert build_fbar(d2, None, ref2, None) == P("(w1[1]^2 + w1[2]^2)/2", 2)
    assert build_fbar(InverseProblemData(2, 2, [0, 0], {}), None, ReferenceFunctions.make(2, 2), None).is_zero_literal()


def test_build_fbar_needs_polynomial_homotopy():
    d = InverseProblemData.from_entries(1, 1, [0], {(1, 1, 1, 1): P("exp(w1[1])")})
    with pytest.raises(NotClosedFormIntegrable):
        build_fbar(d, None, ReferenceFunctions.make(1, 1), None)


def test_reference_functions_validation():
    with pytest.raises(WrongShape):
        ReferenceFunctions.make(1, 1, {(1, 1): P("w1[1]")})
    with pytest.raises(WrongShape):
        ReferenceFunctions.make(1, 1, None, [P("w1")])
    ref = ReferenceFunctions.make(2, 2, [[P("x1", 2, 2), 0], [0, P("x2", 2, 2)]])
    assert ref.c1[(1, 1)] == P("x1", 2, 2) and not ref.depends_on_w()


def test_solve_linear():
    from fractions import Fraction as Fr

    assert solve_linear([[2, 1], [1, 3]], [3, 5]) == [Fr(4, 5), Fr(7, 5)]
    assert solve_linear([[1, 1], [2, 2]], [1, 3]) is None
    sol = solve_linear([[1, 1], [2, 2]], [1, 2])
    assert sol[0] + sol[1] == 1


# --------------------------------------------------------------------------
# m = 1


def test_solve_m1_examples():
    d = InverseProblemData.from_entries(1, 1, [P("w1")], {(1, 1, 1, 1): 1})
    sol = solve_m1(d)
    assert sol.f == P("w1[1]^2/2 + w1^2/2")
    assert euler_lagrange(sol.f, JetContext(1, 1)) == [P("w1 - w1[1,1]")]
    lap = InverseProblemData.from_entries(2, 1, [0], {(1, 1, 1, 1): 1, (1, 1, 2, 2): 1})
    assert solve_m1(lap).f == P("(w1[1]^2 + w1[2]^2)/2", 2)
    bad = InverseProblemData.from_entries(2, 1, [0], {(1, 1, 1, 1): P("w1[2]", 2)})
    with pytest.raises(ConditionsFailed) as info:
        solve_m1(bad)
    assert "(3.2)[1,1,2]" in info.value.failing_ids


@pytest.mark.parametrize("seed", range(12))
def test_m1_round_trip(seed):
    rng = random.Random(seed)
    n = rng.choice([1, 2, 3])
    f0 = rand_lagrangian(rng, n, 1, degree=3, terms=5)
    data = data_of(f0, n, 1)
    sol = solve_m1(data)
    assert_round_trip(sol, data, f0)
    assert_level_set_zero(sol, n, 1)


def test_m1_with_w_dependent_reference():
    rng = random.Random(5)
    f0 = rand_lagrangian(rng, 2, 1, degree=3, terms=5)
    data = data_of(f0, 2, 1)
    c = {(1, 1): P("w1 + x2", 2), (1, 2): P("x1", 2)}
    sol = solve_m1(data, c)
    assert_round_trip(sol, data, f0)
    assert_level_set_zero(sol, 2, 1)


# --------------------------------------------------------------------------
# n = 1


def test_solve_n1_examples():
    data = InverseProblemData(1, 2, [P("w2[1]", 1, 2), P("-w1[1]", 1, 2)], {})
    sol = solve_n1(data)
    assert euler_lagrange(sol.f, JetContext(1, 2)) == [P("w2[1]", 1, 2), P("-w1[1]", 1, 2)]
    f0 = P("w1[1]^2/2 + w1^4")
    sol = solve_n1(data_of(f0, 1, 1))
    assert euler_lagrange(sol.f, JetContext(1, 1)) == euler_lagrange(f0, JetContext(1, 1))
    assert solve_n1(InverseProblemData(1, 2, [0, 0], {})).f.is_zero_literal()


def test_solve_n1_rejects_w_reference_for_systems():
    data = InverseProblemData(1, 2, [0, 0], {})
    with pytest.raises(WrongShape):
        solve_n1(data, {(1, 1): P("w2", 1, 2)})


@pytest.mark.parametrize("seed", range(12))
def test_n1_round_trip(seed):
    rng = random.Random(seed)
    m = rng.choice([2, 3])
    f0 = rand_lagrangian(rng, 1, m, degree=3, terms=5)
    data = data_of(f0, 1, m)
    c = {(j, 1): P("x1", 1, m) for j in range(1, m + 1)} if seed % 3 == 0 else None
    sol = solve_n1(data, c)
    assert_round_trip(sol, data, f0)
    assert_level_set_zero(sol, 1, m)


def test_n1_conditions_failed():
    data = InverseProblemData(1, 2, [P("w2[1]", 1, 2), P("w1[1]", 1, 2)], {})
    with pytest.raises(ConditionsFailed):
        solve_n1(data)


# --------------------------------------------------------------------------
# m = 2


def test_solve_m2_examples():
    f0 = P("w1[1]*w2[2]", 2, 2)
    data = data_of(f0, 2, 2)
    sol = solve_m2(data)
    assert euler_lagrange(sol.f, JetContext(2, 2)) == [P("-w2[1,2]", 2, 2), P("-w1[1,2]", 2, 2)]
    assert_round_trip(sol, data, f0)
    f1 = P("(w1[1]^2 + w2[2]^2)/2 + w1*w2", 2, 2)
    assert_round_trip(solve_m2(data_of(f1, 2, 2)), data_of(f1, 2, 2), f1)
    assert solve_m2(InverseProblemData(2, 2, [0, 0], {})).f.is_zero_literal()


def test_build_G_m2_examples():
    G = build_G_m2(data_of(P("w1[1]*w2[2]", 2, 2), 2, 2))
    assert isinstance(G, SkewCorrection)
    assert all(simplify(v).is_zero_literal() for v in G.Gbar.values())
    assert not G.C
    G0 = build_G_m2(InverseProblemData(2, 2, [0, 0], {}))
    assert not G0.Gbar or all(v.is_zero_literal() for v in G0.Gbar.values())


def test_build_G_m2_rejects_incompatible_gradient_system():
    data = InverseProblemData.from_entries(2, 2, [0, 0], {(1, 1, 1, 1): P("w2[1]^2*w1[1]", 2, 2)})
    with pytest.raises(ConditionsFailed):
        build_G_m2(data)


def test_m2_level_set_failure_is_a_condition():
    data = InverseProblemData(2, 2, [P("(-6*x1 + 5*x2*w2)/2", 2, 2), P("0", 2, 2)], {})
    with pytest.raises(ConditionsFailed) as info:
        solve_m2(data)
    assert info.value.failing_ids == ["(2.18)"]


def skew_ok(G: SkewCorrection, n: int):
    tab = G.table(n)
    for i in range(1, n + 1):
        assert tab[(1, 2, i, i)].is_zero_literal()
        for ip in range(1, n + 1):
            assert tab[(1, 2, i, ip)] == mul(-1, tab[(1, 2, ip, i)]) or simplify(
                add(tab[(1, 2, i, ip)], tab[(1, 2, ip, i)])).is_zero_literal()
            assert simplify(add(tab[(2, 1, i, ip)], tab[(1, 2, i, ip)])).is_zero_literal()


@pytest.mark.parametrize("seed", range(10))
def test_m2_round_trip(seed):
    rng = random.Random(seed)
    f0 = rand_lagrangian(rng, 2, 2, degree=3, terms=5)
    data = data_of(f0, 2, 2)
    c = [[P("x1", 2, 2), 0], [0, P("x2^2", 2, 2)]] if seed % 2 else None
    sol = solve_m2(data, c)
    assert_round_trip(sol, data, f0)
    assert_level_set_zero(sol, 2, 2)
    skew_ok(sol.G, 2)


@pytest.mark.parametrize("seed", range(6))
def test_changing_reference_changes_f_by_null_lagrangian(seed):
    rng = random.Random(seed)
    n, m = rng.choice([(2, 1), (1, 2), (2, 2)])
    f0 = rand_lagrangian(rng, n, m)
    data = data_of(f0, n, m)
    a = solve(data)
    c = {(j, i): P(f"x{i}", n, m) for j in range(1, m + 1) for i in range(1, n + 1)}
    b = solve(data, c)
    ctx = JetContext(n, m)
    for x_, y_ in zip(euler_lagrange(a.f, ctx), euler_lagrange(b.f, ctx)):
        assert is_zero(add(x_, mul(-1, y_))).status is not ZeroStatus.NONZERO


def test_solve_dispatch():
    with pytest.raises(WrongShape):
        solve(InverseProblemData(2, 3, [0, 0, 0], {}))
    assert solve(InverseProblemData(1, 1, [0], {}), method="n1").f.is_zero_literal()
