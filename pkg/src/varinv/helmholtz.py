"""Variationality tests: the general extended-jet check and first-order condition sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product
from typing import Sequence

from .errors import MalformedResidual, WrongShape
from .expr.calculus import pdiff, substitute
from .expr.core import ZERO, Expr, Indep, Jet, Var, add, as_expr, mul
from .expr.zerotest import ZeroResult, ZeroStatus, ZeroTestConfig, is_zero, weakest
from .jet import JetContext, extend
from .variational import InverseProblemData, euler_lagrange


class Verdict(Enum):
    VARIATIONAL = "Variational"
    LIKELY_VARIATIONAL = "LikelyVariational"
    NOT_VARIATIONAL = "NotVariational"

    def __str__(self):
        return self.value


def verdict_of(status: ZeroStatus) -> Verdict:
    if status is ZeroStatus.ZERO:
        return Verdict.VARIATIONAL
    if status is ZeroStatus.LIKELY_ZERO:
        return Verdict.LIKELY_VARIATIONAL
    return Verdict.NOT_VARIATIONAL


@dataclass(frozen=True)
class Condition:
    id: str
    expr: Expr
    result: ZeroResult

    @property
    def status(self) -> ZeroStatus:
        return self.result.status


@dataclass
class ConditionSetReport:
    conditions: list = field(default_factory=list)

    def add(self, cid: str, expr: Expr, cfg: ZeroTestConfig | None):
        self.conditions.append(Condition(cid, expr, is_zero(expr, cfg)))

    @property
    def status(self) -> ZeroStatus:
        return weakest(c.status for c in self.conditions)

    def failing(self) -> list:
        return [c for c in self.conditions if c.status is ZeroStatus.NONZERO]

    @property
    def ok(self) -> bool:
        return not self.failing()

    def by_id(self) -> dict:
        return {c.id: c for c in self.conditions}

    def __iter__(self):
        return iter(self.conditions)

    def __len__(self):
        return len(self.conditions)


@dataclass
class HelmholtzReport:
    verdict: Verdict
    # (j, j', I) -> coefficient of w^{j'}_{It} in the extended e^j[F]
    residuals: dict
    statuses: dict
    witness: tuple | None = None

    def residual_id(self, key) -> str:
        return residual_id(key)


def residual_id(key) -> str:
    j, jp, index = key
    return f"(1.9)[{j},{jp};{','.join(map(str, index))}]"


def helmholtz_check(e: Sequence, ctx: JetContext, cfg: ZeroTestConfig | None = None) -> HelmholtzReport:
    """Decide whether ``e`` is an Euler–Lagrange system.

    ``F = sum e^j w^j_t`` must be a null Lagrangian in the extended jet space;
    the coefficients of the variations in ``e^j[F]`` are the residuals.
    """
    if len(e) != ctx.m:
        raise WrongShape(f"expected {ctx.m} expressions, got {len(e)}")
    e = [ctx.check_expr(as_expr(v)) for v in e]
    for ej in e:
        if any(ctx.is_variation(r) for r in ej.free):
            raise WrongShape("expressions must be free of variations")
    ext = extend(ctx)
    t = ext.n + 1
    F = add(*[mul(ej, Var(Jet(j, (t,)))) for j, ej in enumerate(e, start=1)])
    el = euler_lagrange(F, ext)
    residuals = {}
    for j, ej in enumerate(el, start=1):
        variations = sorted((r for r in ej.free if ext.is_variation(r)), key=lambda r: r.key)
        rest = [ej]
        for ref in variations:
            coef = pdiff(ej, ref)
            if any(ext.is_variation(r) for r in coef.free):
                raise MalformedResidual(f"component {j} is not linear in {Var(ref)}")
            index = tuple(k for k in ref.index if k != t)
            if ref.index.count(t) != 1:
                raise MalformedResidual(f"unexpected variation {Var(ref)}")
            residuals[(j, ref.j, index)] = coef
            rest.append(mul(-1, coef, Var(ref)))
        if not add(*rest).is_zero_literal():
            raise MalformedResidual(f"component {j} has a variation-free remainder")
    statuses = {}
    witness = None
    for key in sorted(residuals, key=lambda k: (k[0], k[1], len(k[2]), k[2])):
        res = is_zero(residuals[key], cfg)
        statuses[key] = res
        if res.status is ZeroStatus.NONZERO and witness is None:
            witness = (residual_id(key), res.witness)
    status = weakest(r.status for r in statuses.values())
    return HelmholtzReport(verdict_of(status), residuals, statuses, witness)


# --------------------------------------------------------------------------
# shared helpers for the first-order data


def p(j: int, i: int) -> Expr:
    """First-order jet ``w^j_i``."""
    return Var(Jet(j, (i,)))


def w0(j: int) -> Expr:
    return Var(Jet(j))


def dp(e: Expr, j: int, i: int) -> Expr:
    return pdiff(e, Jet(j, (i,)))


def dw(e: Expr, j: int) -> Expr:
    return pdiff(e, Jet(j))


def dx(e: Expr, i: int) -> Expr:
    return pdiff(e, Indep(i))


def hat_total(e: Expr, i: int, m: int) -> Expr:
    """``d/dx_i`` restricted to ``x`` and order-zero jets: ``e_{x_i} + sum e_{w^j} w^j_i``."""
    return add(dx(e, i), *[mul(dw(e, j), p(j, i)) for j in range(1, m + 1)])


def level_bindings(c1: dict) -> dict:
    """Substitution ``w^j_i := c^j_i``; ``c1`` maps ``(j, i)`` to expressions."""
    return {Jet(j, (i,)): as_expr(v) for (j, i), v in c1.items()}


def level(e: Expr, c1: dict) -> Expr:
    return substitute(e, level_bindings(c1))


def default_c1(n: int, m: int, c1=None) -> dict:
    out = {(j, i): ZERO for j in range(1, m + 1) for i in range(1, n + 1)}
    if c1:
        for k, v in c1.items():
            out[k] = as_expr(v)
    return out


def mixed_entry(data: InverseProblemData, jp: int, j: int, ip: int, G: dict | None = None) -> Expr:
    """``F^{j'j}_{i'} = (F^j)_{w^{j'}_{i'}} + sum_i d^_i (F + G)^{jj'}_{ii'}``."""
    parts = [dp(data.F1[j - 1], jp, ip)]
    for i in range(1, data.n + 1):
        h = data.F(j, jp, i, ip)
        if G is not None:
            h = add(h, G.get((j, jp, i, ip), ZERO))
        parts.append(hat_total(h, i, data.m))
    return add(*parts)


def _check_shape(data: InverseProblemData, n=None, m=None):
    if n is not None and data.n != n:
        raise WrongShape(f"this condition set needs n = {n}, data has n = {data.n}")
    if m is not None and data.m != m:
        raise WrongShape(f"this condition set needs m = {m}, data has m = {data.m}")
    if not data.is_first_order():
        raise WrongShape("data entries must be of order <= 1")


# --------------------------------------------------------------------------
# m = 1


def conditions_m1(data: InverseProblemData, cfg: ZeroTestConfig | None = None) -> ConditionSetReport:
    _check_shape(data, m=1)
    n = data.n
    rep = ConditionSetReport()
    F = lambda i, ip: data.F(1, 1, i, ip)  # noqa: E731
    for i, ip, ipp in product(range(1, n + 1), repeat=3):
        if ip >= ipp:
            continue
        rep.add(f"(3.2)[{i},{ip},{ipp}]", add(dp(F(i, ip), 1, ipp), mul(-1, dp(F(i, ipp), 1, ip))), cfg)
    for ip in range(1, n + 1):
        parts = [dp(data.F1[0], 1, ip)]
        for i in range(1, n + 1):
            parts.append(hat_total(F(i, ip), i, 1))
        rep.add(f"(3.3)[{ip}]", add(*parts), cfg)
    return rep


# --------------------------------------------------------------------------
# n = 1


def conditions_n1(data: InverseProblemData, c=None, cfg: ZeroTestConfig | None = None) -> ConditionSetReport:
    """Conditions for ``n = 1``; ``c`` lists the level-set functions ``c^j_1(x)``."""
    _check_shape(data, n=1)
    m = data.m
    cl = list(c) if c is not None else [ZERO] * m
    c1 = {(j, 1): as_expr(cl[j - 1]) for j in range(1, m + 1)}
    for v in c1.values():
        if any(isinstance(r, Jet) for r in v.free):
            raise WrongShape("level-set functions must depend on x only")
    rep = ConditionSetReport()
    F2 = lambda j, jp: data.F(j, jp, 1, 1)  # noqa: E731
    for j, jp, jpp in product(range(1, m + 1), repeat=3):
        if jp >= jpp:
            continue
        rep.add(f"(4.2)[{j},{jp},{jpp}]", add(dp(F2(j, jp), jpp, 1), mul(-1, dp(F2(j, jpp), jp, 1))), cfg)
    mixed = {(jp, j): mixed_entry(data, jp, j, 1) for jp in range(1, m + 1) for j in range(1, m + 1)}
    for j, jp in product(range(1, m + 1), repeat=2):
        if j > jp:
            continue
        rep.add(f"(4.3a)[{j},{jp}]", add(mixed[(jp, j)], mixed[(j, jp)]), cfg)
    for j, jp, jpp in product(range(1, m + 1), repeat=3):
        if j == jp:
            continue
        rhs = add(dw(F2(jp, jpp), j), mul(-1, dw(F2(j, jpp), jp)))
        rep.add(f"(4.3b)[{j},{jp},{jpp}]", add(dp(mixed[(jp, j)], jpp, 1), mul(-1, rhs)), cfg)
    # 2-form coefficients at the level set: Omega_{jj'} = 2 F^{j'j}_1 (j < j')
    lv = {k: level(v, c1) for k, v in mixed.items()}
    omega = lambda a, b: mul(2, lv[(b, a)])  # noqa: E731
    triples = list(combinations(range(1, m + 1), 3))
    if not triples:
        rep.add("(4.4)", ZERO, cfg)
    for a, b, d in triples:
        expr = add(dw(omega(a, b), d), mul(-1, dw(omega(a, d), b)), dw(omega(b, d), a))
        rep.add(f"(4.4)[{a},{b},{d}]", expr, cfg)
    # transport derivative taken before restricting to the level set
    for a, b in combinations(range(1, m + 1), 2):
        flux = add(dw(data.F1[b - 1], a), mul(-1, dw(data.F1[a - 1], b)))
        om = mul(2, mixed[(b, a)])
        transport = add(dx(om, 1), *[mul(c1[(k, 1)], dw(om, k)) for k in range(1, m + 1)])
        rep.add(f"(4.5)[{a},{b}]", level(add(mul(2, flux), transport), c1), cfg)
    if m == 1:
        rep.add("(4.5)", ZERO, cfg)
    return rep


# --------------------------------------------------------------------------
# m = 2


def grad_G12(data: InverseProblemData, i: int, ip: int) -> dict:
    """Gradient of ``G^{12}_{ii'}`` in the first-order variables, ``{(a, k): expr}``."""
    n = data.n
    F = data.F
    out = {}
    for k in range(1, n + 1):
        out[(1, k)] = add(dp(F(1, 1, i, k), 2, ip), mul(-1, dp(F(1, 2, i, ip), 1, k)))
        out[(2, k)] = add(dp(F(2, 2, ip, k), 1, i), mul(-1, dp(F(1, 2, i, ip), 2, k)))
    return out


def conditions_m2(data: InverseProblemData, c=None, cfg: ZeroTestConfig | None = None,
                  level_set: bool = True) -> ConditionSetReport:
    """Conditions for ``m = 2`` expressed through the given data only.

    The identity families (ids ``(5.3)`` through ``(5.10)``) do not involve
    the level set.  When they all hold and ``level_set`` is set, the
    closedness of the 1-form that the order-zero potential must integrate is
    added under id ``(2.18)``, evaluated on
    the level set of ``c`` (x-only reference functions).  The skew
    correction ``C`` cannot change this form, so without it the list would
    accept data that the general check rejects.
    """
    _check_shape(data, m=2)
    n = data.n
    F = data.F
    rep = ConditionSetReport()
    rng = range(1, n + 1)
    # first requirement, skew-free parts
    for j in (1, 2):
        for i, ip, ipp in product(rng, repeat=3):
            if ip >= ipp:
                continue
            expr = add(dp(F(j, j, i, ip), j, ipp), mul(-1, dp(F(j, j, i, ipp), j, ip)))
            rep.add(f"(5.3)[{j}{j},{i},{ip},{ipp}]", expr, cfg)
    for i, ip in product(rng, repeat=2):
        rep.add(f"(5.3)[12,{i},{ip}]", add(dp(F(1, 2, i, i), 1, ip), mul(-1, dp(F(1, 1, i, ip), 2, i))), cfg)
        rep.add(f"(5.3)[21,{i},{ip}]", add(dp(F(2, 1, i, i), 2, ip), mul(-1, dp(F(2, 2, i, ip), 1, i))), cfg)
    # first identity of the second requirement
    for j, jp in ((1, 1), (1, 2), (2, 2)):
        for ip in rng:
            parts = [dp(data.F1[j - 1], jp, ip), dp(data.F1[jp - 1], j, ip)]
            for i in rng:
                parts.append(mul(2, hat_total(F(j, jp, i, ip), i, 2)))
            rep.add(f"(5.5)[{j},{jp},{ip}]", add(*parts), cfg)
    # skew-symmetry of the auxiliary functions
    for i, ip, k in product(rng, repeat=3):
        if i > ip:
            continue
        e1 = add(dp(F(1, 1, i, k), 2, ip), dp(F(1, 1, ip, k), 2, i), mul(-2, dp(F(1, 2, i, ip), 1, k)))
        e2 = add(dp(F(2, 2, i, k), 1, ip), dp(F(2, 2, ip, k), 1, i), mul(-2, dp(F(1, 2, i, ip), 2, k)))
        rep.add(f"(5.8)[1,{i},{ip},{k}]", e1, cfg)
        rep.add(f"(5.8)[2,{i},{ip},{k}]", e2, cfg)
    # compatibility of the gradient system for G^{12}
    coords = [(a, k) for a in (1, 2) for k in rng]
    for i, ip in combinations(rng, 2):
        g = grad_G12(data, i, ip)
        for (a, l), (b, k) in combinations(coords, 2):
            expr = add(dp(g[(a, l)], b, k), mul(-1, dp(g[(b, k)], a, l)))
            rep.add(f"(5.10)[{i},{ip},{a},{l},{b},{k}]", expr, cfg)
    # second identity of the second requirement, G eliminated
    for jpp in (1, 2):
        for i, ip in product(rng, repeat=2):
            rep.add(f"(5.6)[{jpp},{i},{ip}]", rewritten_56(data, jpp, i, ip), cfg)
    if level_set and rep.ok:
        rep.add("(2.18)", level_set_closedness(data, c, cfg), cfg)
    return rep


def level_set_closedness(data: InverseProblemData, c=None, cfg: ZeroTestConfig | None = None) -> Expr:
    """``d_0`` of the order-zero 1-form on the level set, with ``G = Gbar``."""
    from .inverse import ReferenceFunctions, _closedness, _g_table, _stage, build_Gbar

    ref = c if isinstance(c, ReferenceFunctions) else ReferenceFunctions.make(data.n, data.m, c)
    Gbar = build_Gbar(data, ref, cfg)
    G = _g_table(data.n, lambda i, ip: Gbar.get((i, ip), ZERO))
    return _closedness(_stage(data, G, ref, cfg).a)


def rewritten_56(data: InverseProblemData, jpp: int, i: int, ip: int) -> Expr:
    """The second identity for ``j' = 1, j = 2`` with every ``G`` term eliminated."""
    n = data.n
    F = data.F
    phi = add(
        dp(data.F1[1], 1, ip),
        *[hat_total(F(2, 1, k, ip), k, 2) for k in range(1, n + 1)],
    )
    parts = [dp(phi, jpp, i)]
    for k in range(1, n + 1):
        if k == ip:
            continue
        # gamma = d G^{21}_{k i'} / d w^{j''}_i = -(d G^{12}_{k i'} / d w^{j''}_i)
        gamma = mul(-1, grad_G12(data, k, ip)[(jpp, i)])
        parts.append(hat_total(gamma, k, 2))
    if jpp == 1:
        rhs = add(dw(F(1, 1, ip, i), 2), mul(-1, dw(F(2, 1, ip, i), 1)))
    else:
        rhs = add(dw(F(1, 2, ip, i), 2), mul(-1, dw(F(2, 2, ip, i), 1)))
    return add(*parts, mul(-1, rhs))


__all__ = [
    "Verdict", "Condition", "ConditionSetReport", "HelmholtzReport", "helmholtz_check",
    "conditions_m1", "conditions_n1", "conditions_m2", "level_set_closedness", "grad_G12", "rewritten_56",
    "mixed_entry", "level", "default_c1", "hat_total", "residual_id",
]

