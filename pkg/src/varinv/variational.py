"""Euler–Lagrange operator, variational split, first-order decompositions, null Lagrangians."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

from .errors import (
    ConstructionError,
    NonlinearSecondOrder,
    NotClosedFormIntegrable,
    NotFirstOrder,
    NotNullLagrangian,
    PotentialVerificationFailed,
)
from .expr.calculus import pdiff, substitute
from .expr.core import ONE, ZERO, Expr, Indep, Jet, Var, add, as_expr, max_jet_order, mul
from .expr.zerotest import ZeroStatus, ZeroTestConfig, is_zero, weakest
from .jet import JetContext, extend, insert_index, total_derivative, total_derivative_multi


def _jets_of(f: Expr, j: int | None = None):
    refs = [r for r in f.free if isinstance(r, Jet) and (j is None or r.j == j)]
    return sorted(refs, key=lambda r: r.key)


def euler_lagrange(f: Expr, ctx: JetContext) -> list:
    """``e^j[f] = sum_I (-1)^|I| d/dx_I (df/dw^j_I)`` for ``j = 1..m``."""
    f = ctx.check_expr(as_expr(f))
    out = []
    for j in range(1, ctx.m + 1):
        parts = []
        for ref in _jets_of(f, j):
            g = pdiff(f, ref)
            g = total_derivative_multi(g, ref.index, ctx)
            parts.append(g if ref.order % 2 == 0 else mul(-1, g))
        out.append(add(*parts))
    return out


@dataclass(frozen=True)
class VariationSplit:
    el_coeffs: list
    divergence_terms: list
    ctx: JetContext = field(repr=False)

    def reconstruction_residual(self, f: Expr) -> Expr:
        """``d/dt f - sum e^j w^j_t - sum d/dx_i F_i`` in the extended context."""
        ext = self.ctx if self.ctx.extended else extend(self.ctx)
        t = ext.n + 1
        lhs = total_derivative(f, t, ext)
        rhs = [mul(e, Var(Jet(j + 1, (t,)))) for j, e in enumerate(self.el_coeffs)]
        rhs += [total_derivative(F, i + 1, ext) for i, F in enumerate(self.divergence_terms)]
        return add(lhs, mul(-1, add(*rhs)))


def variation_split(f: Expr, ctx: JetContext) -> VariationSplit:
    """Split ``d/dt f`` into ``sum e^j w^j_t`` plus a total divergence ``sum d/dx_i F_i``.

    Repeated integration by parts ``g w_{Kit} = -(d/dx_i g) w_{Kt} + d/dx_i (g w_{Kt})``,
    highest multi-indices first.
    """
    f = ctx.check_expr(as_expr(f))
    ext = extend(ctx)
    t = ext.n + 1
    coeff: dict = {}
    for ref in _jets_of(f):
        coeff[(ref.j, ref.index)] = pdiff(f, ref)
    F = [[] for _ in range(ctx.n)]
    while True:
        pending = [k for k in coeff if k[1]]
        if not pending:
            break
        key = max(pending, key=lambda k: (len(k[1]), k))
        g = coeff.pop(key)
        j, index = key
        if g.is_zero_literal():
            continue
        i = index[-1]
        rest = index[:-1]
        F[i - 1].append(mul(g, Var(Jet(j, insert_index(rest, t)))))
        low = (j, rest)
        coeff[low] = add(coeff.get(low, ZERO), mul(-1, total_derivative(g, i, ext)))
    el = [coeff.get((j, ()), ZERO) for j in range(1, ctx.m + 1)]
    return VariationSplit(el, [add(*parts) for parts in F], ctx)


# --------------------------------------------------------------------------
# first-order structure


def _pairs(n):
    return list(product(range(1, n + 1), repeat=2))


@dataclass(frozen=True)
class FirstOrderELDecomposition:
    """``e^j = E^j - sum_{j', ordered (i, i')} E2[(j, j', i, i')] * w^{j'}_{ii'}``."""

    n: int
    m: int
    E: list
    E2: dict

    def recompose(self) -> list:
        return recompose(self.n, self.m, self.E, self.E2)


def recompose(n: int, m: int, E1: Sequence, E2: dict) -> list:
    out = []
    for j in range(1, m + 1):
        parts = [E1[j - 1]]
        for jp in range(1, m + 1):
            for i, ip in _pairs(n):
                coef = E2.get((j, jp, i, ip), ZERO)
                if not coef.is_zero_literal():
                    parts.append(mul(-1, coef, Var(Jet(jp, tuple(sorted((i, ip)))))))
        out.append(add(*parts))
    return out


def first_order_total(g: Expr, i: int, n: int, m: int) -> Expr:
    """The part of ``d/dx_i g`` free of second-order jets, for first-order ``g``."""
    parts = [pdiff(g, Indep(i))]
    for jp in range(1, m + 1):
        d = pdiff(g, Jet(jp))
        if not d.is_zero_literal():
            parts.append(mul(d, Var(Jet(jp, (i,)))))
    return add(*parts)


def el_split_first_order(f: Expr, ctx: JetContext) -> FirstOrderELDecomposition:
    f = ctx.check_expr(as_expr(f))
    if max_jet_order(f) > 1:
        raise NotFirstOrder(f"Lagrangian has order {max_jet_order(f)}")
    n, m = ctx.n, ctx.m
    grad = {(j, i): pdiff(f, Jet(j, (i,))) for j in range(1, m + 1) for i in range(1, n + 1)}
    E1 = []
    for j in range(1, m + 1):
        parts = [pdiff(f, Jet(j))]
        for i in range(1, n + 1):
            parts.append(mul(-1, first_order_total(grad[(j, i)], i, n, m)))
        E1.append(add(*parts))
    hess = {}
    for (j, i), g in grad.items():
        for jp in range(1, m + 1):
            for ip in range(1, n + 1):
                hess[(j, i, jp, ip)] = pdiff(g, Jet(jp, (ip,)))
    E2 = {}
    half = Fraction(1, 2)
    for j, jp in product(range(1, m + 1), repeat=2):
        for i, ip in _pairs(n):
            E2[(j, jp, i, ip)] = mul(half, add(hess[(j, i, jp, ip)], hess[(j, ip, jp, i)]))
    return FirstOrderELDecomposition(n, m, E1, E2)


@dataclass
class InverseProblemData:
    """Given data ``F^j`` and ``F^{jj'}_{ii'}`` (full table keyed ``(j, j', i, i')``).

    ``symmetry_defects`` lists entries where the raw coefficients violated the
    symmetry ``F^{jj'}_{ii'} = F^{j'j}_{i'i}`` before symmetrization.
    """

    n: int
    m: int
    F1: list
    F2: dict
    symmetry_defects: list = field(default_factory=list)

    def __post_init__(self):
        self.F1 = [as_expr(v) for v in self.F1]
        full = {}
        for j, jp in product(range(1, self.m + 1), repeat=2):
            for i, ip in _pairs(self.n):
                full[(j, jp, i, ip)] = as_expr(self.F2.get((j, jp, i, ip), ZERO))
        self.F2 = full

    def F(self, j, jp, i, ip) -> Expr:
        return self.F2[(j, jp, i, ip)]

    def recompose(self) -> list:
        return recompose(self.n, self.m, self.F1, self.F2)

    def context(self, max_order: int = 6) -> JetContext:
        return JetContext(self.n, self.m, max_order)

    @classmethod
    def from_entries(cls, n: int, m: int, F1: Sequence, entries: dict, cfg: ZeroTestConfig | None = None):
        """Build from entries given for any subset of index positions.

        Missing positions are filled by the symmetries; conflicting entries
        raise ``ValueError``.
        """
        table: dict = {}
        for (j, jp, i, ip), v in entries.items():
            v = as_expr(v)
            for key in ((j, jp, i, ip), (j, jp, ip, i), (jp, j, ip, i), (jp, j, i, ip)):
                old = table.get(key)
                if old is not None and old != v:
                    res = is_zero(add(old, mul(-1, v)), cfg)
                    if res.status is ZeroStatus.NONZERO:
                        raise ValueError(f"entries violate symmetry at F{key[0]}{key[1]}[{key[2]},{key[3]}]")
                table[key] = v
        return cls(n, m, list(F1), table)

    def is_first_order(self) -> bool:
        return all(max_jet_order(v) <= 1 for v in list(self.F1) + list(self.F2.values()))


def decompose_second_order(e: Sequence, ctx: JetContext, cfg: ZeroTestConfig | None = None) -> InverseProblemData:
    """Write ``e^j = F^j - sum_{ordered (i,i')} F^{jj'}_{ii'} w^{j'}_{ii'}`` with symmetric ``F``."""
    n, m = ctx.n, ctx.m
    if len(e) != m:
        raise ValueError(f"expected {m} expressions, got {len(e)}")
    raw: dict = {}
    F1 = []
    for j, ej in enumerate(e, start=1):
        ej = ctx.check_expr(as_expr(ej))
        if max_jet_order(ej) > 2:
            raise NonlinearSecondOrder(f"e{j} has order {max_jet_order(ej)} > 2")
        second = [r for r in ej.free if isinstance(r, Jet) and r.order == 2]
        zero_out = {r: ZERO for r in second}
        for ref in second:
            coef = pdiff(ej, ref)
            if any(isinstance(r, Jet) and r.order == 2 for r in coef.free):
                raise NonlinearSecondOrder(f"e{j} is not affine in {Var(ref)}")
            a, b = ref.index
            if a == b:
                raw[(j, ref.j, a, a)] = mul(-1, coef)
            else:
                half = mul(Fraction(-1, 2), coef)
                raw[(j, ref.j, a, b)] = half
                raw[(j, ref.j, b, a)] = half
        try:
            F1.append(substitute(ej, zero_out) if zero_out else ej)
        except ConstructionError as err:
            raise NonlinearSecondOrder(f"e{j}: {err}") from None
    table = {}
    defects = []
    for j, jp in product(range(1, m + 1), repeat=2):
        for i, ip in _pairs(n):
            a = raw.get((j, jp, i, ip), ZERO)
            b = raw.get((jp, j, ip, i), ZERO)
            if a == b:
                table[(j, jp, i, ip)] = a
                continue
            diff = add(a, mul(-1, b))
            if j < jp or (j == jp and i < ip):
                defects.append(((j, jp, i, ip), diff))
            table[(j, jp, i, ip)] = mul(Fraction(1, 2), add(a, b))
    data = InverseProblemData(n, m, F1, table)
    if defects:
        zt = cfg or ZeroTestConfig()
        data.symmetry_defects = [(k, d, is_zero(d, zt).status) for k, d in defects]
    return data


# --------------------------------------------------------------------------
# null Lagrangians


@dataclass(frozen=True)
class NullVerdict:
    status: ZeroStatus
    results: tuple

    @property
    def is_null(self) -> bool:
        return self.status is not ZeroStatus.NONZERO


def is_null_lagrangian(f: Expr, ctx: JetContext, cfg: ZeroTestConfig | None = None) -> NullVerdict:
    results = tuple(is_zero(e, cfg) for e in euler_lagrange(f, ctx))
    return NullVerdict(weakest(r.status for r in results), results)


def divergence_representation(
    f: Expr, c: Sequence | None, ctx: JetContext, cfg: ZeroTestConfig | None = None
) -> list:
    """``f_1..f_n`` with ``sum d/dx_i f_i = f`` for a null Lagrangian ``f``.

    The straight-line homotopy from the reference ``c`` (functions of x)
    integrates the divergence part of the variational split; the remainder
    ``f(x, d c)`` is absorbed into ``f_1`` through its primitive in ``x1``.
    """
    from .tonti import antiderivative, integrate_polynomial, reference_jets

    f = ctx.check_expr(as_expr(f))
    verdict = is_null_lagrangian(f, ctx, cfg)
    if not verdict.is_null:
        raise NotNullLagrangian("Euler-Lagrange expressions do not vanish")
    c = [as_expr(v) for v in c] if c is not None else [ZERO] * ctx.m
    split = variation_split(f, ctx)
    ext = extend(ctx)
    t = ext.n + 1
    s = Var(Indep(t))
    one_minus_s = add(ONE, mul(-1, s))
    out = []
    try:
        for Fi in split.divergence_terms:
            refs = [r for r in Fi.free if isinstance(r, Jet)]
            bind = {}
            plain = [r for r in refs if t not in r.index]
            cj = reference_jets(c, plain, ctx)
            for r in plain:
                bind[r] = add(mul(s, Var(r)), mul(one_minus_s, cj[r]))
            for r in refs:
                if t in r.index:
                    base = tuple(k for k in r.index if k != t)
                    bind[r] = add(Var(Jet(r.j, base)), mul(-1, total_derivative_multi(c[r.j - 1], base, ctx)))
            out.append(integrate_polynomial(substitute(Fi, bind), Indep(t)))
        at_ref = substitute(f, reference_jets(c, [r for r in f.free if isinstance(r, Jet)], ctx))
    except ConstructionError as err:
        raise NotClosedFormIntegrable(f"homotopy hits a singularity: {err}") from None
    if not at_ref.is_zero_literal():
        out[0] = add(out[0], antiderivative(at_ref, Indep(1)))
    check = add(*[total_derivative(fi, i + 1, ctx) for i, fi in enumerate(out)], mul(-1, f))
    res = is_zero(check, cfg)
    if res.status is ZeroStatus.NONZERO:
        raise PotentialVerificationFailed(f"divergence check failed at {res.witness}")
    return out


__all__ = [
    "euler_lagrange", "variation_split", "VariationSplit", "el_split_first_order",
    "FirstOrderELDecomposition", "InverseProblemData", "decompose_second_order",
    "is_null_lagrangian", "NullVerdict", "divergence_representation", "recompose",
    "first_order_total",
]
