"""First-order Lagrangians for the exact inverse problem (cases m = 1, n = 1, m = 2).

Every potential is produced by a straight-line homotopy and then checked
against its defining equation.  With ``p`` the first-order variables, ``c``
their reference values and ``s`` the homotopy parameter the pipeline is

1. ``fbar``: second-order homotopy of the Hessian ``F + G`` from ``p = c``;
2. ``B^{j'j}_{i'}``: p-slopes of ``F^j - E^j[fbar]`` on the level set;
3. ``A^j_i``: potential of the w-space 2-form ``B`` (one for each ``i``);
4. ``A``: potential of the 1-form ``a_j = F^j - E^j[fbar + sum A^j_i (p^j_i - c^j_i)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

from .errors import (
    AnsatzFailed,
    ConditionsFailed,
    ConstructionError,
    IncompatibleHessian,
    MissingG,
    NotClosedFormIntegrable,
    PotentialVerificationFailed,
    WrongShape,
)
from .expr.calculus import pdiff, substitute
from .expr.core import ONE, ZERO, Const, Expr, Indep, Jet, Var, add, as_expr, mul, power, split_term, terms_of
from .expr.zerotest import ZeroStatus, ZeroTestConfig, is_zero, weakest
from .helmholtz import (
    ConditionSetReport,
    conditions_m1,
    conditions_m2,
    conditions_n1,
    grad_G12,
    mixed_entry,
)
from .jet import JetContext
from .tonti import integrate_polynomial
from .variational import InverseProblemData, el_split_first_order

DEFAULT_ANSATZ_DEGREE = 4


def _p(j: int, i: int) -> Expr:
    return Var(Jet(j, (i,)))


def _w(j: int) -> Expr:
    return Var(Jet(j))


@dataclass
class ReferenceFunctions:
    """``c1[(j, i)]``: reference values of ``w^j_i``; ``c0[j-1]``: base point in w-space."""

    c1: dict
    c0: list

    @classmethod
    def make(cls, n: int, m: int, c1=None, c0=None) -> "ReferenceFunctions":
        table = {(j, i): ZERO for j in range(1, m + 1) for i in range(1, n + 1)}
        if isinstance(c1, dict):
            for k, v in c1.items():
                table[k] = as_expr(v)
        elif c1 is not None:
            rows = list(c1)
            if len(rows) != m:
                raise WrongShape(f"expected {m} rows of reference functions")
            for j, row in enumerate(rows, start=1):
                row = [row] if isinstance(row, (Expr, int, Fraction, str)) else list(row)
                if len(row) != n:
                    raise WrongShape(f"expected {n} reference functions for w{j}")
                for i, v in enumerate(row, start=1):
                    table[(j, i)] = as_expr(v)
        base = [as_expr(v) for v in c0] if c0 is not None else [ZERO] * m
        if len(base) != m:
            raise WrongShape(f"expected {m} base-point coordinates")
        for v in table.values():
            if any(isinstance(r, Jet) and r.order > 0 for r in v.free):
                raise WrongShape("reference functions may not contain derivatives")
        for v in base:
            if any(isinstance(r, Jet) for r in v.free):
                raise WrongShape("the w-space base point depends on x only")
        return cls(table, base)

    def depends_on_w(self) -> bool:
        return any(isinstance(r, Jet) for v in self.c1.values() for r in v.free)

    def level(self, e: Expr) -> Expr:
        return substitute(e, {Jet(j, (i,)): v for (j, i), v in self.c1.items()})


@dataclass
class SkewCorrection:
    """``G^{12}_{ii'} = Gbar[(i, i')] + C[(i, i')]``, both skew in ``(i, i')``."""

    Gbar: dict
    C: dict
    degree: int | None = None

    def G12(self, i: int, ip: int) -> Expr:
        return add(self.Gbar.get((i, ip), ZERO), self.C.get((i, ip), ZERO))

    def table(self, n: int) -> dict:
        return _g_table(n, self.G12)


def _g_table(n: int, g12) -> dict:
    out = {}
    for i, ip in product(range(1, n + 1), repeat=2):
        v = g12(i, ip)
        out[(1, 2, i, ip)] = v
        out[(2, 1, i, ip)] = mul(-1, v)
    return out


@dataclass
class LagrangianSolution:
    f: Expr
    fbar: Expr
    A1: dict
    A0: Expr
    c: ReferenceFunctions
    G: SkewCorrection | None = None
    diagnostics: dict = field(default_factory=dict)


def _g_dict(G, n: int) -> dict:
    if G is None:
        return {}
    if isinstance(G, SkewCorrection):
        return G.table(n)
    return dict(G)


def compute_mixed(data: InverseProblemData, G=None) -> dict:
    """Table ``(j', j, i') -> F^{j'j}_{i'}``."""
    if data.m == 2 and G is None:
        for i, ip in product(range(1, data.n + 1), repeat=2):
            if any(isinstance(r, Jet) for r in data.F(1, 2, i, ip).free):
                raise MissingG("the skew correction is required for non-constant F^{12}")
    g = _g_dict(G, data.n)
    return {
        (jp, j, ip): mixed_entry(data, jp, j, ip, g)
        for jp, j in product(range(1, data.m + 1), repeat=2)
        for ip in range(1, data.n + 1)
    }


def _integrate_s(e: Expr, s: Indep) -> Expr:
    return integrate_polynomial(e, s)


def _line(points: dict, s: Expr) -> dict:
    """Bindings ``ref -> base + s (ref - base)`` for ``points = {ref: base}``."""
    return {r: add(b, mul(s, add(Var(r), mul(-1, b)))) for r, b in points.items()}


def _check(expr: Expr, cfg, exc, what: str):
    res = is_zero(expr, cfg)
    if res.status is ZeroStatus.NONZERO:
        raise exc(f"{what} fails at {res.witness}")
    return res.status


def build_fbar(data: InverseProblemData, G, c: ReferenceFunctions, ctx: JetContext | None = None,
               cfg: ZeroTestConfig | None = None, verify: bool = True) -> Expr:
    """Particular solution with Hessian ``F + G`` in the first-order variables, flat at ``p = c``."""
    n, m = data.n, data.m
    g = _g_dict(G, n)
    s_ref = Indep(n + 1)
    s = Var(s_ref)
    coords = [(j, i) for j in range(1, m + 1) for i in range(1, n + 1)]
    delta = {k: add(_p(*k), mul(-1, c.c1[k])) for k in coords}
    bind = _line({Jet(j, (i,)): c.c1[(j, i)] for j, i in coords}, s)
    H = {}
    parts = []
    try:
        for (j, i), (jp, ip) in product(coords, repeat=2):
            h = add(data.F(j, jp, i, ip), g.get((j, jp, i, ip), ZERO))
            H[(j, i, jp, ip)] = h
            if h.is_zero_literal():
                continue
            parts.append(mul(substitute(h, bind), delta[(j, i)], delta[(jp, ip)]))
        integrand = mul(add(ONE, mul(-1, s)), add(*parts))
    except ConstructionError as err:
        raise NotClosedFormIntegrable(f"homotopy hits a singularity: {err}") from None
    fbar = _integrate_s(integrand, s_ref)
    if verify:
        grad = {k: pdiff(fbar, Jet(k[0], (k[1],))) for k in coords}
        for (j, i), (jp, ip) in product(coords, repeat=2):
            if (j, i) > (jp, ip):
                continue
            second = pdiff(grad[(j, i)], Jet(jp, (ip,)))
            _check(add(second, mul(-1, H[(j, i, jp, ip)])), cfg, IncompatibleHessian,
                   f"Hessian entry ({j},{i}),({jp},{ip})")
    return fbar


def _w_potential_1form(a: Sequence, c0: Sequence, n: int) -> Expr:
    """Homotopy potential of ``sum a_j dw^j`` from the base point ``c0``."""
    s_ref = Indep(n + 1)
    s = Var(s_ref)
    m = len(a)
    bind = _line({Jet(j): c0[j - 1] for j in range(1, m + 1)}, s)
    parts = [mul(substitute(a[j - 1], bind), add(_w(j), mul(-1, c0[j - 1]))) for j in range(1, m + 1)]
    return _integrate_s(add(*parts), s_ref)


def _w_potential_2form(beta: dict, c0: Sequence, n: int) -> list:
    """``alpha_k`` with ``d alpha = beta``, ``beta[(j, k)]`` the skew coefficient of ``dw^j dw^k``."""
    s_ref = Indep(n + 1)
    s = Var(s_ref)
    m = len(c0)
    bind = _line({Jet(j): c0[j - 1] for j in range(1, m + 1)}, s)
    out = []
    for k in range(1, m + 1):
        parts = []
        for j in range(1, m + 1):
            b = beta.get((j, k), ZERO)
            if b.is_zero_literal():
                continue
            parts.append(mul(substitute(b, bind), add(_w(j), mul(-1, c0[j - 1]))))
        out.append(_integrate_s(mul(s, add(*parts)), s_ref))
    return out


def _first_order_E(f: Expr, n: int, m: int) -> list:
    return el_split_first_order(f, JetContext(n, m, max_order=2)).E


@dataclass
class _Stage:
    fbar: Expr
    B: dict
    A1: dict
    a: list


def _stage(data: InverseProblemData, G, c: ReferenceFunctions, cfg, verify=True) -> _Stage:
    """Steps 1-3 plus the 1-form ``a_j`` on the level set."""
    n, m = data.n, data.m
    fbar = build_fbar(data, G, c, None, cfg, verify=verify)
    Ef = _first_order_E(fbar, n, m) if not fbar.is_zero_literal() else [ZERO] * m
    R = [add(data.F1[j], mul(-1, Ef[j])) for j in range(m)]
    B = {}
    for j, jp in product(range(1, m + 1), repeat=2):
        for ip in range(1, n + 1):
            B[(jp, j, ip)] = c.level(pdiff(R[j - 1], Jet(jp, (ip,))))
    A1 = {}
    if m > 1:
        for ip in range(1, n + 1):
            beta = {(j, k): B[(k, j, ip)] for j, k in product(range(1, m + 1), repeat=2) if j != k}
            alpha = _w_potential_2form(beta, c.c0, n)
            for k in range(1, m + 1):
                A1[(k, ip)] = alpha[k - 1]
    for j in range(1, m + 1):
        for ip in range(1, n + 1):
            A1.setdefault((j, ip), ZERO)
    g = add(fbar, *[mul(A1[k], add(_p(*k), mul(-1, c.c1[k]))) for k in A1 if not A1[k].is_zero_literal()])
    Eg = _first_order_E(g, n, m) if not g.is_zero_literal() else [ZERO] * m
    a = [c.level(add(data.F1[j], mul(-1, Eg[j]))) for j in range(m)]
    return _Stage(fbar, B, A1, a)


def _assemble(data: InverseProblemData, G, c: ReferenceFunctions, cfg, report: ConditionSetReport | None) -> LagrangianSolution:
    n, m = data.n, data.m
    st = _stage(data, G, c, cfg)
    statuses = {}
    # the 2-form and its potentials
    for ip in range(1, n + 1):
        for j in range(1, m + 1):
            statuses[f"B[{j},{j},{ip}]"] = _check(st.B[(j, j, ip)], cfg, PotentialVerificationFailed,
                                                  f"diagonal slope B^{j}{j}_{ip}")
        for j, jp in combinations(range(1, m + 1), 2):
            lhs = add(pdiff(st.A1[(jp, ip)], Jet(j)), mul(-1, pdiff(st.A1[(j, ip)], Jet(jp))))
            statuses[f"A1[{j},{jp},{ip}]"] = _check(add(lhs, mul(-1, st.B[(jp, j, ip)])), cfg,
                                                    PotentialVerificationFailed, f"2-form potential ({j},{jp},{ip})")
    A0 = _w_potential_1form(st.a, c.c0, n)
    for j in range(1, m + 1):
        statuses[f"A[{j}]"] = _check(add(pdiff(A0, Jet(j)), mul(-1, st.a[j - 1])), cfg,
                                     PotentialVerificationFailed, f"1-form potential component {j}")
    f = add(st.fbar, *[mul(v, add(_p(*k), mul(-1, c.c1[k]))) for k, v in st.A1.items()], A0)
    contract = residual_contract(f, data, cfg)
    diagnostics = {"B": st.B, "a": st.a, "report": report, "statuses": statuses, "contract": contract}
    return LagrangianSolution(f, st.fbar, st.A1, A0, c, G if isinstance(G, SkewCorrection) else None, diagnostics)


def residual_contract(f: Expr, data: InverseProblemData, cfg=None) -> dict:
    """Check ``el_split_first_order(f)`` against the data; raises on a NonZero residual."""
    dec = el_split_first_order(f, JetContext(data.n, data.m, max_order=2))
    out = {}
    for key, v in data.F2.items():
        d = add(dec.E2[key], mul(-1, v))
        res = is_zero(d, cfg)
        if res.status is not ZeroStatus.ZERO:
            raise PotentialVerificationFailed(f"second-order residual {key} is {res.status}")
        out[key] = res.status
    for j in range(data.m):
        res = is_zero(add(dec.E[j], mul(-1, data.F1[j])), cfg)
        if res.status is ZeroStatus.NONZERO:
            raise PotentialVerificationFailed(f"first-order residual {j + 1} fails at {res.witness}")
        out[j + 1] = res.status
    return out


def _defects_report(data: InverseProblemData, report: ConditionSetReport) -> ConditionSetReport:
    if not data.symmetry_defects:
        return report
    from .helmholtz import Condition
    from .expr.zerotest import ZeroResult

    out = ConditionSetReport()
    for key, diff, status in data.symmetry_defects:
        cid = "(2.3)[" + ",".join(map(str, key)) + "]"
        out.conditions.append(Condition(cid, diff, ZeroResult(status)))
    out.conditions.extend(report.conditions)
    return out


def _require(report: ConditionSetReport):
    if report.failing():
        raise ConditionsFailed(report)


def _ref(data, c, c0) -> ReferenceFunctions:
    if isinstance(c, ReferenceFunctions):
        return c
    return ReferenceFunctions.make(data.n, data.m, c, c0)


def solve_m1(data: InverseProblemData, c=None, ctx: JetContext | None = None,
             cfg: ZeroTestConfig | None = None, c0=None) -> LagrangianSolution:
    if data.m != 1:
        raise WrongShape("solve_m1 needs m = 1")
    ref = _ref(data, c, c0)
    report = _defects_report(data, conditions_m1(data, cfg))
    _require(report)
    return _assemble(data, None, ref, cfg, report)


def solve_n1(data: InverseProblemData, c=None, ctx: JetContext | None = None,
             cfg: ZeroTestConfig | None = None, c0=None) -> LagrangianSolution:
    if data.n != 1:
        raise WrongShape("solve_n1 needs n = 1")
    ref = _ref(data, c, c0)
    if data.m > 1 and ref.depends_on_w():
        raise WrongShape("reference functions must depend on x only when m > 1")
    report = _defects_report(data, conditions_n1(data, [ref.c1[(j, 1)] for j in range(1, data.m + 1)], cfg))
    _require(report)
    return _assemble(data, None, ref, cfg, report)


# --------------------------------------------------------------------------
# m = 2: the skew correction


def _closedness(a: list) -> Expr:
    return add(pdiff(a[0], Jet(2)), mul(-1, pdiff(a[1], Jet(1))))


def _monomials(gens: list, degree: int) -> list:
    out = []
    for d in range(degree + 1):
        for combo in _combos(len(gens), d):
            out.append(mul(*[power(gens[k], e) for k, e in enumerate(combo) if e]))
    return out


def _combos(k: int, d: int):
    if k == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _combos(k - 1, d - first):
            yield (first, *rest)


def _coefficients(e: Expr) -> dict:
    out: dict = {}
    for t in terms_of(e):
        if t.is_zero_literal():
            continue
        c, mono = split_term(t)
        out[mono] = out.get(mono, 0) + c
    return out


def solve_linear(rows: list, rhs: list):
    """Exact least-index solution of ``rows @ x = rhs`` over Q, or None if inconsistent."""
    nvar = len(rows[0]) if rows else 0
    M = [list(map(Fraction, r)) + [Fraction(b)] for r, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for col in range(nvar):
        piv = next((k for k in range(r, len(M)) if M[k][col] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][col]
        M[r] = [v * inv for v in M[r]]
        for k in range(len(M)):
            if k != r and M[k][col] != 0:
                fac = M[k][col]
                M[k] = [a - fac * b for a, b in zip(M[k], M[r])]
        pivots.append(col)
        r += 1
        if r == len(M):
            break
    for k in range(r, len(M)):
        if M[k][-1] != 0:
            return None
    sol = [Fraction(0)] * nvar
    for k, col in enumerate(pivots):
        sol[col] = M[k][-1]
    return sol


def _unit_skew(pr, mono, i, ip) -> Expr:
    if (i, ip) == pr:
        return mono
    if (ip, i) == pr:
        return mul(-1, mono)
    return ZERO


def build_Gbar(data: InverseProblemData, c: ReferenceFunctions, cfg=None) -> dict:
    """Particular skew solution of the gradient system for ``G^{12}``, zero on the level set."""
    n = data.n
    s_ref = Indep(n + 1)
    s = Var(s_ref)
    coords = [(a, k) for a in (1, 2) for k in range(1, n + 1)]
    bind = _line({Jet(a, (k,)): c.c1[(a, k)] for a, k in coords}, s)
    out = {}
    for i, ip in combinations(range(1, n + 1), 2):
        grad = grad_G12(data, i, ip)
        parts = [mul(substitute(grad[k], bind), add(_p(*k), mul(-1, c.c1[k]))) for k in coords
                 if not grad[k].is_zero_literal()]
        g = _integrate_s(add(*parts), s_ref)
        for k in coords:
            _check(add(pdiff(g, Jet(k[0], (k[1],))), mul(-1, grad[k])), cfg, PotentialVerificationFailed,
                   f"gradient of G12[{i},{ip}] along w{k[0]}[{k[1]}]")
        out[(i, ip)] = g
        out[(ip, i)] = mul(-1, g)
    return out


def build_G_m2(data: InverseProblemData, c=None, ctx: JetContext | None = None,
               ansatz_degree: int = DEFAULT_ANSATZ_DEGREE, cfg: ZeroTestConfig | None = None,
               c0=None, report: ConditionSetReport | None = None) -> SkewCorrection:
    if data.m != 2:
        raise WrongShape("build_G_m2 needs m = 2")
    ref = _ref(data, c, c0)
    if ref.depends_on_w():
        raise WrongShape("reference functions must depend on x only when m = 2")
    if report is None:
        report = _defects_report(data, conditions_m2(data, ref, cfg))
    _require(report)
    n = data.n
    Gbar = build_Gbar(data, ref, cfg)
    base = _closedness(_stage(data, _g_table(n, lambda i, ip: Gbar.get((i, ip), ZERO)), ref, cfg).a)
    if is_zero(base, cfg).status is not ZeroStatus.NONZERO:
        return SkewCorrection(Gbar, {}, 0)
    zero_data = InverseProblemData(n, 2, [ZERO, ZERO], {})
    gens = [Var(Indep(i)) for i in range(1, n + 1)] + [_w(1), _w(2)]
    pairs = list(combinations(range(1, n + 1), 2))
    base_c = _coefficients(base)
    cache: dict = {}
    basis: list = []
    for degree in range(ansatz_degree + 1):
        for mono in _monomials(gens, degree):
            if any(b[1] == mono for b in basis):
                continue
            for pr in pairs:
                key = (pr, mono)
                tab = _g_table(n, lambda i, ip, pr=pr, mono=mono: _unit_skew(pr, mono, i, ip))
                cache[key] = _coefficients(_closedness(_stage(zero_data, tab, ref, cfg, verify=False).a))
                basis.append(key)
        monos = sorted(set(base_c).union(*[cache[k] for k in basis]), key=lambda e: e.key)
        rows = [[cache[k].get(mu, 0) for k in basis] for mu in monos]
        rhs = [-base_c.get(mu, 0) for mu in monos]
        sol = solve_linear(rows, rhs)
        if sol is None:
            continue
        C: dict = {}
        for (pr, mono), lam in zip(basis, sol):
            if lam:
                C[pr] = add(C.get(pr, ZERO), mul(Const(lam), mono))
        for (i, ip) in list(C):
            C[(ip, i)] = mul(-1, C[(i, ip)])
        return SkewCorrection(Gbar, C, degree)
    raise AnsatzFailed(f"no skew polynomial correction of degree <= {ansatz_degree}")


def solve_m2(data: InverseProblemData, c=None, ctx: JetContext | None = None,
             ansatz_degree: int = DEFAULT_ANSATZ_DEGREE, cfg: ZeroTestConfig | None = None,
             c0=None) -> LagrangianSolution:
    if data.m != 2:
        raise WrongShape("solve_m2 needs m = 2")
    ref = _ref(data, c, c0)
    report = _defects_report(data, conditions_m2(data, ref, cfg))
    _require(report)
    G = build_G_m2(data, ref, ctx, ansatz_degree, cfg, report=report)
    return _assemble(data, G, ref, cfg, report)


def solve(data: InverseProblemData, c=None, ctx: JetContext | None = None, method: str | None = None,
          cfg: ZeroTestConfig | None = None, c0=None, ansatz_degree: int = DEFAULT_ANSATZ_DEGREE) -> LagrangianSolution:
    """Pick the m = 1, n = 1 or m = 2 path by shape unless ``method`` names one."""
    if method is None:
        method = "m1" if data.m == 1 else "n1" if data.n == 1 else "m2" if data.m == 2 else None
    if method == "m1":
        return solve_m1(data, c, ctx, cfg, c0)
    if method == "n1":
        return solve_n1(data, c, ctx, cfg, c0)
    if method == "m2":
        return solve_m2(data, c, ctx, ansatz_degree, cfg, c0)
    raise WrongShape(f"no first-order solver for n = {data.n}, m = {data.m}")


def solution_status(sol: LagrangianSolution) -> ZeroStatus:
    return weakest(list(sol.diagnostics.get("statuses", {}).values()) + list(sol.diagnostics.get("contract", {}).values()))


__all__ = [
    "ReferenceFunctions", "SkewCorrection", "LagrangianSolution", "compute_mixed", "build_fbar",
    "solve_m1", "solve_n1", "build_G_m2", "build_Gbar", "solve_m2", "solve", "residual_contract",
    "solve_linear", "solution_status", "DEFAULT_ANSATZ_DEGREE",
]
