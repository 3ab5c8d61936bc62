"""Homotopy substitution, integration over the homotopy parameter, Tonti Lagrangian."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConstructionError, NotClosedFormIntegrable
from .expr.calculus import substitute
from .expr.core import ONE, ZERO, Const, Expr, Indep, Jet, Var, add, as_expr, factors_of, mul, power, split_term, terms_of
from .jet import JetContext, total_derivative_multi

DEFAULT_QUAD_ORDER = 32


# --------------------------------------------------------------------------
# polynomial dependence on a single variable


def is_polynomial_in(e: Expr, ref) -> bool:
    """True iff ``e`` is a polynomial in ``ref`` with coefficients free of ``ref``."""
    if ref not in e.free:
        return True
    v = Var(ref)
    for t in terms_of(e):
        if ref not in t.free:
            continue
        for base, k in factors_of(t):
            if ref not in base.free:
                continue
            if base != v or k.denominator != 1 or k < 0:
                return False
    return True


def polynomial_coefficients(e: Expr, ref) -> dict:
    """``{k: coefficient}`` with ``e = sum coefficient * ref^k``; requires polynomial dependence."""
    v = Var(ref)
    out: dict = {}
    for t in terms_of(e):
        k = 0
        rest = []
        c, _ = split_term(t)
        if not isinstance(t, Const):
            for base, kk in factors_of(t):
                if base == v:
                    k = int(kk)
                else:
                    rest.append(power(base, kk))
        out.setdefault(k, []).append(mul(Const(c), *rest))
    return {k: add(*parts) for k, parts in out.items()}


def integrate_polynomial(e: Expr, ref, lo=0, hi=1) -> Expr:
    """Definite integral of ``e`` over ``ref`` from ``lo`` to ``hi`` (polynomial dependence)."""
    if not is_polynomial_in(e, ref):
        raise NotClosedFormIntegrable(f"not polynomial in {Var(ref)}: {e}")
    lo, hi = as_expr(lo), as_expr(hi)
    parts = []
    for k, coef in polynomial_coefficients(e, ref).items():
        span = add(power(hi, k + 1), mul(-1, power(lo, k + 1)))
        parts.append(mul(Fraction(1, k + 1), span, coef))
    return add(*parts)


def antiderivative(e: Expr, ref) -> Expr:
    """Primitive in ``ref`` vanishing at ``ref = 0`` (polynomial dependence)."""
    if not is_polynomial_in(e, ref):
        raise NotClosedFormIntegrable(f"no closed-form primitive in {Var(ref)}: {e}")
    v = Var(ref)
    return add(*[mul(Fraction(1, k + 1), power(v, k + 1), c) for k, c in polynomial_coefficients(e, ref).items()])


# --------------------------------------------------------------------------
# homotopy substitution


@dataclass(frozen=True)
class HomotopyIntegrand:
    integrand: Expr
    param: Indep
    t_polynomial: bool


@dataclass(frozen=True)
class ClosedForm:
    expr: Expr


@dataclass(frozen=True)
class QuadratureForm:
    """``integral_0^1 integrand dt`` evaluated by Gauss–Legendre quadrature."""

    integrand: Expr
    param: Indep
    order: int = DEFAULT_QUAD_ORDER

    def evaluate(self, columns: dict, use_numba: bool | None = None) -> np.ndarray:
        """Vectorized value at points given as ``{ref: array}``."""
        from .kernels import compile_expr, run

        nodes, weights = gauss_legendre_01(self.order)
        refs = tuple(sorted((r for r in self.integrand.free if r != self.param), key=lambda r: r.key))
        prog = compile_expr(self.integrand, refs + (self.param,))
        npts = len(next(iter(columns.values()))) if columns else 1
        base = np.column_stack([np.asarray(columns[r], dtype=np.float64) for r in refs] + [np.zeros(npts)])
        total = np.zeros(npts)
        for s, wt in zip(nodes, weights):
            base[:, -1] = s
            total += wt * run(prog, base, use_numba)
        return total

    def evaluate_mp(self, point: dict, dps: int = 40):
        """High-precision value at one point (``{ref: number}``) via ``mpmath``."""
        from mpmath import mp

        from .expr.zerotest import evaluate_mp

        with mp.workdps(dps):
            nodes, weights = _gl_nodes_mp(self.order, dps)
            acc = mp.mpf(0)
            for s, wt in zip(nodes, weights):
                pt = dict(point)
                pt[self.param] = s
                acc += wt * evaluate_mp(self.integrand, pt, dps)
            return acc


def gauss_legendre_01(order: int):
    """Nodes and weights of the ``order``-point Gauss–Legendre rule on [0, 1]."""
    x, wts = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, wts / 2.0


@lru_cache(maxsize=16)
def _gl_nodes_mp(order: int, dps: int):
    from mpmath import mp

    with mp.workdps(dps + 10):
        nodes, weights = [], []
        for k in range(1, order + 1):
            # Newton iteration on P_order from the Chebyshev-like initial guess
            x = mp.cos(mp.pi * (k - mp.mpf(1) / 4) / (order + mp.mpf(1) / 2))
            for _ in range(100):
                p, dp = mp.legendre(order, x), _legendre_deriv(order, x)
                dx = p / dp
                x -= dx
                if abs(dx) < mp.mpf(10) ** (-(dps + 5)):
                    break
            dp = _legendre_deriv(order, x)
            wt = 2 / ((1 - x**2) * dp**2)
            nodes.append((x + 1) / 2)
            weights.append(wt / 2)
    return tuple(nodes), tuple(weights)


def _legendre_deriv(n, x):
    from mpmath import mp

    return n * (x * mp.legendre(n, x) - mp.legendre(n - 1, x)) / (x**2 - 1)


def homotopy_param(ctx: JetContext) -> Indep:
    """The symbol used for the homotopy parameter (rendered ``t``)."""
    return Indep(ctx.n + 1)


def reference_jets(c: Sequence, refs, ctx: JetContext) -> dict:
    """``{Jet(j, I): d/dx_I c^j}`` for the jet variables in ``refs``."""
    out = {}
    for ref in refs:
        if isinstance(ref, Jet):
            out[ref] = total_derivative_multi(as_expr(c[ref.j - 1]), ref.index, ctx)
    return out


def homotopy_substitute(e: Expr, c: Sequence | None, ctx: JetContext, param: Indep | None = None) -> HomotopyIntegrand:
    """Replace every ``w^j_I`` by ``t*w^j_I + (1-t)*d/dx_I c^j``."""
    param = param or homotopy_param(ctx)
    c = list(c) if c is not None else [ZERO] * ctx.m
    for cj in c:
        cj = as_expr(cj)
        if any(isinstance(r, Jet) for r in cj.free):
            raise ValueError("reference functions must depend on independent variables only")
    t = Var(param)
    one_minus_t = add(ONE, mul(-1, t))
    refs = [r for r in e.free if isinstance(r, Jet)]
    cj = reference_jets(c, refs, ctx)
    bindings = {r: add(mul(t, Var(r)), mul(one_minus_t, cj[r])) for r in refs}
    try:
        h = substitute(e, bindings)
    except ConstructionError as err:  # a pole of e on the homotopy
        raise NotClosedFormIntegrable(f"homotopy hits a singularity: {err}") from None
    return HomotopyIntegrand(h, param, is_polynomial_in(h, param))


def integrate_t(h: HomotopyIntegrand, quad_order: int = DEFAULT_QUAD_ORDER):
    """``integral_0^1 h dt``: exact when polynomial in ``t``, else a quadrature form."""
    if h.t_polynomial:
        return ClosedForm(integrate_polynomial(h.integrand, h.param))
    return QuadratureForm(h.integrand, h.param, quad_order)


def tonti_lagrangian(e: Sequence, c: Sequence | None, ctx: JetContext, quad_order: int = DEFAULT_QUAD_ORDER):
    """The Lagrangian ``sum_j integral_0^1 e^j(homotopy) dt * (w^j - c^j)``."""
    if len(e) != ctx.m:
        raise ValueError(f"expected {ctx.m} expressions, got {len(e)}")
    c = [as_expr(v) for v in c] if c is not None else [ZERO] * ctx.m
    param = homotopy_param(ctx)
    closed, open_parts = [], []
    for j, ej in enumerate(e):
        weight = add(Var(Jet(j + 1)), mul(-1, c[j]))
        h = homotopy_substitute(as_expr(ej), c, ctx, param)
        if h.t_polynomial:
            closed.append(mul(integrate_polynomial(h.integrand, param), weight))
        else:
            open_parts.append(mul(h.integrand, weight))
    if not open_parts:
        return ClosedForm(add(*closed))
    # closed parts are t-independent, so they integrate to themselves
    return QuadratureForm(add(*closed, *open_parts), param, quad_order)


__all__ = [
    "HomotopyIntegrand", "ClosedForm", "QuadratureForm", "homotopy_substitute", "integrate_t",
    "tonti_lagrangian", "is_polynomial_in", "integrate_polynomial", "antiderivative",
    "gauss_legendre_01", "homotopy_param", "reference_jets", "DEFAULT_QUAD_ORDER",
]
