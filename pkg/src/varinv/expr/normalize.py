"""Rational normalization: common denominators and exact polynomial cancellation.

A canonical expression is a sum of terms, each a rational coefficient times
powers of atoms, where negative integer powers of (primitive) sums act as
denominators.  Here such a sum is viewed as ``N / prod D_k^{e_k}`` with ``N`` a
Laurent polynomial in the atoms; every ``D_k`` that divides ``N`` exactly is
cancelled.
"""

from __future__ import annotations

from fractions import Fraction

from .core import (
    Add,
    Const,
    Expr,
    Func,
    Mul,
    Pow,
    Var,
    add,
    factors_of,
    func,
    mul,
    power,
    split_term,
    terms_of,
)

# A monomial is a sorted tuple of (generator, exponent) with generator an Expr
# atom; a polynomial is a dict monomial -> Fraction.


def _mono_mul(a, b):
    acc = dict(a)
    for g, k in b:
        acc[g] = acc.get(g, 0) + k
    return tuple(sorted(((g, k) for g, k in acc.items() if k != 0), key=lambda gk: gk[0].key))


def _mono_div(a, b):
    """``a / b`` if every exponent stays non-negative relative to ``a``, else None."""
    acc = dict(a)
    for g, k in b:
        r = acc.get(g, 0) - k
        if r < 0:
            return None
        acc[g] = r
    return tuple(sorted(((g, k) for g, k in acc.items() if k != 0), key=lambda gk: gk[0].key))


def _poly_mul(p, q):
    out: dict = {}
    for ma, ca in p.items():
        for mb, cb in q.items():
            m = _mono_mul(ma, mb)
            out[m] = out.get(m, 0) + ca * cb
    return {m: c for m, c in out.items() if c != 0}


def _poly_add_into(acc, p, scale=Fraction(1), shift=()):
    for m, c in p.items():
        mm = _mono_mul(m, shift) if shift else m
        v = acc.get(mm, 0) + scale * c
        if v:
            acc[mm] = v
        else:
            acc.pop(mm, None)


def _lead(p):
    # lex order on (generator key, exponent) sequences; any fixed total order
    # compatible with multiplication works for exact division
    return max(p, key=_lex_key)


def _lex_key(mono):
    return tuple((g.key, k) for g, k in mono)


def _shift_nonneg(p):
    """Multiply by a monomial so all exponents are >= 0; return (p', shift)."""
    low: dict = {}
    for m in p:
        for g, k in m:
            if k < low.get(g, 0):
                low[g] = k
    shift = tuple(sorted(((g, -k) for g, k in low.items()), key=lambda gk: gk[0].key))
    if not shift:
        return p, ()
    return {_mono_mul(m, shift): c for m, c in p.items()}, shift


def _exact_div(p, d):
    """Exact quotient ``p / d`` of Laurent polynomials, or None."""
    if not d:
        return None
    p0, sp = _shift_nonneg(p)
    d0, sd = _shift_nonneg(d)
    rem = dict(p0)
    quo: dict = {}
    lm_d = _lead(d0)
    lc_d = d0[lm_d]
    steps = 0
    while rem:
        steps += 1
        if steps > 20000:
            return None
        lm = _lead(rem)
        qm = _mono_div(lm, lm_d)
        if qm is None:
            return None
        qc = rem[lm] / lc_d
        quo[qm] = quo.get(qm, 0) + qc
        _poly_add_into(rem, d0, -qc, qm)
    # quotient of the shifted pair, undo the shifts: p/d = (p0/d0) * sd / sp
    back = _mono_mul(sd, tuple((g, -k) for g, k in sp))
    return {_mono_mul(m, back): c for m, c in quo.items() if c != 0}


def _to_expr(p) -> Expr:
    return add(*[mul(Const(c), *[power(g, k) for g, k in m]) for m, c in p.items()])


class _Split:
    """Term-wise decomposition into numerator polynomial and denominator factors."""

    def __init__(self):
        self.polys: dict = {}  # cache of sum Expr -> polynomial

    def poly_of(self, e: Expr):
        hit = self.polys.get(e)
        if hit is not None:
            return hit
        out: dict = {}
        for t in terms_of(e):
            num, den = self.term(t)
            if den:
                # nested denominator inside a sum base; treat the sum as opaque
                out = {((e, Fraction(1)),): Fraction(1)}
                break
            _poly_add_into(out, num)
        self.polys[e] = out
        return out

    def term(self, t: Expr):
        """Return (numerator poly, {den sum: multiplicity}) for one term."""
        c, _ = split_term(t)
        poly = {(): c}
        den: dict = {}
        if isinstance(t, Const):
            return poly, den
        for base, k in factors_of(t):
            if isinstance(base, Add) and k.denominator == 1 and k < 0:
                den[base] = den.get(base, 0) + int(-k)
            elif isinstance(base, Add) and k.denominator == 1:
                poly = _poly_mul(poly, _poly_pow(self.poly_of(base), int(k)))
            else:
                poly = _poly_mul(poly, {((base, k),): Fraction(1)})
        return poly, den


def _poly_pow(p, k):
    out = {(): Fraction(1)}
    for _ in range(k):
        out = _poly_mul(out, p)
    return out


def normalize(e: Expr) -> Expr:
    """Bring ``e`` over a common denominator and cancel exact polynomial factors."""
    e = _normalize_args(e, {})
    if not isinstance(e, Add):
        return e
    sp = _Split()
    parts = [sp.term(t) for t in e.terms]
    common: dict = {}
    for _, den in parts:
        for b, k in den.items():
            common[b] = max(common.get(b, 0), k)
    if not common:
        return e
    num: dict = {}
    for poly, den in parts:
        scaled = poly
        for b, k in common.items():
            miss = k - den.get(b, 0)
            if miss:
                scaled = _poly_mul(scaled, _poly_pow(sp.poly_of(b), miss))
        _poly_add_into(num, scaled)
    if not num:
        return Const(0)
    remaining = {}
    for b in sorted(common, key=lambda s: s.key):
        k = common[b]
        d = sp.poly_of(b)
        while k > 0:
            q = _exact_div(num, d)
            if q is None:
                break
            num = q
            k -= 1
        if k:
            remaining[b] = k
    out = _to_expr(num)
    if remaining:
        out = mul(out, *[Pow(b, -k) for b, k in remaining.items()])
    return out


def _normalize_args(e: Expr, memo: dict) -> Expr:
    """Normalize the arguments of function applications and opaque powers."""
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, (Const, Var)):
        out = e
    elif isinstance(e, Func):
        out = func(e.kind, normalize(e.arg))
    elif isinstance(e, Pow):
        base = _normalize_args(e.base, memo)
        if isinstance(base, Add) and e.exp.denominator != 1:
            base = normalize(base)
        out = power(base, e.exp)
    elif isinstance(e, Mul):
        out = mul(*[_normalize_args(f, memo) for f in e.factors])
    elif isinstance(e, Add):
        out = add(*[_normalize_args(t, memo) for t in e.terms])
    else:  # pragma: no cover
        raise TypeError(type(e))
    memo[e] = out
    return out


__all__ = ["normalize"]
