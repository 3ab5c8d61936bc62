"""Derivations and substitution on canonical expressions."""

from __future__ import annotations

from typing import Callable, Mapping

from .core import (
    ZERO,
    ONE,
    Add,
    Const,
    Expr,
    Func,
    Mul,
    Pow,
    Var,
    VarRef,
    add,
    as_expr,
    cos,
    func,
    mul,
    power,
    sin,
)


def derive(e: Expr, atom: Callable[[VarRef], Expr], active: Callable[[Expr], bool] | None = None) -> Expr:
    """Apply the derivation determined by its values ``atom(ref)`` on variables.

    ``active(node)`` may prune subtrees known to differentiate to zero.
    """
    memo: dict = {}

    def d(node: Expr) -> Expr:
        if active is not None and not active(node):
            return ZERO
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = ZERO
        elif isinstance(node, Var):
            out = atom(node.ref)
        elif isinstance(node, Add):
            out = add(*[d(t) for t in node.terms])
        elif isinstance(node, Mul):
            fs = node.factors
            parts = []
            for k, f in enumerate(fs):
                df = d(f)
                if df.is_zero_literal():
                    continue
                parts.append(mul(df, *fs[:k], *fs[k + 1:]))
            out = add(*parts)
        elif isinstance(node, Pow):
            db = d(node.base)
            out = ZERO if db.is_zero_literal() else mul(node.exp, power(node.base, node.exp - 1), db)
        elif isinstance(node, Func):
            da = d(node.arg)
            if da.is_zero_literal():
                out = ZERO
            elif node.kind == "exp":
                out = mul(node, da)
            elif node.kind == "ln":
                out = mul(power(node.arg, -1), da)
            elif node.kind == "sin":
                out = mul(cos(node.arg), da)
            else:
                out = mul(-1, sin(node.arg), da)
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[node] = out
        return out

    return d(e)


def pdiff(e: Expr, v) -> Expr:
    """Partial derivative treating every distinct variable as independent."""
    ref = v.ref if isinstance(v, Var) else v
    if ref not in e.free:
        return ZERO
    return derive(e, lambda r: ONE if r == ref else ZERO, lambda node: ref in node.free)


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneous replacement of variables, followed by canonicalization."""
    table = {}
    for k, v in bindings.items():
        table[k.ref if isinstance(k, Var) else k] = as_expr(v)
    keys = frozenset(table)
    if not keys:
        return e
    memo: dict = {}

    def s(node: Expr) -> Expr:
        if not (node.free & keys):
            return node
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Var):
            out = table.get(node.ref, node)
        elif isinstance(node, Add):
            out = add(*[s(t) for t in node.terms])
        elif isinstance(node, Mul):
            out = mul(*[s(f) for f in node.factors])
        elif isinstance(node, Pow):
            out = power(s(node.base), node.exp)
        elif isinstance(node, Func):
            out = func(node.kind, s(node.arg))
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[node] = out
        return out

    return s(e)


def coefficient_in(e: Expr, v) -> Expr:
    """Coefficient of the variable ``v`` in an expression affine in ``v``."""
    return pdiff(e, v)
