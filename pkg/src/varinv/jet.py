"""Jet contexts and total derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import AlreadyExtended, OrderOverflow, OutOfContext
from .expr.calculus import derive
from .expr.core import ONE, ZERO, Expr, Indep, Jet, Var


@dataclass(frozen=True)
class JetContext:
    """``n`` independent and ``m`` dependent variables, jets up to ``max_order``.

    In an extended context the index ``n+1`` is the parameter ``t``; jet
    variables whose multi-index contains it are variations.
    """

    n: int
    m: int
    max_order: int = 6
    extended: bool = False

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be >= 1")
        if self.max_order < 2:
            raise ValueError("max_order must be >= 2")

    @property
    def n_eff(self) -> int:
        return self.n + 1 if self.extended else self.n

    @property
    def t_index(self) -> int | None:
        return self.n + 1 if self.extended else None

    @property
    def t(self) -> Expr:
        """The parameter ``t`` as an expression (extended contexts only)."""
        if not self.extended:
            raise OutOfContext("t exists only in an extended context")
        return Var(Indep(self.n + 1))

    def x(self, i: int) -> Expr:
        self._check_index(i)
        return Var(Indep(i))

    def w(self, j: int, *index: int) -> Expr:
        ref = Jet(j, tuple(sorted(index)))
        self.check_ref(ref)
        return Var(ref)

    def variation(self, j: int, *index: int) -> Expr:
        """``w^j_{It}``."""
        if not self.extended:
            raise OutOfContext("variations exist only in an extended context")
        return self.w(j, *index, self.n + 1)

    def _check_index(self, i: int):
        if not 1 <= i <= self.n_eff:
            raise OutOfContext(f"index {i} outside 1..{self.n_eff}")

    def check_ref(self, ref):
        if isinstance(ref, Indep):
            self._check_index(ref.i)
        else:
            if not 1 <= ref.j <= self.m:
                raise OutOfContext(f"dependent index {ref.j} outside 1..{self.m}")
            for i in ref.index:
                self._check_index(i)
            if ref.order > self.max_order:
                raise OrderOverflow(f"jet order {ref.order} exceeds max_order {self.max_order}")

    def check_expr(self, e: Expr):
        for ref in e.free:
            self.check_ref(ref)
        return e

    def is_variation(self, ref) -> bool:
        return self.extended and isinstance(ref, Jet) and (self.n + 1) in ref.index


def extend(ctx: JetContext) -> JetContext:
    """Context with the extra parameter ``t``; room for two more derivative orders."""
    if ctx.extended:
        raise AlreadyExtended("context is already extended")
    return JetContext(ctx.n, ctx.m, ctx.max_order + 2, True)


def insert_index(index: tuple, i: int) -> tuple:
    return tuple(sorted(index + (i,)))


def total_derivative(e: Expr, i: int, ctx: JetContext) -> Expr:
    """``d/dx_i`` of ``e`` (``i = n+1`` is ``d/dt`` in an extended context)."""
    ctx._check_index(i)
    xi = Indep(i)
    cap = ctx.max_order

    def atom(ref):
        if isinstance(ref, Indep):
            return ONE if ref == xi else ZERO
        if ref.order + 1 > cap:
            raise OrderOverflow(f"d/dx{i} of {Var(ref)} exceeds max_order {cap}")
        return Var(Jet(ref.j, insert_index(ref.index, i)))

    relevant = frozenset(r for r in e.free if isinstance(r, Jet) or r == xi)
    if not relevant:
        return ZERO
    return derive(e, atom, lambda node: not relevant.isdisjoint(node.free))


def total_derivative_multi(e: Expr, index: Iterable[int], ctx: JetContext) -> Expr:
    """Iterated total derivative ``d/dx_I``."""
    for i in index:
        if e.is_zero_literal():
            return e
        e = total_derivative(e, i, ctx)
    return e


__all__ = ["JetContext", "extend", "total_derivative", "total_derivative_multi", "insert_index"]
