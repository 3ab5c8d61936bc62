"""Order reduction of Lagrangians with one independent variable.

While ``f`` is affine in its top-order jets ``w^j_R`` with coefficients of
order at most ``R - 2``, the total derivative ``d/dx sum f^j w^j_{R-1}`` is
subtracted; this removes the top-order terms without changing the
Euler–Lagrange expressions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import WrongShape
from .expr.calculus import pdiff
from .expr.core import Expr, Jet, Var, add, as_expr, max_jet_order, mul
from .expr.zerotest import ZeroStatus, ZeroTestConfig, is_zero, weakest
from .jet import JetContext, total_derivative
from .variational import euler_lagrange


class TopKind(Enum):
    NONLINEAR = "NonlinearTop"
    LINEAR = "LinearTop"
    CONSTANT = "Constant"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TopOrder:
    kind: TopKind
    order: int
    coeffs: tuple = ()
    coeff_order: int = -1


@dataclass
class ReductionTrace:
    # (subtracted total derivative, resulting Lagrangian)
    steps: list
    final: Expr
    stop: TopOrder
    statuses: list = field(default_factory=list)

    @property
    def status(self) -> ZeroStatus:
        return weakest(self.statuses)


def _top_jet(j: int, order: int) -> Jet:
    return Jet(j, (1,) * order)


def classify_top_order(f: Expr, ctx: JetContext) -> TopOrder:
    if ctx.n != 1:
        raise WrongShape("order reduction needs n = 1")
    f = ctx.check_expr(as_expr(f))
    R = max_jet_order(f)
    if R < 0:
        return TopOrder(TopKind.CONSTANT, -1)
    tops = [_top_jet(j, R) for j in range(1, ctx.m + 1)]
    coeffs = []
    for t in tops:
        d = pdiff(f, t)
        if any(r in d.free for r in tops):
            return TopOrder(TopKind.NONLINEAR, R)
        coeffs.append(d)
    corder = max((max_jet_order(c) for c in coeffs), default=-1)
    return TopOrder(TopKind.LINEAR, R, tuple(coeffs), corder)


def reduce_order(f: Expr, ctx: JetContext, cfg: ZeroTestConfig | None = None, check: bool = True) -> ReductionTrace:
    """Subtract total derivatives while the top-order coefficients allow it."""
    f = ctx.check_expr(as_expr(f))
    el0 = euler_lagrange(f, ctx) if check else None
    steps, statuses = [], []
    while True:
        top = classify_top_order(f, ctx)
        if top.kind is not TopKind.LINEAR or top.coeff_order > top.order - 2:
            return ReductionTrace(steps, f, top, statuses)
        R = top.order
        h = add(*[mul(cj, Var(_top_jet(j, R - 1))) for j, cj in enumerate(top.coeffs, start=1)])
        dh = total_derivative(h, 1, ctx)
        f = add(f, mul(-1, dh))
        steps.append((dh, f))
        if check:
            el = euler_lagrange(f, ctx)
            statuses.append(weakest(is_zero(add(a, mul(-1, b)), cfg).status for a, b in zip(el, el0)))


__all__ = ["TopKind", "TopOrder", "ReductionTrace", "classify_top_order", "reduce_order"]
