"""Exact symbolic expressions over jet variables."""

from .core import (
    ONE,
    ZERO,
    Add,
    Const,
    ConstructionError,
    Expr,
    Func,
    Indep,
    Jet,
    Mul,
    Pow,
    Var,
    VarRef,
    add,
    cos,
    exp,
    func,
    ln,
    max_jet_order,
    mul,
    power,
    simplify,
    sin,
    w,
    x,
)
from .calculus import derive, pdiff, substitute
from .text import ParseError, parse, to_text
from .zerotest import (
    PoleExhaustion,
    ZeroResult,
    ZeroStatus,
    ZeroTestConfig,
    evaluate,
    is_zero,
    weakest,
)

__all__ = [
    "ONE", "ZERO", "Add", "Const", "ConstructionError", "Expr", "Func", "Indep", "Jet",
    "Mul", "Pow", "Var", "VarRef", "add", "cos", "exp", "func", "ln", "max_jet_order",
    "mul", "power", "simplify", "sin", "w", "x", "derive", "pdiff", "substitute",
    "ParseError", "parse", "to_text", "PoleExhaustion", "ZeroResult", "ZeroStatus",
    "ZeroTestConfig", "evaluate", "is_zero", "weakest",
]
