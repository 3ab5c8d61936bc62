"""Batch floating-point evaluation of expressions.

An expression is flattened into a postfix program (``compile_expr``) and run
over many points at once.  Two interchangeable back ends exist: a numba
``@njit`` stack machine sweeping each op over all points, and a pure-numpy path that keeps
one array per stack slot.  Setting ``VARINV_DISABLE_NUMBA=1`` (or a missing
numba install) selects the numpy path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .expr.core import Add, Const, Expr, Func, Mul, Pow, Var

OP_CONST, OP_VAR, OP_ADD, OP_MUL, OP_POW, OP_EXP, OP_LOG, OP_SIN, OP_COS = range(9)
_FUNC_OPS = {"exp": OP_EXP, "ln": OP_LOG, "sin": OP_SIN, "cos": OP_COS}


def _numba_wanted() -> bool:
    return os.environ.get("VARINV_DISABLE_NUMBA", "") not in ("1", "true", "yes")


try:  # pragma: no cover - exercised depending on the environment
    if not _numba_wanted():
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


@dataclass(frozen=True)
class Program:
    """Postfix program: ``ops[k]`` with integer argument ``iarg[k]`` and real ``farg[k]``.

    For ``OP_POW`` the exponent is ``iarg/farg`` with ``farg`` the (integer)
    denominator stored as float.
    """

    ops: np.ndarray
    iarg: np.ndarray
    farg: np.ndarray
    refs: tuple
    depth: int


def compile_expr(e: Expr, refs=None) -> Program:
    """Flatten ``e``; ``refs`` fixes the column order of variables (default: sorted)."""
    if refs is None:
        refs = tuple(sorted(e.free, key=lambda r: r.key))
    col = {r: k for k, r in enumerate(refs)}
    ops, iarg, farg = [], [], []
    depth = [0, 0]

    def push(op, i=0, f=0.0, delta=0):
        ops.append(op)
        iarg.append(i)
        farg.append(f)
        depth[0] += delta
        depth[1] = max(depth[1], depth[0])

    def emit(node):
        if isinstance(node, Const):
            push(OP_CONST, 0, float(node.value), 1)
        elif isinstance(node, Var):
            push(OP_VAR, col[node.ref], 0.0, 1)
        elif isinstance(node, (Add, Mul)):
            kids = node.terms if isinstance(node, Add) else node.factors
            for k in kids:
                emit(k)
            push(OP_ADD if isinstance(node, Add) else OP_MUL, len(kids), 0.0, 1 - len(kids))
        elif isinstance(node, Pow):
            emit(node.base)
            k = Fraction(node.exp)
            push(OP_POW, k.numerator, float(k.denominator), 0)
        elif isinstance(node, Func):
            emit(node.arg)
            push(_FUNC_OPS[node.kind])
        else:  # pragma: no cover
            raise TypeError(type(node))

    emit(e)
    return Program(
        np.asarray(ops, dtype=np.int64),
        np.asarray(iarg, dtype=np.int64),
        np.asarray(farg, dtype=np.float64),
        tuple(refs),
        depth[1],
    )


def _run_numpy(ops, iarg, farg, X, depth):
    npts = X.shape[0]
    stack = [None] * max(depth, 1)
    sp = 0
    with np.errstate(all="ignore"):
        for k in range(ops.shape[0]):
            op = ops[k]
            if op == OP_CONST:
                stack[sp] = np.full(npts, farg[k])
                sp += 1
            elif op == OP_VAR:
                stack[sp] = X[:, iarg[k]].astype(np.float64)
                sp += 1
            elif op == OP_ADD:
                cnt = iarg[k]
                acc = stack[sp - cnt].copy()
                for r in range(sp - cnt + 1, sp):
                    acc += stack[r]
                sp -= cnt
                stack[sp] = acc
                sp += 1
            elif op == OP_MUL:
                cnt = iarg[k]
                acc = stack[sp - cnt].copy()
                for r in range(sp - cnt + 1, sp):
                    acc *= stack[r]
                sp -= cnt
                stack[sp] = acc
                sp += 1
            elif op == OP_POW:
                b = stack[sp - 1]
                p, q = int(iarg[k]), farg[k]
                if q == 1.0:
                    stack[sp - 1] = np.power(b, float(p))
                else:
                    mag = np.power(np.abs(b), p / q)
                    if int(q) % 2 == 0:
                        out = np.where(b < 0, np.nan, mag)
                    else:
                        out = np.where(b < 0, -mag if p % 2 else mag, mag)
                    stack[sp - 1] = out
            elif op == OP_EXP:
                stack[sp - 1] = np.exp(stack[sp - 1])
            elif op == OP_LOG:
                b = stack[sp - 1]
                stack[sp - 1] = np.where(b > 0, np.log(np.where(b > 0, b, 1.0)), np.nan)
            elif op == OP_SIN:
                stack[sp - 1] = np.sin(stack[sp - 1])
            elif op == OP_COS:
                stack[sp - 1] = np.cos(stack[sp - 1])
    return stack[0]


if HAVE_NUMBA:

    @njit(cache=True, error_model="numpy")
    def _ipow(b, p):  # pragma: no cover - compiled
        # integer power by squaring; the generic pow is far slower
        e = p if p >= 0 else -p
        r = 1.0
        while e:
            if e & 1:
                r *= b
            b *= b
            e >>= 1
        return r if p >= 0 else 1.0 / r

    @njit(cache=True, error_model="numpy")
    def _run_numba(ops, iarg, farg, X, depth):  # pragma: no cover - compiled
        # column-oriented: each op sweeps all points, one stack row per slot
        npts = X.shape[0]
        stack = np.empty((max(depth, 1), npts))
        sp = 0
        for k in range(ops.shape[0]):
            op = ops[k]
            if op == 0:
                v = farg[k]
                for pt in range(npts):
                    stack[sp, pt] = v
                sp += 1
            elif op == 1:
                c = iarg[k]
                for pt in range(npts):
                    stack[sp, pt] = X[pt, c]
                sp += 1
            elif op == 2 or op == 3:
                cnt = iarg[k]
                lo = sp - cnt
                for r in range(lo + 1, sp):
                    if op == 2:
                        for pt in range(npts):
                            stack[lo, pt] += stack[r, pt]
                    else:
                        for pt in range(npts):
                            stack[lo, pt] *= stack[r, pt]
                sp = lo + 1
            elif op == 4:
                p = iarg[k]
                q = farg[k]
                even = int(q) % 2 == 0
                for pt in range(npts):
                    b = stack[sp - 1, pt]
                    if q == 1.0:
                        stack[sp - 1, pt] = _ipow(b, p)
                    elif b < 0.0:
                        if even:
                            stack[sp - 1, pt] = np.nan
                        else:
                            r = (-b) ** (p / q)
                            stack[sp - 1, pt] = -r if p % 2 != 0 else r
                    else:
                        stack[sp - 1, pt] = b ** (p / q)
            elif op == 5:
                for pt in range(npts):
                    stack[sp - 1, pt] = np.exp(stack[sp - 1, pt])
            elif op == 6:
                for pt in range(npts):
                    b = stack[sp - 1, pt]
                    stack[sp - 1, pt] = np.log(b) if b > 0.0 else np.nan
            elif op == 7:
                for pt in range(npts):
                    stack[sp - 1, pt] = np.sin(stack[sp - 1, pt])
            else:
                for pt in range(npts):
                    stack[sp - 1, pt] = np.cos(stack[sp - 1, pt])
        return stack[0].copy()


def backend() -> str:
    """Name of the active back end."""
    return "numba" if HAVE_NUMBA and _numba_wanted() else "numpy"


def run(prog: Program, X, use_numba: bool | None = None) -> np.ndarray:
    """Evaluate ``prog`` at each row of ``X`` (shape ``(npoints, len(prog.refs))``).

    Poles give ``inf`` or ``nan``; no exception is raised.
    """
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    if X.shape[1] != len(prog.refs):
        if len(prog.refs) == 0:
            X = np.zeros((X.shape[0], 0))
        else:
            raise ValueError(f"expected {len(prog.refs)} columns, got {X.shape[1]}")
    if use_numba is None:
        use_numba = backend() == "numba"
    if use_numba:
        if not HAVE_NUMBA:
            raise RuntimeError("numba back end requested but unavailable")
        return _run_numba(prog.ops, prog.iarg, prog.farg, X, prog.depth)
    return _run_numpy(prog.ops, prog.iarg, prog.farg, X, prog.depth)


def evaluate_batch(e: Expr, columns: dict, use_numba: bool | None = None) -> np.ndarray:
    """Evaluate ``e`` with ``columns`` mapping each variable to an array of values."""
    prog = compile_expr(e)
    if not prog.refs:
        n = len(next(iter(columns.values()))) if columns else 1
        return run(prog, np.zeros((n, 0)), use_numba)
    X = np.column_stack([np.asarray(columns[r], dtype=np.float64) for r in prog.refs])
    return run(prog, X, use_numba)


__all__ = ["Program", "compile_expr", "run", "evaluate_batch", "backend", "HAVE_NUMBA"]
