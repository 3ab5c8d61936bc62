"""Three-valued zero testing and exact / interval evaluation.

``is_zero`` answers ``Zero`` when the canonical form is the literal ``0``,
``NonZero`` with a witness point when some sample evaluates to a value that is
certainly non-zero, and ``LikelyZero`` otherwise.  Samples are random
rational points; points hitting a pole or leaving the domain of ``ln`` or of
a fractional power are rejected.

Rational expressions are evaluated exactly with :class:`fractions.Fraction`.
Expressions containing transcendental kernels (or irrational roots) are
evaluated with outward-rounded interval arithmetic; a sample counts as
non-zero only when the enclosing interval excludes zero.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Mapping

from mpmath import iv, mp

from .core import Add, Const, Expr, Func, Mul, Pow, Var, _rational_root, simplify


class ZeroStatus(IntEnum):
    """Ordered so that ``min`` gives the weakest status."""

    NONZERO = 0
    LIKELY_ZERO = 1
    ZERO = 2

    @property
    def label(self) -> str:
        return ("NonZero", "LikelyZero", "Zero")[self.value]

    def __str__(self):
        return self.label


def weakest(statuses: Iterable[ZeroStatus] | ZeroStatus, *more: ZeroStatus) -> ZeroStatus:
    """Weakest status among the arguments; ``Zero`` for an empty collection."""
    if isinstance(statuses, ZeroStatus):
        items = [statuses, *more]
    else:
        items = [*statuses, *more]
    return min(items, default=ZeroStatus.ZERO)


@dataclass(frozen=True)
class ZeroTestConfig:
    samples: int = 8
    seed: int = 0
    normalize: bool = True
    precision: int = 256
    numerator_bound: int = 29
    denominator_bound: int = 11


@dataclass(frozen=True)
class ZeroResult:
    status: ZeroStatus
    witness: dict | None = None
    # exact value at the witness for rational expressions, else None
    value: Fraction | None = None
    # (lo, hi) float enclosure at the witness for transcendental expressions
    enclosure: tuple | None = field(default=None, compare=False)

    @property
    def is_nonzero(self) -> bool:
        return self.status is ZeroStatus.NONZERO


class PoleExhaustion(RuntimeError):
    """No admissible sample point was found within the attempt budget."""


class Pole(ArithmeticError):
    """The expression is undefined at the evaluation point."""


class NotRational(ArithmeticError):
    """The value at the point is not an exact rational."""


def _lookup(assignment: Mapping, ref):
    try:
        return assignment[ref]
    except KeyError:
        raise KeyError(f"no value for variable {ref}") from None


def evaluate(e: Expr, assignment: Mapping) -> Fraction:
    """Exact rational value of ``e``.

    Raises :class:`Pole` where ``e`` is undefined and :class:`NotRational`
    when a transcendental kernel or an irrational root is reached.
    """
    memo: dict = {}

    def ev(node: Expr) -> Fraction:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = node.value
        elif isinstance(node, Var):
            out = Fraction(_lookup(assignment, node.ref))
        elif isinstance(node, Add):
            out = sum((ev(t) for t in node.terms), Fraction(0))
        elif isinstance(node, Mul):
            out = Fraction(1)
            for f in node.factors:
                out *= ev(f)
        elif isinstance(node, Pow):
            b = ev(node.base)
            k = node.exp
            if b == 0:
                if k < 0:
                    raise Pole("division by zero")
                out = Fraction(0)
            elif b < 0 and k.denominator % 2 == 0:
                raise Pole("even root of a negative number")
            else:
                r = _rational_root(b, k)
                if r is None:
                    raise NotRational("irrational root")
                out = r
        elif isinstance(node, Func):
            a = ev(node.arg)
            if node.kind == "ln":
                if a <= 0:
                    raise Pole("ln of a non-positive number")
                if a == 1:
                    out = Fraction(0)
                else:
                    raise NotRational("ln")
            elif a == 0:
                out = Fraction(0) if node.kind == "sin" else Fraction(1)
            else:
                raise NotRational(node.kind)
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[node] = out
        return out

    return ev(e)


_IV_LOCK = threading.Lock()


def evaluate_interval(e: Expr, assignment: Mapping, precision: int = 256):
    """Rigorous interval enclosure of the value of ``e`` (an ``mpmath.iv.mpf``)."""
    with _IV_LOCK:
        old = iv.prec
        iv.prec = precision
        try:
            return _iv_eval(e, assignment)
        finally:
            iv.prec = old


def _iv_const(v: Fraction):
    if v.denominator == 1:
        return iv.mpf(v.numerator)
    return iv.mpf(v.numerator) / v.denominator


def _iv_eval(e: Expr, assignment: Mapping):
    memo: dict = {}

    def ev(node: Expr):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = _iv_const(node.value)
        elif isinstance(node, Var):
            out = _iv_const(Fraction(_lookup(assignment, node.ref)))
        elif isinstance(node, Add):
            out = iv.mpf(0)
            for t in node.terms:
                out = out + ev(t)
        elif isinstance(node, Mul):
            out = iv.mpf(1)
            for f in node.factors:
                out = out * ev(f)
        elif isinstance(node, Pow):
            b = ev(node.base)
            k = node.exp
            if k < 0 and b.a <= 0 <= b.b:
                raise Pole("denominator encloses zero")
            if k.denominator == 1:
                out = b ** int(k)
            else:
                if b.a <= 0 <= b.b:
                    raise Pole("root of a value enclosing zero")
                neg = b.b < 0
                if neg and k.denominator % 2 == 0:
                    raise Pole("even root of a negative number")
                mag = -b if neg else b
                out = iv.exp(iv.log(mag) * _iv_const(k))
                if neg and k.numerator % 2:
                    out = -out
        elif isinstance(node, Func):
            a = ev(node.arg)
            if node.kind == "exp":
                out = iv.exp(a)
            elif node.kind == "ln":
                if a.a <= 0:
                    raise Pole("ln of a value that may be non-positive")
                out = iv.log(a)
            elif node.kind == "sin":
                out = iv.sin(a)
            else:
                out = iv.cos(a)
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[node] = out
        return out

    return ev(e)


def evaluate_mp(e: Expr, assignment: Mapping, dps: int = 50):
    """Floating value of ``e`` in ``mpmath`` multiprecision (non-rigorous)."""
    with mp.workdps(dps):
        return _mp_eval(e, assignment)


def _mp_eval(e, assignment):
    memo: dict = {}

    def ev(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = mp.mpf(node.value.numerator) / node.value.denominator
        elif isinstance(node, Var):
            v = assignment[node.ref]
            out = mp.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else mp.mpf(v)
        elif isinstance(node, Add):
            out = mp.fsum(ev(t) for t in node.terms)
        elif isinstance(node, Mul):
            out = mp.fprod(ev(f) for f in node.factors)
        elif isinstance(node, Pow):
            b = ev(node.base)
            k = node.exp
            if b == 0 and k < 0:
                raise Pole("division by zero")
            if k.denominator == 1:
                out = b ** int(k)
            elif b < 0:
                if k.denominator % 2 == 0:
                    raise Pole("even root of a negative number")
                out = -((-b) ** (mp.mpf(k.numerator) / k.denominator))
                if k.numerator % 2 == 0:
                    out = -out
            else:
                out = b ** (mp.mpf(k.numerator) / k.denominator)
        elif isinstance(node, Func):
            a = ev(node.arg)
            if node.kind == "ln":
                if a <= 0:
                    raise Pole("ln of a non-positive number")
                out = mp.log(a)
            else:
                out = getattr(mp, node.kind)(a)
        else:  # pragma: no cover
            raise TypeError(type(node))
        memo[node] = out
        return out

    return ev(e)


def _sorted_refs(e: Expr):
    return sorted(e.free, key=lambda r: r.key)


def random_assignment(refs, rng: random.Random, cfg: ZeroTestConfig) -> dict:
    return {
        r: Fraction(rng.randint(-cfg.numerator_bound, cfg.numerator_bound), rng.randint(1, cfg.denominator_bound))
        for r in refs
    }


def sample_value(e: Expr, point: Mapping, precision: int):
    """Return ``("exact", Fraction)`` or ``("interval", iv)``; raises :class:`Pole`."""
    try:
        return "exact", evaluate(e, point)
    except NotRational:
        return "interval", evaluate_interval(e, point, precision)


def is_zero(e: Expr, cfg: ZeroTestConfig | None = None) -> ZeroResult:
    """Three-valued zero test of ``e``."""
    cfg = cfg or ZeroTestConfig()
    e = simplify(e)
    if e.is_zero_literal():
        return ZeroResult(ZeroStatus.ZERO)
    if isinstance(e, Const):
        return ZeroResult(ZeroStatus.NONZERO, {}, e.value)
    refs = _sorted_refs(e)
    rng = random.Random(cfg.seed)
    # a quick sampling pass first: a non-zero witness saves the normalization
    witness = _sample(e, refs, rng, cfg, budget=min(cfg.samples, 2))
    if isinstance(witness, ZeroResult):
        return witness
    if cfg.normalize:
        from .normalize import normalize

        ne = normalize(e)
        if ne.is_zero_literal():
            return ZeroResult(ZeroStatus.ZERO)
        if isinstance(ne, Const):
            return ZeroResult(ZeroStatus.NONZERO, {r: Fraction(0) for r in refs}, ne.value)
    out = _sample(e, refs, rng, cfg, budget=cfg.samples)
    if isinstance(out, ZeroResult):
        return out
    return ZeroResult(ZeroStatus.LIKELY_ZERO)


def _sample(e, refs, rng, cfg, budget):
    good = 0
    attempts = 0
    limit = 100 * max(cfg.samples, 1)
    while good < budget:
        attempts += 1
        if attempts > limit:
            raise PoleExhaustion(f"no pole-free sample in {limit} attempts for {e}")
        point = random_assignment(refs, rng, cfg)
        try:
            kind, val = sample_value(e, point, cfg.precision)
        except Pole:
            continue
        good += 1
        if kind == "exact":
            if val != 0:
                return ZeroResult(ZeroStatus.NONZERO, point, val)
        elif not (val.a <= 0 <= val.b):
            return ZeroResult(ZeroStatus.NONZERO, point, None, (float(val.a), float(val.b)))
    return good


__all__ = [
    "ZeroStatus",
    "ZeroTestConfig",
    "ZeroResult",
    "PoleExhaustion",
    "Pole",
    "NotRational",
    "evaluate",
    "evaluate_interval",
    "evaluate_mp",
    "is_zero",
    "weakest",
    "random_assignment",
    "sample_value",
]

