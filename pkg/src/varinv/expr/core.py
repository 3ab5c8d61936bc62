"""Expression nodes and the canonicalizing constructors.

Every expression built through :func:`add`, :func:`mul`, :func:`power` and
:func:`func` is in canonical form:

* sums and products are flat and sorted by :attr:`Expr.key`;
* rational constants are folded, a product carries at most one leading
  constant and a sum at most one constant term (placed first);
* products are fully distributed over sums, positive integer powers of sums
  are expanded, so canonical expressions are "Laurent polynomials" in atoms
  (variables, function applications, non-expandable powers of sums);
* sums raised to negative integer powers are made primitive (the first term
  has coefficient 1) with the content moved into the coefficient;
* all ``exp`` factors of a product are merged into a single ``exp``.

The node classes themselves do not canonicalize; they can be used to build
raw trees which :func:`varinv.expr.simplify` brings to canonical form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from numbers import Rational
from typing import Iterable, Union

# node ranks, used as the first component of every sort key
CONST, INDEP, JET, POW, FUNC, MUL, ADD = range(7)

FUNC_KINDS = ("exp", "ln", "sin", "cos")


class ConstructionError(ValueError):
    """Raised for expressions the engine refuses to build."""


@dataclass(frozen=True, slots=True)
class Indep:
    """Independent variable ``x_i``; index ``n+1`` plays the role of ``t``."""

    i: int

    def __post_init__(self):
        if self.i < 1:
            raise ConstructionError(f"independent index must be >= 1, got {self.i}")

    @property
    def key(self):
        return (INDEP, self.i)


@dataclass(frozen=True, slots=True)
class Jet:
    """Jet coordinate ``w^j_I`` with a sorted multi-index ``I``."""

    j: int
    index: tuple = ()

    def __post_init__(self):
        if self.j < 1:
            raise ConstructionError(f"dependent index must be >= 1, got {self.j}")
        idx = tuple(self.index)
        if any(i < 1 for i in idx):
            raise ConstructionError(f"multi-index entries must be >= 1: {idx}")
        if list(idx) != sorted(idx):
            raise ConstructionError(f"multi-index must be sorted: {idx}")
        object.__setattr__(self, "index", idx)

    @property
    def order(self) -> int:
        return len(self.index)

    @property
    def key(self):
        return (JET, self.j, self.index)


VarRef = Union[Indep, Jet]


class Expr:
    """Immutable expression node; equality is structural."""

    __slots__ = ("key", "_hash", "_free")

    def __init__(self, key):
        self.key = key
        self._hash = hash(key)
        self._free = None

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction)):
                return isinstance(self, Const) and self.value == other
            return NotImplemented
        return self._hash == other._hash and self.key == other.key

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    @property
    def free(self) -> frozenset:
        """The set of :data:`VarRef` occurring in the expression."""
        if self._free is None:
            self._free = self._compute_free()
        return self._free

    def _compute_free(self):
        acc = set()
        for child in self.children():
            acc |= child.free
        return frozenset(acc)

    def children(self) -> tuple:
        return ()

    def is_zero_literal(self) -> bool:
        return isinstance(self, Const) and self.value == 0

    # arithmetic sugar; always canonical
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(other, power(self, -1))

    def __neg__(self):
        return mul(-1, self)

    def __pow__(self, k):
        return power(self, k)

    def __repr__(self):
        from .text import to_text

        return f"Expr({to_text(self)!r})"

    def __str__(self):
        from .text import to_text

        return to_text(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        value = Fraction(value)
        self.value = value
        super().__init__((CONST, value))

    def _compute_free(self):
        return frozenset()


class Var(Expr):
    __slots__ = ("ref",)

    def __init__(self, ref: VarRef):
        self.ref = ref
        super().__init__(ref.key)

    def _compute_free(self):
        return frozenset((self.ref,))


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp):
        exp = Fraction(exp)
        self.base = base
        self.exp = exp
        super().__init__((POW, base.key, exp))

    def children(self):
        return (self.base,)


class Func(Expr):
    __slots__ = ("kind", "arg")

    def __init__(self, kind: str, arg: Expr):
        if kind not in FUNC_KINDS:
            raise ConstructionError(f"unknown function kernel {kind!r}")
        self.kind = kind
        self.arg = arg
        super().__init__((FUNC, FUNC_KINDS.index(kind), arg.key))

    def children(self):
        return (self.arg,)


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: Iterable[Expr]):
        self.factors = tuple(factors)
        super().__init__((MUL, tuple(f.key for f in self.factors)))

    def children(self):
        return self.factors


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Expr]):
        self.terms = tuple(terms)
        super().__init__((ADD, tuple(t.key for t in self.terms)))

    def children(self):
        return self.terms


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)) or isinstance(v, Rational):
        return Const(v)
    if isinstance(v, float):
        raise ConstructionError("floating-point constants are not allowed in expressions")
    if isinstance(v, (Indep, Jet)):
        return Var(v)
    raise ConstructionError(f"cannot convert {v!r} to an expression")


def x(i: int) -> Expr:
    return Var(Indep(i))


def w(j: int, *index: int) -> Expr:
    return Var(Jet(j, tuple(sorted(index))))


# --------------------------------------------------------------------------
# term helpers


def split_term(e: Expr):
    """Split a canonical non-sum term into ``(coefficient, monomial)``."""
    if isinstance(e, Const):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), e


def make_term(c: Fraction, mono: Expr) -> Expr:
    if mono is ONE or mono == ONE:
        return Const(c)
    if c == 1:
        return mono
    if isinstance(mono, Mul):
        return Mul((Const(c),) + mono.factors)
    return Mul((Const(c), mono))


def terms_of(e: Expr) -> tuple:
    return e.terms if isinstance(e, Add) else (e,)


def factors_of(e: Expr):
    """Yield ``(base, exponent)`` pairs of a canonical non-sum term, constant excluded."""
    fs = e.factors if isinstance(e, Mul) else (e,)
    for f in fs:
        if isinstance(f, Const):
            continue
        if isinstance(f, Pow):
            yield f.base, f.exp
        else:
            yield f, Fraction(1)


def primitive(s: Add):
    """Return ``(c, s')`` with ``s = c*s'`` and the first term of ``s'`` monic."""
    c, _ = split_term(s.terms[0])
    if c == 1:
        return Fraction(1), s
    new = []
    for t in s.terms:
        ct, mono = split_term(t)
        new.append(make_term(ct / c, mono))
    return c, Add(new)


def _rational_root(v: Fraction, k: Fraction):
    """Exact ``v**k`` for rational ``k`` if it is rational, else ``None``."""
    q = k.denominator
    num, den = v.numerator, v.denominator
    sign = 1
    if num < 0:
        if q % 2 == 0:
            return None
        sign, num = -1, -num
    rn = _iroot(num, q)
    rd = _iroot(den, q)
    if rn is None or rd is None:
        return None
    return (Fraction(sign * rn, rd)) ** k.numerator


def _iroot(a: int, q: int):
    if a in (0, 1):
        return a
    r = round(a ** (1.0 / q))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**q == a:
            return cand
    return None


# --------------------------------------------------------------------------
# canonicalizing constructors


def add(*args) -> Expr:
    coeffs: dict = {}
    const = Fraction(0)
    for a in args:
        a = as_expr(a)
        for t in terms_of(a):
            if isinstance(t, Const):
                const += t.value
                continue
            c, mono = split_term(t)
            coeffs[mono] = coeffs.get(mono, 0) + c
    terms = [make_term(c, m) for m, c in coeffs.items() if c != 0]
    if len(terms) > 1:
        terms.sort(key=_term_sort_key)
    if const != 0:
        terms.insert(0, Const(const))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(terms)


def _term_sort_key(t: Expr):
    return split_term(t)[1].key


def mul(*args) -> Expr:
    coeff = Fraction(1)
    powers: dict = {}
    sums = []
    exp_args = []
    stack = [as_expr(a) for a in args]
    while stack:
        a = stack.pop()
        if isinstance(a, Const):
            coeff *= a.value
            if coeff == 0:
                return ZERO
        elif isinstance(a, Mul):
            stack.extend(a.factors)
        elif isinstance(a, Pow):
            powers[a.base] = powers.get(a.base, 0) + a.exp
        elif isinstance(a, Func) and a.kind == "exp":
            exp_args.append(a.arg)
        elif isinstance(a, Add):
            sums.append(a)
        else:
            powers[a] = powers.get(a, 0) + 1
    if exp_args:
        arg = add(*exp_args) if len(exp_args) > 1 else exp_args[0]
        if not arg.is_zero_literal():
            powers[Func("exp", arg)] = Fraction(1)
    if sums and any(isinstance(b, Add) for b in powers):
        rest = []
        for s in sums:
            c, prim = primitive(s)
            if prim in powers:
                powers[prim] += 1
                coeff *= c
            else:
                rest.append(s)
        sums = rest
    factors = []
    for b, k in powers.items():
        if k == 0:
            continue
        if isinstance(b, Const):
            r = _rational_root(b.value, k) if b.value != 0 or k > 0 else None
            if b.value == 0 and k < 0:
                raise ConstructionError("division by zero")
            if r is not None:
                coeff *= r
            else:
                factors.append(Pow(b, k))
        elif isinstance(b, Add) and k > 0 and k.denominator == 1:
            sums.extend([b] * int(k))
        elif k == 1:
            factors.append(b)
        else:
            factors.append(Pow(b, k))
    if coeff == 0:
        return ZERO
    if sums:
        base = _make_mul(coeff, factors)
        terms = [base]
        for s in sums:
            terms = [mul(t, u) for t in terms for u in s.terms]
        return add(*terms)
    return _make_mul(coeff, factors)


def _make_mul(coeff: Fraction, factors: list) -> Expr:
    if len(factors) > 1:
        factors.sort(key=_key_of)
    if not factors:
        return Const(coeff)
    if coeff == 1:
        return factors[0] if len(factors) == 1 else Mul(factors)
    return Mul([Const(coeff)] + factors)


def _key_of(e: Expr):
    return e.key


def power(b, k) -> Expr:
    b = as_expr(b)
    if isinstance(k, Expr):
        if not isinstance(k, Const):
            raise ConstructionError("symbolic exponents are not supported")
        k = k.value
    if isinstance(k, float):
        raise ConstructionError("floating-point exponents are not allowed")
    k = Fraction(k)
    if k == 0:
        return ONE
    if k == 1:
        return b
    if isinstance(b, Const):
        if b.value == 0:
            if k < 0:
                raise ConstructionError("division by zero")
            return ZERO
        r = _rational_root(b.value, k)
        return Const(r) if r is not None else Pow(b, k)
    if isinstance(b, Pow):
        if k.denominator == 1:
            return power(b.base, b.exp * k)
        return Pow(b, k)
    if isinstance(b, Func) and b.kind == "exp":
        return func("exp", mul(k, b.arg))
    if isinstance(b, Mul):
        if k.denominator == 1:
            return mul(*[power(f, k) for f in b.factors])
        return Pow(b, k)
    if isinstance(b, Add):
        if k.denominator == 1:
            if k > 0:
                return mul(*([b] * int(k)))
            c, prim = primitive(b)
            return mul(Const(c ** int(k)), Pow(prim, k))
        return Pow(b, k)
    return Pow(b, k)


def func(kind: str, arg) -> Expr:
    arg = as_expr(arg)
    if kind == "exp":
        if arg.is_zero_literal():
            return ONE
        if isinstance(arg, Func) and arg.kind == "ln":
            return arg.arg
    elif kind == "ln":
        if isinstance(arg, Const):
            if arg.value <= 0:
                raise ConstructionError(f"ln of non-positive constant {arg.value}")
            if arg.value == 1:
                return ZERO
        if isinstance(arg, Func) and arg.kind == "exp":
            return arg.arg
    elif kind == "sin":
        if arg.is_zero_literal():
            return ZERO
    elif kind == "cos":
        if arg.is_zero_literal():
            return ONE
    return Func(kind, arg)


def exp(a) -> Expr:
    return func("exp", a)


def ln(a) -> Expr:
    return func("ln", a)


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def simplify(e: Expr, normalize: bool = False) -> Expr:
    """Canonical form of ``e``.

    With ``normalize=True`` the result is additionally brought over a common
    denominator and exact polynomial quotients are cancelled.
    """
    out = _rebuild(e, {})
    if normalize:
        from .normalize import normalize as _normalize

        out = _normalize(out)
    return out


def _rebuild(e: Expr, memo: dict) -> Expr:
    hit = memo.get(id(e))
    if hit is not None:
        return hit[1]
    if isinstance(e, (Const, Var)):
        out = e
    elif isinstance(e, Add):
        out = add(*[_rebuild(t, memo) for t in e.terms])
    elif isinstance(e, Mul):
        out = mul(*[_rebuild(f, memo) for f in e.factors])
    elif isinstance(e, Pow):
        out = power(_rebuild(e.base, memo), e.exp)
    elif isinstance(e, Func):
        out = func(e.kind, _rebuild(e.arg, memo))
    else:  # pragma: no cover
        raise TypeError(type(e))
    memo[id(e)] = (e, out)
    return out


def max_jet_order(e: Expr, exclude_index: int | None = None) -> int:
    """Largest multi-index length among jet variables of ``e``; -1 if none.

    Variables whose multi-index contains ``exclude_index`` are ignored.
    """
    best = -1
    for ref in e.free:
        if isinstance(ref, Jet):
            if exclude_index is not None and exclude_index in ref.index:
                continue
            best = max(best, ref.order)
    return best


def content_gcd(values) -> Fraction:
    """Positive rational gcd of a collection of non-zero rationals."""
    num = 0
    den = 1
    for v in values:
        num = gcd(num, abs(v.numerator))
        den = den * v.denominator // gcd(den, v.denominator)
    return Fraction(num, den) if num else Fraction(1)
