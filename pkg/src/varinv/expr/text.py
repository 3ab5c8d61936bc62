"""Text grammar for expressions: parser and deterministic printer.

Grammar::

    number      3   3/4
    variables   x1 .. x<n>, t, w<j>, w<j>[i1,...,ir]   (indices 1..n or t)
    operators   + - * / ^        functions exp( ) ln( ) sin( ) cos( )

``t`` denotes index ``n+1``; printing it by name requires ``n``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .core import (
    FUNC_KINDS,
    ONE,
    Add,
    ConstructionError,
    Const,
    Expr,
    Func,
    Indep,
    Jet,
    Mul,
    Pow,
    Var,
    add,
    content_gcd,
    factors_of,
    func,
    mul,
    power,
    split_term,
    terms_of,
)


class ParseError(ValueError):
    def __init__(self, message: str, token: str = "", pos: int = -1):
        super().__init__(f"{message} (token {token!r} at {pos})" if token or pos >= 0 else message)
        self.token = token
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(text: str):
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover
            raise ParseError("unreadable input", text[pos:], pos)
        num, name, sym = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            out.append(("num", num, start))
        elif name is not None:
            out.append(("name", name, start))
        else:
            if sym not in "+-*/^()[],":
                raise ParseError("unexpected character", sym, start)
            out.append(("sym", sym, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


_X_NAME = re.compile(r"x(\d+)$")
_W_NAME = re.compile(r"w(\d+)$")


class _Parser:
    def __init__(self, text: str, n: int | None, m: int | None):
        self.toks = _tokenize(text)
        self.k = 0
        self.n = n
        self.m = m

    def peek(self):
        return self.toks[self.k]

    def take(self):
        tok = self.toks[self.k]
        self.k += 1
        return tok

    def expect(self, sym):
        tok = self.take()
        if tok[1] != sym or tok[0] != "sym":
            raise ParseError(f"expected {sym!r}", tok[1], tok[2])
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError("trailing input", tok[1], tok[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            tok = self.peek()
            if tok[0] == "sym" and tok[1] in "+-":
                self.take()
                rhs = self.term()
                e = add(e, rhs) if tok[1] == "+" else add(e, mul(-1, rhs))
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            tok = self.peek()
            if tok[0] == "sym" and tok[1] in "*/":
                self.take()
                rhs = self.unary()
                if tok[1] == "*":
                    e = mul(e, rhs)
                else:
                    if rhs.is_zero_literal():
                        raise ParseError("division by zero", tok[1], tok[2])
                    e = mul(e, power(rhs, -1))
            else:
                return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "sym" and tok[1] in "+-":
            self.take()
            inner = self.unary()
            return inner if tok[1] == "+" else mul(-1, inner)
        return self.pow()

    def pow(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok[0] == "sym" and tok[1] == "^":
            self.take()
            ex = self.unary()
            if not isinstance(ex, Const):
                raise ParseError("exponent must be a rational constant", tok[1], tok[2])
            try:
                return power(base, ex.value)
            except ConstructionError as err:
                raise ParseError(str(err), tok[1], tok[2]) from None
        return base

    def atom(self) -> Expr:
        tok = self.take()
        kind, text, pos = tok
        if kind == "num":
            return Const(int(text))
        if kind == "sym" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if text in FUNC_KINDS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                try:
                    return func(text, arg)
                except ConstructionError as err:
                    raise ParseError(str(err), text, pos) from None
            if text == "t":
                return Var(Indep(self._t_index(text, pos)))
            mx = _X_NAME.match(text)
            if mx:
                i = int(mx.group(1))
                if i < 1 or (self.n is not None and i > self.n):
                    raise ParseError("independent variable out of range", text, pos)
                return Var(Indep(i))
            mw = _W_NAME.match(text)
            if mw:
                j = int(mw.group(1))
                if j < 1 or (self.m is not None and j > self.m):
                    raise ParseError("dependent variable out of range", text, pos)
                index = ()
                nxt = self.peek()
                if nxt[0] == "sym" and nxt[1] == "[":
                    self.take()
                    index = self._index_list()
                return Var(Jet(j, tuple(sorted(index))))
        raise ParseError("unexpected token", text, pos)

    def _t_index(self, text, pos):
        if self.n is None:
            raise ParseError("'t' requires the number of independent variables", text, pos)
        return self.n + 1

    def _index_list(self):
        idx = []
        while True:
            kind, text, pos = self.take()
            if kind == "num":
                i = int(text)
                if i < 1 or (self.n is not None and i > self.n):
                    raise ParseError("multi-index entry out of range", text, pos)
                idx.append(i)
            elif kind == "name" and text == "t":
                idx.append(self._t_index(text, pos))
            else:
                raise ParseError("bad multi-index entry", text, pos)
            kind, text, pos = self.take()
            if kind == "sym" and text == "]":
                return idx
            if not (kind == "sym" and text == ","):
                raise ParseError("expected ',' or ']'", text, pos)


def parse(text: str, n: int | None = None, m: int | None = None) -> Expr:
    """Parse ``text`` into a canonical expression."""
    return _Parser(text, n, m).parse()


# --------------------------------------------------------------------------
# printing


def _fmt_index(i: int, n: int | None) -> str:
    return "t" if n is not None and i == n + 1 else str(i)


def _fmt_var(ref, n):
    if isinstance(ref, Indep):
        return "t" if n is not None and ref.i == n + 1 else f"x{ref.i}"
    if not ref.index:
        return f"w{ref.j}"
    return f"w{ref.j}[" + ",".join(_fmt_index(i, n) for i in ref.index) + "]"


def _fmt_rational(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def to_text(e: Expr, n: int | None = None) -> str:
    """Deterministic rendering of ``e`` in the expression grammar."""
    return _Printer(n).expr(e)


class _Printer:
    def __init__(self, n):
        self.n = n

    def expr(self, e: Expr) -> str:
        if isinstance(e, Add):
            return self.sum(e)
        return self.term(e)

    def sum(self, e: Add) -> str:
        factored = _common_factor(e)
        if factored is not None:
            coeff, atoms, inner = factored
            return self.product(coeff, atoms, extra=self.sum_plain(inner))
        return self.sum_plain(e)

    def sum_plain(self, e: Add) -> str:
        parts = []
        for k, t in enumerate(e.terms):
            s = self.term(t)
            if k == 0:
                parts.append(s)
            elif s.startswith("-"):
                parts.append(" - " + s[1:])
            else:
                parts.append(" + " + s)
        return "".join(parts)

    def term(self, t: Expr) -> str:
        if isinstance(t, Const):
            return _fmt_rational(t.value)
        c, _ = split_term(t)
        return self.product(c, list(factors_of(t)))

    def product(self, coeff: Fraction, atoms, extra: str | None = None) -> str:
        neg = coeff < 0
        coeff = abs(coeff)
        num, den = [], []
        if coeff.numerator != 1:
            num.append(str(coeff.numerator))
        if coeff.denominator != 1:
            den.append(str(coeff.denominator))
        for base, k in atoms:
            if k > 0:
                num.append(self.power(base, k))
            else:
                den.append(self.power(base, -k))
        if extra is not None:
            num.append("(" + extra + ")")
        s = "*".join(num) if num else "1"
        if den:
            s += "/" + (den[0] if len(den) == 1 else "(" + "*".join(den) + ")")
        return "-" + s if neg else s

    def power(self, base: Expr, k: Fraction) -> str:
        b = self.atom(base)
        if k == 1:
            return b
        ks = str(k.numerator) if k.denominator == 1 else f"({_fmt_rational(k)})"
        return f"{b}^{ks}"

    def atom(self, e: Expr) -> str:
        if isinstance(e, Var):
            return _fmt_var(e.ref, self.n)
        if isinstance(e, Func):
            return f"{e.kind}({self.expr(e.arg)})"
        if isinstance(e, Const) and e.value >= 0 and e.value.denominator == 1:
            return str(e.value)
        return "(" + self.expr(e) + ")"


def _common_factor(e: Add):
    """Pull out rational content and common atom powers for display.

    For each atom present in every term with exponents of one sign, the
    exponent of smallest magnitude is extracted.  Returns ``None`` when
    nothing can be pulled out.
    """
    coeffs = []
    exps = None
    for t in e.terms:
        c, _ = split_term(t)
        coeffs.append(c)
        here = dict(factors_of(t)) if not isinstance(t, Const) else {}
        if exps is None:
            exps = dict(here)
        else:
            for b in list(exps):
                k = here.get(b)
                if k is None or (k > 0) != (exps[b] > 0):
                    del exps[b]
                elif abs(k) < abs(exps[b]):
                    exps[b] = k
    g = content_gcd(coeffs)
    if g == 1 and not exps:
        return None
    atoms = sorted(exps.items(), key=lambda bk: bk[0].key)
    scale = mul(*[power(b, -k) for b, k in atoms]) if atoms else ONE
    inner = add(*[mul(Const(Fraction(1) / g), scale, t) for t in terms_of(e)])
    if not isinstance(inner, Add):  # pragma: no cover
        return None
    return g, atoms, inner
