"""Seeded random generators for test inputs."""

from __future__ import annotations

import random
from fractions import Fraction

from varinv.expr.core import Expr, add, max_jet_order, mul, w, x


def rand_coeff(rng: random.Random, bound: int = 3) -> Fraction:
    while True:
        c = Fraction(rng.randint(-3 * bound, 3 * bound), rng.randint(1, 3))
        if c and abs(c) <= bound:
            return c


def atoms(n: int, m: int, order: int = 1) -> list:
    out = [x(i) for i in range(1, n + 1)] + [w(j) for j in range(1, m + 1)]
    if order >= 1:
        out += [w(j, i) for j in range(1, m + 1) for i in range(1, n + 1)]
    if order >= 2:
        out += [w(j, i, k) for j in range(1, m + 1) for i in range(1, n + 1) for k in range(i, n + 1)]
    return out


def rand_poly(rng: random.Random, pool: list, degree: int = 2, terms: int = 4) -> Expr:
    parts = []
    for _ in range(terms):
        k = rng.randint(0, degree)
        parts.append(mul(rand_coeff(rng), *[rng.choice(pool) for _ in range(k)]))
    return add(*parts)


def rand_lagrangian(rng: random.Random, n: int, m: int, degree: int = 2, terms: int = 4, order: int = 1) -> Expr:
    """Polynomial Lagrangian of the given order; retried until it mentions a jet of that order."""
    pool = atoms(n, m, order)
    while True:
        f = rand_poly(rng, pool, degree, terms)
        if max_jet_order(f) == order:
            return f


def rand_linear_top(rng: random.Random, m: int = 1) -> tuple:
    """``(f, R)``: affine in the top jets ``w^j_R`` with coefficients of order <= R - 2."""
    R = rng.choice((2, 3))
    low = [x(1)] + [w(j, *([1] * r)) for j in range(1, m + 1) for r in range(0, R - 1)]
    mid = [x(1)] + [w(j, *([1] * r)) for j in range(1, m + 1) for r in range(0, R)]
    parts = []
    for j in range(1, m + 1):
        coef = rand_poly(rng, low, degree=2, terms=2)
        if coef.is_zero_literal():
            coef = x(1)
        parts.append(mul(coef, w(j, *([1] * R))))
    parts.append(rand_poly(rng, mid, degree=2, terms=3))
    return add(*parts), R
