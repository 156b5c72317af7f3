"""Exact rational linear algebra on Fraction data, backed by sympy."""

from __future__ import annotations

import functools
from fractions import Fraction
from typing import Any, Sequence

import sympy

Rows = Sequence[Sequence[Any]]


def to_fraction(value: Any) -> Fraction:
    """Exact Fraction from int, Fraction, sympy Rational or a decimal string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, sympy.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, (str, float)):
        return Fraction(str(value))
    raise TypeError(f"cannot read {value!r} as an exact rational")


def is_exact(value: Any) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def matrix(rows: Rows) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) if isinstance(v, Fraction) else sympy.Integer(v)
                          for v in row] for row in rows])


def _rows(m: sympy.Matrix) -> list[list[Fraction]]:
    return [[to_fraction(m[i, j]) for j in range(m.cols)] for i in range(m.rows)]


def det(rows: Rows) -> Fraction:
    if not rows:
        return Fraction(1)
    return to_fraction(matrix(rows).det())


def inverse(rows: Rows) -> list[list[Fraction]]:
    return _rows(matrix(rows).inv())


def nullspace(rows: Rows) -> list[list[Fraction]]:
    return [[to_fraction(x) for x in vec] for vec in matrix(rows).nullspace()]


def rank(rows: Rows) -> int:
    return matrix(rows).rank()


def solve(rows: Rows, rhs: Sequence[Any]) -> list[Fraction] | None:
    """Exact solution of rows·x = rhs, or None when inconsistent."""
    a = matrix(rows)
    b = matrix([[v] for v in rhs])
    try:
        sol, params = a.gauss_jordan_solve(b)
    except ValueError:
        return None
    if params.shape[0]:
        sol = sol.subs({p: 0 for p in params})
    return [to_fraction(sol[i, 0]) for i in range(sol.rows)]


def matmul(a: Rows, b: Rows) -> list[list[Fraction]]:
    return _rows(matrix(a) * matrix(b))


def transpose(a: Rows) -> list[list[Any]]:
    return [list(col) for col in zip(*a)]


def as_integers(values: Sequence[Fraction]) -> list[int] | None:
    if all(Fraction(v).denominator == 1 for v in values):
        return [int(v) for v in values]
    return None


def integer_matrix(rows: Rows) -> list[list[int]] | None:
    out = []
    for row in rows:
        ints = as_integers(row)
        if ints is None:
            return None
        out.append(ints)
    return out


@functools.lru_cache(maxsize=None)
def bernoulli(k: int) -> Fraction:
    """Bernoulli number B_k (only even k and k=0 are used)."""
    return to_fraction(sympy.bernoulli(k))


@functools.lru_cache(maxsize=None)
def factorial(k: int) -> int:
    return int(sympy.factorial(k))
