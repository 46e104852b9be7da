"""Exact rational matrix helpers (thin wrappers over sympy matrices)."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import sympy

from .errors import ValidationError


def _to_sympy(M: Sequence[Sequence]) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(Fraction(v).numerator, Fraction(v).denominator)
                          for v in row] for row in M])


def _from_sympy(M: sympy.Matrix) -> list[list[Fraction]]:
    return [[Fraction(int(M[i, j].p), int(M[i, j].q)) for j in range(M.cols)] for i in range(M.rows)]


def det(M) -> Fraction:
    if not M:
        return Fraction(1)
    d = _to_sympy(M).det()
    return Fraction(int(d.p), int(d.q))


def inverse(M) -> list[list[Fraction]]:
    S = _to_sympy(M)
    if S.rows != S.cols or S.det() == 0:
        raise ValidationError("matrix is not invertible")
    return _from_sympy(S.inv())


def rank(M) -> int:
    if not M or not M[0]:
        return 0
    return _to_sympy(M).rank()


def nullspace(M) -> list[list[Fraction]]:
    """Basis of the kernel, as a list of column vectors."""
    return [[Fraction(int(v.p), int(v.q)) for v in vec] for vec in _to_sympy(M).nullspace()]


def matmul(A, B) -> list[list[Fraction]]:
    return [[sum((A[i][k] * B[k][j] for k in range(len(B))), Fraction(0))
             for j in range(len(B[0]))] for i in range(len(A))]


def transpose(A) -> list[list]:
    return [list(r) for r in zip(*A)]


def identity(n: int) -> list[list[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
