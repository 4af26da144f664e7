"""Dense univariate polynomials over Q, as tuples of Fractions in ascending
degree with no trailing zeros.  The zero polynomial is the empty tuple."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

QPoly = tuple[Fraction, ...]


def make(coeffs: Iterable) -> QPoly:
    out = [Fraction(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def degree(f: QPoly) -> int:
    """Degree, with -1 for the zero polynomial."""
    return len(f) - 1


def add(f: QPoly, g: QPoly) -> QPoly:
    n = max(len(f), len(g))
    return make(
        (f[i] if i < len(f) else 0) + (g[i] if i < len(g) else 0) for i in range(n)
    )


def neg(f: QPoly) -> QPoly:
    return tuple(-c for c in f)


def sub(f: QPoly, g: QPoly) -> QPoly:
    return add(f, neg(g))


def mul(f: QPoly, g: QPoly) -> QPoly:
    if not f or not g:
        return ()
    out = [Fraction(0)] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] += a * b
    return make(out)


def scale(f: QPoly, c) -> QPoly:
    return make(a * c for a in f)


def monomial(n: int, c=1) -> QPoly:
    return make([0] * n + [c])


def divmod_(f: QPoly, g: QPoly) -> tuple[QPoly, QPoly]:
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(f)
    quot = [Fraction(0)] * max(len(f) - len(g) + 1, 0)
    lead = g[-1]
    for k in range(len(f) - len(g), -1, -1):
        c = rem[k + len(g) - 1] / lead
        quot[k] = c
        if c:
            for j, b in enumerate(g):
                rem[k + j] -= c * b
    return make(quot), make(rem[: len(g) - 1])


def monic(f: QPoly) -> QPoly:
    return scale(f, 1 / f[-1]) if f else f


def gcd(f: QPoly, g: QPoly) -> QPoly:
    """Monic gcd (zero when both inputs are zero)."""
    while g:
        f, g = g, divmod_(f, g)[1]
    return monic(f)


def derivative(f: QPoly) -> QPoly:
    return make(i * c for i, c in enumerate(f) if i)


def evaluate(f: QPoly, x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(f):
        acc = acc * x + c
    return acc


def determinant(rows: Sequence[Sequence]) -> Fraction:
    """Exact determinant by Gaussian elimination over Q."""
    m = [[Fraction(x) for x in row] for row in rows]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] / m[col][col]
            if factor:
                for c in range(col, n):
                    m[r][c] -= factor * m[col][c]
    return det


def sylvester(f: Sequence, g: Sequence) -> list[list]:
    """Sylvester matrix of two nonzero polynomials (ascending coefficients)."""
    m, n = len(f) - 1, len(g) - 1
    size = m + n
    rows = []
    for i in range(n):
        rows.append([0] * i + list(reversed(f)) + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + list(reversed(g)) + [0] * (size - n - 1 - i))
    return rows


def resultant(f: Sequence, g: Sequence) -> Fraction:
    f, g = make(f), make(g)
    if not f or not g:
        raise ValueError("resultant of a zero polynomial")
    if degree(f) == 0 and degree(g) == 0:
        return Fraction(1)
    return determinant(sylvester(f, g))


def interpolate(points: Sequence[tuple]) -> QPoly:
    """Lagrange interpolation through (x, y) pairs with distinct x."""
    result: QPoly = ()
    for i, (xi, yi) in enumerate(points):
        basis: QPoly = (Fraction(1),)
        denom = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j != i:
                basis = mul(basis, make([-xj, 1]))
                denom *= xi - xj
        result = add(result, scale(basis, Fraction(yi) / denom))
    return result


def to_text(f: QPoly, var: str = "L") -> str:
    if not f:
        return "0"
    parts = []
    for i in range(len(f) - 1, -1, -1):
        c = f[i]
        if not c:
            continue
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if i == 0:
            body = str(a)
        else:
            mono = var if i == 1 else f"{var}^{i}"
            body = mono if a == 1 else f"{a}*{mono}"
        parts.append((sign, body))
    first_sign, first = parts[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text
