"""Symbolic volumes as rational functions in the Lefschetz symbol L.

This is the fragment of the localised, completed Grothendieck ring that the
volume computations here need: every residue count in scope is a polynomial
in L with rational coefficients, and every convergent series is a finite sum
of geometric series, so Q(L) with exact closed forms is enough.  Specialising
L to q recovers the p-adic value.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from . import poly as P

NEG_INFINITY = -math.inf


@dataclass(frozen=True)
class MotiveValue:
    """A reduced fraction num/den of polynomials in L; den is monic."""

    num: P.QPoly
    den: P.QPoly

    def __post_init__(self) -> None:
        num, den = P.make(self.num), P.make(self.den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if num:
            g = P.gcd(num, den)
            if P.degree(g) > 0:
                num, den = P.divmod_(num, g)[0], P.divmod_(den, g)[0]
        else:
            den = (Fraction(1),)
        lead = den[-1]
        object.__setattr__(self, "num", P.scale(num, 1 / lead))
        object.__setattr__(self, "den", P.scale(den, 1 / lead))

    @classmethod
    def const(cls, c) -> MotiveValue:
        return cls(P.make([c]), (Fraction(1),))

    @classmethod
    def L(cls) -> MotiveValue:
        return cls(P.make([0, 1]), (Fraction(1),))

    @classmethod
    def from_poly(cls, coeffs) -> MotiveValue:
        return cls(P.make(coeffs), (Fraction(1),))

    @staticmethod
    def _coerce(other) -> MotiveValue:
        if isinstance(other, MotiveValue):
            return other
        if isinstance(other, (int, Fraction)):
            return MotiveValue.const(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __add__(self, other: Operand) -> MotiveValue:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        num = P.add(P.mul(self.num, other.den), P.mul(other.num, self.den))
        return MotiveValue(num, P.mul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self) -> MotiveValue:
        return MotiveValue(P.neg(self.num), self.den)

    def __sub__(self, other: Operand) -> MotiveValue:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other: Operand) -> MotiveValue:
        return (-self) + other

    def __mul__(self, other: Operand) -> MotiveValue:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return MotiveValue(P.mul(self.num, other.num), P.mul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other: Operand) -> MotiveValue:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.num:
            raise ZeroDivisionError("division by the zero motive")
        return MotiveValue(P.mul(self.num, other.den), P.mul(self.den, other.num))

    def __rtruediv__(self, other: Operand) -> MotiveValue:
        return self._coerce(other) / self

    def __pow__(self, n: int) -> MotiveValue:
        if n < 0:
            return MotiveValue.const(1) / (self ** -n)
        out = MotiveValue.const(1)
        for _ in range(n):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not self.num

    def __str__(self) -> str:
        num = P.to_text(self.num)
        if self.den == (Fraction(1),):
            return num
        den = P.to_text(self.den)
        wrap = lambda s: s if re.fullmatch(r"L(\^\d+)?|\d+", s) else f"({s})"
        return f"{wrap(num)}/{wrap(den)}"

    def to_json(self) -> dict:
        return {"num": [str(c) for c in self.num], "den": [str(c) for c in self.den]}

    @classmethod
    def from_json(cls, data: dict) -> MotiveValue:
        return cls(P.make(Fraction(c) for c in data["num"]), P.make(Fraction(c) for c in data["den"]))


Operand = Union[MotiveValue, int, Fraction]
L = MotiveValue.L()
ZERO = MotiveValue.const(0)
ONE = MotiveValue.const(1)


def mv_arith(op: str, a: MotiveValue, b: MotiveValue) -> MotiveValue:
    if op == "+":
        return a + b
    if op in ("-", "−"):
        return a - b
    if op in ("*", "×"):
        return a * b
    if op in ("/", "÷"):
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def geometric_sum(d: int, e: int) -> MotiveValue:
    """Closed form of sum_{l >= 0} L^(-d*l - e) = L^(-e) / (1 - L^(-d)).

    Converges in the dimension filtration only for d >= 1.
    """
    if d < 1:
        raise ValueError(f"geometric series with step {d} does not converge")
    return L ** (-e) / (1 - L ** (-d))


def specialize(v: MotiveValue, q) -> Fraction:
    """Evaluate at L = q."""
    q = Fraction(q)
    den = P.evaluate(v.den, q)
    if den == 0:
        raise ZeroDivisionError(f"{v} has a pole at L = {q}")
    return P.evaluate(v.num, q) / den


def filtration_degree(v: MotiveValue) -> int | float:
    """Virtual dimension deg(num) - deg(den); -inf for zero.  v lies in the
    m-th filtration step iff this is <= -m."""
    if v.is_zero():
        return NEG_INFINITY
    return P.degree(v.num) - P.degree(v.den)
