"""Computable ingredients of equal-valuation orbital integrals.

Newton polygons of p-adic polynomials, the reduced characteristic
polynomial R over F_p of an equal-valuation characteristic polynomial,
affine point counts of y^2 = R(x^2) and of the family y^2 = x^4 + a x^2 + b,
resultants, and the support of the transfer-factor sign.

Point counts are affine: #{(x, y) in F_p^2 : y^2 = f(x)}.  No projective
model is chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from . import poly as P
from .padic import PadicApprox, PadicContext, PrecisionError, valuation


# ---------------------------------------------------------------------------
# Polynomials over F_p
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FpPoly:
    """Polynomial over F_p, ascending coefficients in [0, p), no trailing zeros."""

    p: int
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        c = [x % self.p for x in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def of(cls, coeffs: Sequence[int], p: int) -> FpPoly:
        return cls(p, tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.p
        return acc

    def __mul__(self, other: FpPoly) -> FpPoly:
        if not self.coeffs or not other.coeffs:
            return FpPoly(self.p, ())
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return FpPoly(self.p, tuple(out))

    def divmod(self, other: FpPoly) -> tuple[FpPoly, FpPoly]:
        if not other.coeffs:
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(self.coeffs)
        inv = pow(other.coeffs[-1], -1, self.p)
        n = len(other.coeffs)
        quot = [0] * max(len(rem) - n + 1, 0)
        for k in range(len(rem) - n, -1, -1):
            c = rem[k + n - 1] * inv % self.p
            quot[k] = c
            for j, b in enumerate(other.coeffs):
                rem[k + j] = (rem[k + j] - c * b) % self.p
        return FpPoly(self.p, tuple(quot)), FpPoly(self.p, tuple(rem[: n - 1]))

    def monic(self) -> FpPoly:
        if not self.coeffs:
            return self
        inv = pow(self.coeffs[-1], -1, self.p)
        return FpPoly(self.p, tuple(c * inv for c in self.coeffs))

    def derivative(self) -> FpPoly:
        return FpPoly(self.p, tuple(i * c for i, c in enumerate(self.coeffs) if i))

    def gcd(self, other: FpPoly) -> FpPoly:
        a, b = self, other
        while b.coeffs:
            a, b = b, a.divmod(b)[1]
        return a.monic()

    def is_separable(self) -> bool:
        """No repeated root over the algebraic closure."""
        return self.degree >= 0 and self.gcd(self.derivative()).degree == 0

    def to_list(self) -> list[int]:
        return list(self.coeffs)

    def __str__(self) -> str:
        return P.to_text(P.make(self.coeffs), "mu") + f" (mod {self.p})"


# ---------------------------------------------------------------------------
# p-adic polynomials and Newton polygons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QpPoly:
    """Polynomial with coefficients in Z_p known to finite precision (ascending)."""

    coeffs: tuple[PadicApprox, ...]

    @classmethod
    def from_ints(cls, coeffs: Sequence[int], ctx: PadicContext) -> QpPoly:
        coeffs = list(coeffs)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs:
            raise ValueError("zero polynomial")
        return cls(tuple(PadicApprox.from_int(c, ctx) for c in coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def p(self) -> int:
        return self.coeffs[0].p

    @property
    def depth(self) -> int:
        return self.coeffs[0].depth


@dataclass(frozen=True)
class NewtonPolygon:
    """(root valuation, multiplicity) pairs with strictly increasing valuations."""

    segments: tuple[tuple[Fraction, int], ...]

    @property
    def slopes(self) -> list[Fraction]:
        return [s for s, _ in self.segments]

    def to_json(self) -> list:
        return [{"slope": str(s), "multiplicity": m} for s, m in self.segments]


def newton_polygon(f: QpPoly) -> NewtonPolygon:
    """Lower convex hull of (i, ord c_i).  A hull edge of slope -s and width
    m means exactly m roots of valuation s; zero roots are not counted."""
    points = []
    for i, c in enumerate(f.coeffs):
        if c.exact_zero:
            continue
        if not c.ord_decided:
            raise PrecisionError(
                f"valuation of coefficient {i} is undecided at depth {c.depth}; increase depth"
            )
        points.append((i, c.ord()))
    if not points or points[-1][0] != f.degree:
        raise PrecisionError("leading coefficient must have decided valuation")

    hull: list[tuple[int, int]] = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] unless it lies strictly below the chord hull[-2] -> pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)

    segments = [
        (Fraction(y1 - y2, x2 - x1), x2 - x1) for (x1, y1), (x2, y2) in zip(hull, hull[1:])
    ]
    return NewtonPolygon(tuple(sorted(segments)))


# ---------------------------------------------------------------------------
# Strips and reduced characteristic polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StripParams:
    """Equal valuation r = ell/h with gcd(ell, h) = 1."""

    ell: int
    h: int

    def __post_init__(self) -> None:
        if self.h < 1:
            raise ValueError("h must be positive")
        if math.gcd(self.ell, self.h) != 1:
            raise ValueError(f"ell={self.ell} and h={self.h} are not coprime")

    @property
    def r(self) -> Fraction:
        return Fraction(self.ell, self.h)


def _is_even(f: QpPoly) -> bool:
    return all(c.exact_zero for c in f.coeffs[1::2])


def composed_power(coeffs: Sequence[int], e: int) -> P.QPoly:
    """The polynomial a^e * prod (mu - t^e) over the roots t of
    f = sum coeffs[i] lambda^i with leading coefficient a, obtained as the
    resultant Res_lambda(f(lambda), mu - lambda^e) interpolated in mu."""
    f = P.make(coeffs)
    d = P.degree(f)
    samples = []
    for mu in range(d + 1):
        g = P.make([mu] + [0] * (e - 1) + [-1])
        samples.append((mu, P.resultant(f, g)))
    return P.interpolate(samples)


def reduced_poly(P0: QpPoly, s: StripParams) -> FpPoly:
    """R over F_p whose roots are the reductions of t^h / p^ell, t running
    over the roots of P0 (for even P0 and even h, over one root of each
    +-pair, i.e. over the roots t^2 of Q with P0(lambda) = Q(lambda^2))."""
    polygon = newton_polygon(P0)
    if polygon.slopes != [s.r]:
        raise ValueError(
            f"Newton polygon slopes {[str(x) for x in polygon.slopes]} are not the single slope {s.r}"
        )
    if P0.coeffs[0].exact_zero:
        raise ValueError("P0 has a zero root")
    p, N = P0.p, P0.depth
    reps = [c.rep for c in P0.coeffs]
    if _is_even(P0) and s.h % 2 == 0:
        base, e = reps[0::2], s.h // 2
    else:
        base, e = reps, s.h
    d = len(base) - 1
    lead_val = e * P0.coeffs[-1].ord()
    needed = s.ell * d + lead_val + 2
    if N < needed:
        raise PrecisionError(f"depth {N} too small for the reduced polynomial; need at least {needed}")

    modulus = p**N
    composed = [int(c) % modulus for c in composed_power(base, e)]
    reduced = []
    for j, c in enumerate(composed):
        shift = s.ell * (d - j) + lead_val
        if c % p**shift:
            raise ValueError("coefficients do not match the equal-valuation slope")
        reduced.append((c // p**shift) % p)
    return FpPoly(p, tuple(reduced)).monic()


def strip_membership(P0: QpPoly, s: StripParams) -> tuple[bool, FpPoly | None]:
    """Whether all roots of P0 share valuation r with distinct nonzero
    reductions; returns R when they do."""
    if not _is_even(P0):
        raise ValueError("strip membership expects an even polynomial (roots in +- pairs)")
    if newton_polygon(P0).slopes != [s.r]:
        return False, None
    R = reduced_poly(P0, s)
    if R.is_separable() and R(0) != 0:
        return True, R
    return False, None


# ---------------------------------------------------------------------------
# Point counts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveCount:
    p: int
    affine: int
    smooth: bool

    def to_json(self) -> dict:
        return {"p": self.p, "affine": self.affine, "smooth": self.smooth}


def _square_counts(p: int) -> list[int]:
    """Number of y in F_p with y^2 = v, indexed by v."""
    table = [0] * p
    for y in range(p):
        table[y * y % p] += 1
    return table


def _check_odd_prime(p: int) -> None:
    from .padic import is_prime

    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"p must be an odd prime, got {p}")


def curve_point_count(R: FpPoly) -> CurveCount:
    """Affine points of y^2 = R(x^2) for quadratic R."""
    p = R.p
    _check_odd_prime(p)
    if R.degree != 2:
        raise ValueError(f"R must be quadratic, got degree {R.degree}")
    squares = _square_counts(p)
    count = sum(squares[R(x * x % p)] for x in range(p))
    return CurveCount(p, count, R.is_separable() and R(0) != 0)


def family_count(a: int, b: int, p: int) -> CurveCount:
    """Affine points of y^2 = x^4 + a x^2 + b over F_p."""
    _check_odd_prime(p)
    quartic = FpPoly(p, (b, 0, a, 0, 1))
    squares = _square_counts(p)
    count = sum(squares[quartic(x)] for x in range(p))
    return CurveCount(p, count, quartic.is_separable())


# ---------------------------------------------------------------------------
# Resultants and the transfer-factor support
# ---------------------------------------------------------------------------

PolyLike = Union[FpPoly, Sequence]


def resultant(f: PolyLike, g: PolyLike):
    """Sylvester resultant; an int in [0, p) over F_p, a Fraction over Q."""
    if isinstance(f, FpPoly) or isinstance(g, FpPoly):
        if not (isinstance(f, FpPoly) and isinstance(g, FpPoly)) or f.p != g.p:
            raise ValueError("both polynomials must live over the same F_p")
        if not f.coeffs or not g.coeffs:
            raise ValueError("resultant of a zero polynomial")
        return int(P.resultant(f.coeffs, g.coeffs)) % f.p
    if not P.make(f) or not P.make(g):
        raise ValueError("resultant of a zero polynomial")
    return P.resultant(f, g)


def _strip_zero_roots(coeffs: tuple) -> tuple:
    i = 0
    while i < len(coeffs) and coeffs[i] == 0:
        i += 1
    return coeffs[i:]


def transfer_support(PX: PolyLike, PY: PolyLike, PZ: PolyLike) -> bool:
    """True iff PX = lambda * PY0 * PZ0 (PY0, PZ0 the nonzero-root factors)
    and PX has no repeated root, i.e. resultant(PX, PX') != 0."""
    polys = (PX, PY, PZ)
    fp = [f for f in polys if isinstance(f, FpPoly)]
    if fp:
        p = fp[0].p
        if any(not isinstance(f, FpPoly) or f.p != p for f in polys):
            raise ValueError("mix of F_p and rational polynomials")
        px, py, pz = (tuple(f.coeffs) for f in polys)
        mul = lambda u, v: (FpPoly(p, u) * FpPoly(p, v)).coeffs
    else:
        px, py, pz = (P.make(f) for f in polys)
        mul = P.mul
    if not px or not py or not pz:
        raise ValueError("zero polynomial")
    if px[0] != 0:
        raise ValueError("PX must vanish at 0")
    expected = mul((0, 1), mul(_strip_zero_roots(py), _strip_zero_roots(pz)))
    if tuple(expected) != tuple(px):
        return False
    if fp:
        f = FpPoly(p, px)
        return resultant(f, f.derivative()) != 0 if f.derivative().coeffs else False
    return resultant(px, P.derivative(px)) != 0
