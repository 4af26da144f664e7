"""Motivic volumes of one-variable definable subsets of Z_p, and the check
that they specialise to the p-adic volumes.

The fragment: one free field variable x; atoms on ord(x) are Presburger
(group quantifiers allowed), atoms on ac(x) come from a small catalog
(``ac x = c`` and ``ac x is a square``), combined with and/or/not.  A formula
is decomposed into cells {x : ord x in S, ac x satisfies C} with S eventually
periodic.  On the level ord x = l the angular component is equidistributed
over the q - 1 units, each class of volume L^(-l-1), so a cell contributes
count(C) * sum_{l in S} L^(-(a+1)l - 1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from . import formula as F
from . import padic
from . import presburger as PB
from .formula import Sort
from .motive import ZERO, L, MotiveValue, geometric_sum, specialize


class OutsideFragmentError(F.FormulaError):
    pass


# ---------------------------------------------------------------------------
# Residue conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnyResidue:
    def __str__(self) -> str:
        return "any"


@dataclass(frozen=True)
class NonZero:
    def __str__(self) -> str:
        return "nonzero"


@dataclass(frozen=True)
class EqualsConst:
    value: int

    def __str__(self) -> str:
        return f"= {self.value}"


@dataclass(frozen=True)
class NonzeroSquare:
    def __str__(self) -> str:
        return "nonzero-square"


@dataclass(frozen=True)
class RAnd:
    left: ResidueCondition
    right: ResidueCondition

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class ROr:
    left: ResidueCondition
    right: ResidueCondition

    def __str__(self) -> str:
        return f"({self.left} or {self.right})"


@dataclass(frozen=True)
class RNot:
    arg: ResidueCondition

    def __str__(self) -> str:
        return f"not {self.arg}"


ResidueCondition = Union[AnyResidue, NonZero, EqualsConst, NonzeroSquare, RAnd, ROr, RNot]


def _leaves(c: ResidueCondition):
    if isinstance(c, (RAnd, ROr)):
        yield from _leaves(c.left)
        yield from _leaves(c.right)
    elif isinstance(c, RNot):
        yield from _leaves(c.arg)
    elif isinstance(c, (AnyResidue, NonZero, EqualsConst, NonzeroSquare)):
        yield c
    else:
        raise OutsideFragmentError(f"residue condition {c!r} is not in the catalog")


def _holds(c: ResidueCondition, point) -> bool:
    """Truth of ``c`` on a partition piece described by ``point``: either
    ("zero",), ("const", v, is_square) or ("rest", is_square)."""
    if isinstance(c, AnyResidue):
        return True
    if isinstance(c, NonZero):
        return point[0] != "zero"
    if isinstance(c, EqualsConst):
        if c.value == 0:
            return point[0] == "zero"
        return point[0] == "const" and point[1] == c.value
    if isinstance(c, NonzeroSquare):
        return point[0] != "zero" and point[-1]
    if isinstance(c, RAnd):
        return _holds(c.left, point) and _holds(c.right, point)
    if isinstance(c, ROr):
        return _holds(c.left, point) or _holds(c.right, point)
    return not _holds(c.arg, point)


def prime_factors(n: int) -> set[int]:
    n = abs(n)
    out = set()
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.add(d)
            n //= d
        d += 1
    if n > 1:
        out.add(n)
    return out


def _is_perfect_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def residue_count(c: ResidueCondition) -> tuple[MotiveValue, frozenset[int]]:
    """#{xi in F_q : c(xi)} as an element of Q(L), valid for every odd prime
    outside the returned bad set.

    F_q splits into 0, the named nonzero constants, and the remaining
    squares and non-squares; every catalog condition is constant on each
    piece, so the count is a sum of piece sizes.
    """
    leaves = list(_leaves(c))
    consts = sorted({leaf.value for leaf in leaves if isinstance(leaf, EqualsConst) and leaf.value})
    uses_squares = any(isinstance(leaf, NonzeroSquare) for leaf in leaves)
    if uses_squares:
        for v in consts:
            if not _is_perfect_square(v):
                raise OutsideFragmentError(
                    f"whether {v} is a square mod p depends on p; the count is not a polynomial in L"
                )

    bad: set[int] = set()
    for v in consts:
        bad |= prime_factors(v)
    for u, v in itertools.combinations(consts, 2):
        bad |= prime_factors(u - v)
    bad.discard(2)

    half = (L - 1) / 2
    square_consts = sum(1 for v in consts if _is_perfect_square(v))
    pieces: list[tuple[tuple, MotiveValue]] = [(("zero",), MotiveValue.const(1))]
    pieces += [(("const", v, _is_perfect_square(v)), MotiveValue.const(1)) for v in consts]
    if uses_squares:
        pieces.append((("rest", True), half - square_consts))
        pieces.append((("rest", False), half - (len(consts) - square_consts)))
    else:
        pieces.append((("rest", False), L - 1 - len(consts)))

    total = ZERO
    for point, size in pieces:
        if _holds(c, point):
            total = total + size
    return total, frozenset(bad)


# ---------------------------------------------------------------------------
# Eventually periodic sets of levels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrdSet:
    """A subset of N: ``prefix`` below ``threshold`` plus, from the threshold
    on, the progressions r + period*j for r in ``starts``."""

    threshold: int
    period: int
    prefix: tuple[int, ...]
    starts: tuple[int, ...]

    def __contains__(self, level: int) -> bool:
        if level < 0:
            return False
        if level < self.threshold:
            return level in self.prefix
        return self.threshold + (level - self.threshold) % self.period in self.starts

    def is_empty(self) -> bool:
        return not self.prefix and not self.starts

    def weighted_sum(self, step: int) -> MotiveValue:
        """sum over l in the set of L^(-step*l)."""
        total = ZERO
        for level in self.prefix:
            total = total + L ** (-step * level)
        for r in self.starts:
            total = total + geometric_sum(step * self.period, step * r)
        return total

    @classmethod
    def from_node(cls, node: PB.PNode, name: str) -> OrdSet:
        threshold, period = 0, 1
        for atom in PB.atoms(node):
            if isinstance(atom, PB.PDvd):
                period = math.lcm(period, atom.modulus)
            elif isinstance(atom, (PB.PLt, PB.PEq)):
                c = abs(atom.lin.coef(name))
                if c:
                    threshold = max(threshold, abs(atom.lin.const) // c + 1)
            elif isinstance(atom, PB.POpaque):
                raise OutsideFragmentError(f"{atom.formula} survived into the level set")
        members = [l for l in range(threshold + period) if PB.holds(node, {name: l})]
        return cls(
            threshold,
            period,
            tuple(l for l in members if l < threshold),
            tuple(l for l in members if l >= threshold),
        )


# ---------------------------------------------------------------------------
# Cell decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    """{x : ord x in ord_set, ac x satisfies residue}; ``level_var`` names
    the group variable standing for ord x in ``ord_formula``."""

    ord_formula: F.Formula
    level_var: str
    ord_set: OrdSet
    residue: ResidueCondition

    def __str__(self) -> str:
        return f"{{{self.level_var} >= 0 : {self.ord_formula}}} x {{{self.residue}}}"


def _square_pattern(f: F.Formula, x: F.Var) -> bool:
    """(exists xi (= (* xi xi) (ac x))) in either orientation."""
    if not (isinstance(f, F.Exists) and f.var.sort is Sort.RESIDUE and isinstance(f.body, F.Eq)):
        return False
    xi = f.var
    sides = (f.body.left, f.body.right)
    return F.Mul(xi, xi) in sides and F.Ac(x) in sides


def _residue_atom(f: F.Formula, x: F.Var) -> ResidueCondition:
    if _square_pattern(f, x):
        return ROr(NonzeroSquare(), EqualsConst(0))
    if isinstance(f, F.Eq) and f.sort is Sort.RESIDUE:
        for a, b in ((f.left, f.right), (f.right, f.left)):
            if a == F.Ac(x) and F.is_ground(b):
                return EqualsConst(F.ground_value(b))
    raise OutsideFragmentError(f"residue atom {f} is outside the catalog")


def _scan(f: F.Formula, x: F.Var, found: dict) -> None:
    """Collect residue atoms; reject everything outside the fragment."""
    if isinstance(f, F.Eq) and f.sort is Sort.RESIDUE or _square_pattern(f, x):
        found.setdefault(f, _residue_atom(f, x))
        return
    if isinstance(f, F.Eq) and f.sort is Sort.FIELD:
        raise OutsideFragmentError(f"field equation {f} is outside the fragment")
    if isinstance(f, (F.Eq, F.Lt, F.Divides)):
        for node in F.subterms(f):
            if isinstance(node, F.Ord) and node.arg != x:
                raise OutsideFragmentError(f"{node}: only ord of the variable itself is allowed")
            if isinstance(node, F.Ac):
                raise OutsideFragmentError(f"{node} inside a group atom")
        return
    if isinstance(f, (F.And, F.Or)):
        _scan(f.left, x, found)
        _scan(f.right, x, found)
    elif isinstance(f, F.Not):
        _scan(f.arg, x, found)
    elif isinstance(f, (F.Forall, F.Exists)):
        if f.var.sort is not Sort.GROUP:
            raise OutsideFragmentError(f"{f.var.sort.value} quantifier in {f}")
        _scan(f.body, x, found)


def _specialise_atoms(f: F.Formula, x: F.Var, level: F.Var, truth: dict) -> F.Formula:
    """Replace residue atoms by TRUE/FALSE and ord x by the level variable."""
    if f in truth:
        return F.TRUE if truth[f] else F.FALSE
    if isinstance(f, (F.And, F.Or)):
        return type(f)(
            _specialise_atoms(f.left, x, level, truth), _specialise_atoms(f.right, x, level, truth)
        )
    if isinstance(f, F.Not):
        return F.Not(_specialise_atoms(f.arg, x, level, truth))
    if isinstance(f, (F.Forall, F.Exists)):
        return type(f)(f.var, _specialise_atoms(f.body, x, level, truth))
    return _replace_ord(f, F.Ord(x), level)


def _replace_ord(node, target, level):
    if node == target:
        return level
    if isinstance(node, (F.Add, F.Mul, F.Eq, F.Lt)):
        return type(node)(_replace_ord(node.left, target, level), _replace_ord(node.right, target, level))
    if isinstance(node, F.Neg):
        return F.Neg(_replace_ord(node.arg, target, level))
    if isinstance(node, F.Divides):
        return F.Divides(node.modulus, _replace_ord(node.term, target, level))
    return node


def _field_variable(f: F.Formula) -> F.Var:
    free = F.free_variables(f)
    field_vars = [n for n, s in free if s is Sort.FIELD]
    others = [n for n, s in free if s is not Sort.FIELD]
    if len(field_vars) != 1 or others:
        raise OutsideFragmentError(
            f"the fragment needs exactly one free field variable and nothing else free; got {free}"
        )
    return F.Var(field_vars[0])


def _conj(parts: list[ResidueCondition]) -> ResidueCondition:
    if not parts:
        return AnyResidue()
    out = parts[-1]
    for part in reversed(parts[:-1]):
        out = RAnd(part, out)
    return out


def _decompose(f: F.Formula) -> tuple[list[Cell], frozenset[int]]:
    x = _field_variable(f)
    found: dict[F.Formula, ResidueCondition] = {}
    _scan(f, x, found)
    used = [int(n.name[1:]) for n in F.subterms(f) if isinstance(n, F.Var) and n.sort is Sort.GROUP]
    level = F.Var(f"m{max(used, default=-1) + 1}")

    atoms = list(found)
    _, bad = residue_count(_conj([NonZero(), *found.values()]) if atoms else NonZero())
    cells = []
    for values in itertools.product((True, False), repeat=len(atoms)):
        truth = dict(zip(atoms, values))
        literals = [found[a] if v else RNot(found[a]) for a, v in truth.items()]
        residue = _conj([NonZero(), *literals])
        count, _ = residue_count(residue)
        if count.is_zero():
            continue
        node = PB.eliminate_internal(_specialise_atoms(f, x, level, truth))
        ord_set = OrdSet.from_node(node, level.name)
        if ord_set.is_empty():
            continue
        cells.append(Cell(PB.to_formula(node), level.name, ord_set, residue))
    return cells, bad


def cell_decompose(f: F.Formula) -> list[Cell]:
    """Pairwise disjoint cells covering {x in Z_p : f(x)} minus the null set {0}."""
    return _decompose(f)[0]


def motivic_monomial_integral(f: F.Formula, a: int) -> tuple[MotiveValue, frozenset[int]]:
    """Integral of |x|^a over the set defined by ``f``, in Q(L), with the
    primes at which the residue counts do not apply."""
    if a < 0:
        raise ValueError("exponent must be non-negative")
    cells, bad = _decompose(f)
    total = ZERO
    for cell in cells:
        count, _ = residue_count(cell.residue)
        total = total + count * L ** -1 * cell.ord_set.weighted_sum(a + 1)
    return total, bad


def motivic_volume(f: F.Formula) -> tuple[MotiveValue, frozenset[int]]:
    return motivic_monomial_integral(f, 0)


# ---------------------------------------------------------------------------
# Specialisation against enumeration
# ---------------------------------------------------------------------------


@dataclass
class CompareRecord:
    p: int
    symbolic: Fraction | None
    lower: Fraction | None
    upper: Fraction | None
    passed: bool
    skipped: bool = False
    reason: str = ""

    def to_json(self) -> dict:
        show = lambda v: None if v is None else str(v)
        out = {
            "p": self.p,
            "symbolic": show(self.symbolic),
            "lower": show(self.lower),
            "upper": show(self.upper),
            "pass": self.passed,
        }
        if self.skipped:
            out["skipped"] = True
            out["reason"] = self.reason
        return out


@dataclass
class CompareReport:
    motive: MotiveValue
    bad_primes: frozenset[int]
    records: list[CompareRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_json(self) -> dict:
        return {
            "motive": self.motive.to_json(),
            "motive_text": str(self.motive),
            "bad_primes": sorted(self.bad_primes),
            "records": [r.to_json() for r in self.records],
            "pass": self.passed,
        }


def numeric_bounds(f: F.Formula, a: int | None, ctx: padic.PadicContext) -> tuple[Fraction, Fraction]:
    """The enumeration side: group quantifiers eliminated, then bracketed."""
    g = PB.eliminate_group_quantifiers(f)
    if a is None:
        return padic.volume_bounds(g, [n for n, _ in F.free_variables(g)], ctx)
    return padic.monomial_integral_numeric(g, a, ctx)


def compare(
    f: F.Formula,
    exponent: int | None = None,
    primes: list[int] = (3, 5, 7),
    depth: int = 6,
    exclude: frozenset[int] | set[int] = frozenset(),
) -> CompareReport:
    """Specialise the symbolic value at L = p and check it lies in the
    numeric bracket at depth N (and equals it when the bracket is exact)."""
    motive, bad = motivic_monomial_integral(f, exponent or 0)
    report = CompareReport(motive, bad)
    for p in primes:
        if p % 2 == 0 or not padic.is_prime(p):
            raise ValueError(f"{p} is not an odd prime")
        if p in bad or p in exclude:
            why = "bad prime for the residue counts" if p in bad else "excluded"
            report.records.append(CompareRecord(p, None, None, None, True, True, why))
            continue
        value = specialize(motive, p)
        lower, upper = numeric_bounds(f, exponent, padic.PadicContext(p, depth))
        ok = lower <= value <= upper and (lower != upper or value == lower)
        report.records.append(CompareRecord(p, value, lower, upper, ok))
    return report
