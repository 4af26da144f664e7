"""Quantifier elimination for the group-sort (Presburger) fragment.

Elimination follows Cooper: atoms are normalised so the eliminated variable
has coefficient +-1, and an existential is replaced by a finite disjunction
over least-witness candidates ``b + j`` (``b`` a lower bound, ``1 <= j <=
delta``) plus the unbounded-below case.  Congruences ``(divides d t)`` are
kept in the output, which is what makes the theory closed under elimination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Union

from . import formula as F
from .formula import Sort


class NotPresburgerError(F.FormulaError):
    pass


# ---------------------------------------------------------------------------
# Linear forms and the internal quantifier-free representation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lin:
    """sum(c * v) + const over integer coefficients, kept sorted by name."""

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def make(coeffs: dict[str, int], const: int = 0) -> Lin:
        return Lin(tuple(sorted((v, c) for v, c in coeffs.items() if c)), const)

    @staticmethod
    def var(name: str) -> Lin:
        return Lin(((name, 1),), 0)

    def as_dict(self) -> dict[str, int]:
        return dict(self.coeffs)

    def coef(self, name: str) -> int:
        for v, c in self.coeffs:
            if v == name:
                return c
        return 0

    @property
    def is_constant(self) -> bool:
        return not self.coeffs

    def __add__(self, other: Lin) -> Lin:
        d = self.as_dict()
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return Lin.make(d, self.const + other.const)

    def __neg__(self) -> Lin:
        return self.scale(-1)

    def __sub__(self, other: Lin) -> Lin:
        return self + (-other)

    def scale(self, k: int) -> Lin:
        return Lin(tuple((v, c * k) for v, c in self.coeffs if c * k), self.const * k)

    def shift(self, k: int) -> Lin:
        return Lin(self.coeffs, self.const + k)

    def without(self, name: str) -> Lin:
        return Lin(tuple((v, c) for v, c in self.coeffs if v != name), self.const)

    def substitute(self, name: str, value: Lin) -> Lin:
        c = self.coef(name)
        if not c:
            return self
        return self.without(name) + value.scale(c)


@dataclass(frozen=True)
class PLt:
    lin: Lin  # lin < 0


@dataclass(frozen=True)
class PEq:
    lin: Lin  # lin = 0


@dataclass(frozen=True)
class PDvd:
    modulus: int
    lin: Lin
    positive: bool = True


@dataclass(frozen=True)
class POpaque:
    """An atom outside the group sort, constant with respect to elimination."""

    formula: F.Formula
    positive: bool = True


@dataclass(frozen=True)
class PAnd:
    parts: tuple = ()


@dataclass(frozen=True)
class POr:
    parts: tuple = ()


PNode = Union[PLt, PEq, PDvd, POpaque, PAnd, POr]
TT = PAnd(())
FF = POr(())


def _simplify_atom(a: PNode) -> PNode:
    if isinstance(a, PLt):
        lin = a.lin
        if lin.is_constant:
            return TT if lin.const < 0 else FF
        g = math.gcd(*(c for _, c in lin.coeffs))
        if g > 1:
            # g*s + k < 0  <=>  s + floor(k/g) < 0
            lin = Lin(tuple((v, c // g) for v, c in lin.coeffs), lin.const // g)
        return PLt(lin)
    if isinstance(a, PEq):
        lin = a.lin
        if lin.is_constant:
            return TT if lin.const == 0 else FF
        g = math.gcd(*(c for _, c in lin.coeffs))
        if lin.const % g:
            return FF
        lin = Lin(tuple((v, c // g) for v, c in lin.coeffs), lin.const // g)
        if lin.coeffs[0][1] < 0:
            lin = -lin
        return PEq(lin)
    if isinstance(a, PDvd):
        d = a.modulus
        lin = Lin.make({v: c % d for v, c in a.lin.coeffs}, a.lin.const % d)
        if lin.is_constant:
            return TT if (lin.const == 0) == a.positive else FF
        g = math.gcd(d, lin.const, *(c for _, c in lin.coeffs))
        if g > 1:
            d //= g
            lin = Lin(tuple((v, c // g) for v, c in lin.coeffs), lin.const // g)
        return PDvd(d, lin, a.positive)
    return a


def mk_and(parts: Iterable[PNode]) -> PNode:
    out: dict[PNode, None] = {}
    for p in parts:
        if isinstance(p, PAnd):
            for q in p.parts:
                out[q] = None
        elif p == FF:
            return FF
        else:
            out[p] = None
    if FF in out:
        return FF
    items = tuple(out)
    return items[0] if len(items) == 1 else PAnd(items)


def mk_or(parts: Iterable[PNode]) -> PNode:
    out: dict[PNode, None] = {}
    for p in parts:
        if isinstance(p, POr):
            for q in p.parts:
                out[q] = None
        elif p == TT:
            return TT
        else:
            out[p] = None
    if TT in out:
        return TT
    items = tuple(out)
    return items[0] if len(items) == 1 else POr(items)


def negate(p: PNode) -> PNode:
    if isinstance(p, PLt):
        return _simplify_atom(PLt((-p.lin).shift(-1)))
    if isinstance(p, PEq):
        return mk_or([_simplify_atom(PLt(p.lin)), _simplify_atom(PLt(-p.lin))])
    if isinstance(p, PDvd):
        return PDvd(p.modulus, p.lin, not p.positive)
    if isinstance(p, POpaque):
        return POpaque(p.formula, not p.positive)
    if isinstance(p, PAnd):
        return mk_or(negate(q) for q in p.parts)
    return mk_and(negate(q) for q in p.parts)


def map_atoms(p: PNode, fn: Callable[[PNode], PNode]) -> PNode:
    if isinstance(p, PAnd):
        return mk_and(map_atoms(q, fn) for q in p.parts)
    if isinstance(p, POr):
        return mk_or(map_atoms(q, fn) for q in p.parts)
    return fn(p)


def atoms(p: PNode) -> Iterable[PNode]:
    if isinstance(p, (PAnd, POr)):
        for q in p.parts:
            yield from atoms(q)
    else:
        yield p


def _atom_lin(a: PNode) -> Lin | None:
    return a.lin if isinstance(a, (PLt, PEq, PDvd)) else None


def substitute(p: PNode, name: str, value: Lin) -> PNode:
    def sub(a: PNode) -> PNode:
        if isinstance(a, PLt):
            return _simplify_atom(PLt(a.lin.substitute(name, value)))
        if isinstance(a, PEq):
            return _simplify_atom(PEq(a.lin.substitute(name, value)))
        if isinstance(a, PDvd):
            return _simplify_atom(PDvd(a.modulus, a.lin.substitute(name, value), a.positive))
        return a

    return map_atoms(p, sub)


def cooper(name: str, phi: PNode) -> PNode:
    """Quantifier-free equivalent of (exists name. phi)."""
    involved = [a for a in atoms(phi) if _atom_lin(a) is not None and _atom_lin(a).coef(name)]
    if not involved:
        return phi

    scale = math.lcm(*(abs(a.lin.coef(name)) for a in involved))

    def unit_coefficient(a: PNode) -> PNode:
        c = a.lin.coef(name) if _atom_lin(a) is not None else 0
        if not c:
            return a
        k = scale // abs(c)
        lin = Lin.make({**a.lin.scale(k).as_dict(), name: 1 if c > 0 else -1}, a.lin.const * k)
        if isinstance(a, PLt):
            return PLt(lin)
        if isinstance(a, PEq):
            return PEq(lin)
        return PDvd(a.modulus * k, lin, a.positive)

    body = map_atoms(phi, unit_coefficient)
    if scale > 1:
        body = mk_and([body, PDvd(scale, Lin.var(name))])

    delta = 1
    lower: dict[Lin, None] = {}
    upper: dict[Lin, None] = {}
    for a in atoms(body):
        lin = _atom_lin(a)
        if lin is None or not lin.coef(name):
            continue
        c = lin.coef(name)
        rest = lin.without(name)
        if isinstance(a, PDvd):
            delta = math.lcm(delta, a.modulus)
        elif isinstance(a, PLt):
            if c > 0:
                upper[-rest] = None  # x < -rest
            else:
                lower[rest] = None  # rest < x
        else:
            value = rest.scale(-c)  # x = -c*rest
            lower[value.shift(-1)] = None
            upper[value.shift(1)] = None

    def at_infinity(sign: int) -> Callable[[PNode], PNode]:
        def fn(a: PNode) -> PNode:
            lin = _atom_lin(a)
            if lin is None or not lin.coef(name) or isinstance(a, PDvd):
                return a
            if isinstance(a, PEq):
                return FF
            # as x -> sign*inf, c*x + t < 0 holds iff c*sign < 0
            return TT if lin.coef(name) * sign < 0 else FF

        return fn

    disjuncts: list[PNode] = []
    if len(lower) <= len(upper):
        limit = map_atoms(body, at_infinity(-1))
        disjuncts += [substitute(limit, name, Lin((), j)) for j in range(1, delta + 1)]
        for b in lower:
            disjuncts += [substitute(body, name, b.shift(j)) for j in range(1, delta + 1)]
    else:
        limit = map_atoms(body, at_infinity(+1))
        disjuncts += [substitute(limit, name, Lin((), -j)) for j in range(1, delta + 1)]
        for a in upper:
            disjuncts += [substitute(body, name, a.shift(-j)) for j in range(1, delta + 1)]
    return mk_or(disjuncts)


# ---------------------------------------------------------------------------
# Conversion between Formula and the internal representation
# ---------------------------------------------------------------------------


class _Abstraction:
    """Maps non-Presburger group subterms (ord t) to fresh group variables."""

    def __init__(self, f: F.Formula):
        used = [int(n[1:]) for n, _ in _all_names(f) if n.startswith("m")]
        self.next_index = max(used, default=-1) + 1
        self.by_term: dict[F.Term, str] = {}
        self.by_name: dict[str, F.Term] = {}

    def name_for(self, term: F.Term) -> str:
        if term not in self.by_term:
            name = f"m{self.next_index}"
            self.next_index += 1
            self.by_term[term] = name
            self.by_name[name] = term
        return self.by_term[term]


def _all_names(f: F.Formula) -> list[tuple[str, Sort]]:
    return [(n.name, n.sort) for n in F.subterms(f) if isinstance(n, F.Var)]


def to_lin(t: F.Term, abstraction: _Abstraction | None = None) -> Lin:
    if isinstance(t, F.Var):
        if t.sort is not Sort.GROUP:
            raise NotPresburgerError(f"{t.sort.value} variable {t} in a Presburger term")
        return Lin.var(t.name)
    if isinstance(t, F.Lit):
        return Lin((), t.value)
    if isinstance(t, F.Add):
        return to_lin(t.left, abstraction) + to_lin(t.right, abstraction)
    if isinstance(t, F.Neg):
        return -to_lin(t.arg, abstraction)
    if isinstance(t, F.Mul):
        if F.is_ground(t.left):
            return to_lin(t.right, abstraction).scale(F.ground_value(t.left))
        return to_lin(t.left, abstraction).scale(F.ground_value(t.right))
    if isinstance(t, F.Ord) and abstraction is not None:
        return Lin.var(abstraction.name_for(t))
    raise NotPresburgerError(f"{t} is not a Presburger term")


def _convert(f: F.Formula, abstraction: _Abstraction | None) -> PNode:
    if isinstance(f, F.Eq):
        if f.sort is not Sort.GROUP:
            if abstraction is None:
                raise NotPresburgerError(f"{f.sort.value}-sort atom {f}")
            return POpaque(f)
        return _simplify_atom(PEq(to_lin(f.left, abstraction) - to_lin(f.right, abstraction)))
    if isinstance(f, F.Lt):
        return _simplify_atom(PLt(to_lin(f.left, abstraction) - to_lin(f.right, abstraction)))
    if isinstance(f, F.Divides):
        return _simplify_atom(PDvd(f.modulus, to_lin(f.term, abstraction)))
    if isinstance(f, F.And):
        return mk_and([_convert(f.left, abstraction), _convert(f.right, abstraction)])
    if isinstance(f, F.Or):
        return mk_or([_convert(f.left, abstraction), _convert(f.right, abstraction)])
    if isinstance(f, F.Not):
        return negate(_convert(f.arg, abstraction))
    if isinstance(f, (F.Forall, F.Exists)):
        if f.var.sort is not Sort.GROUP:
            if abstraction is None:
                raise NotPresburgerError(f"{f.var.sort.value}-sort quantifier in {f}")
            bound_group = {n for n, s in F.free_variables(f) if s is Sort.GROUP}
            if bound_group:
                raise NotPresburgerError(
                    f"{f} mentions group variables {sorted(bound_group)} under a "
                    f"{f.var.sort.value} quantifier"
                )
            return POpaque(_eliminate_mixed(f, abstraction))
        body = _convert(f.body, abstraction)
        if isinstance(f, F.Exists):
            return cooper(f.var.name, body)
        return negate(cooper(f.var.name, negate(body)))
    raise NotPresburgerError(f"unknown node {f!r}")


def _lin_side(coeffs: list[tuple[str, int]], const: int, abstraction) -> F.Term | None:
    """Sum of positive coefficient terms, None when empty."""
    terms: list[F.Term] = []
    for v, c in coeffs:
        base = abstraction.by_name[v] if abstraction and v in abstraction.by_name else F.Var(v)
        terms.append(base if c == 1 else F.Mul(F.Lit(c), base))
    if const:
        terms.append(F.Lit(const))
    if not terms:
        return None
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = F.Add(t, out)
    return out


def _split(lin: Lin, abstraction) -> tuple[F.Term, F.Term]:
    pos = [(v, c) for v, c in lin.coeffs if c > 0]
    neg = [(v, -c) for v, c in lin.coeffs if c < 0]
    left = _lin_side(pos, max(lin.const, 0), abstraction) or F.Lit(0)
    right = _lin_side(neg, max(-lin.const, 0), abstraction) or F.Lit(0)
    return left, right


def to_formula(p: PNode, abstraction: _Abstraction | None = None) -> F.Formula:
    if isinstance(p, PLt):
        return F.Lt(*_split(p.lin, abstraction))
    if isinstance(p, PEq):
        return F.Eq(*_split(p.lin, abstraction))
    if isinstance(p, PDvd):
        left, right = _split(p.lin, abstraction)
        if right == F.Lit(0):
            term = left
        elif left == F.Lit(0):
            term = right
        else:
            term = F.Add(left, F.Neg(right))
        atom = F.Divides(p.modulus, term)
        return atom if p.positive else F.Not(atom)
    if isinstance(p, POpaque):
        return p.formula if p.positive else F.Not(p.formula)
    if isinstance(p, PAnd):
        return F.conj(*(to_formula(q, abstraction) for q in p.parts))
    return F.disj(*(to_formula(q, abstraction) for q in p.parts))


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def check_presburger(f: F.Formula) -> None:
    for node in F.subterms(f):
        if isinstance(node, (F.Ord, F.Ac)):
            raise NotPresburgerError(f"{node} is outside the group-sort fragment")
        if isinstance(node, F.Var) and node.sort is not Sort.GROUP:
            raise NotPresburgerError(f"{node.sort.value} variable {node} in a Presburger formula")
        if isinstance(node, F.Eq) and node.sort is not Sort.GROUP:
            raise NotPresburgerError(f"{node.sort.value}-sort atom {node}")


def is_presburger(f: F.Formula) -> bool:
    try:
        check_presburger(f)
    except NotPresburgerError:
        return False
    return True


def eliminate_internal(f: F.Formula) -> PNode:
    check_presburger(f)
    return _convert(f, None)


def eliminate(f: F.Formula) -> F.Formula:
    """Quantifier-free formula equivalent to ``f`` over the integers."""
    return to_formula(eliminate_internal(f))


def decide(f: F.Formula) -> bool:
    """Truth value of a closed Presburger sentence."""
    free = F.free_variables(f)
    if free:
        raise NotPresburgerError(f"decide needs a sentence; free variables {[n for n, _ in free]}")
    result = eliminate_internal(f)
    if result == TT:
        return True
    if result == FF:
        return False
    raise AssertionError(f"closed formula did not reduce to a constant: {result}")


def _eliminate_mixed(f: F.Formula, abstraction: _Abstraction) -> F.Formula:
    if isinstance(f, (F.Forall, F.Exists)) and f.var.sort is Sort.GROUP:
        return to_formula(_convert(f, abstraction), abstraction)
    if isinstance(f, (F.Forall, F.Exists)):
        return type(f)(f.var, _eliminate_mixed(f.body, abstraction))
    if isinstance(f, (F.And, F.Or)):
        return type(f)(_eliminate_mixed(f.left, abstraction), _eliminate_mixed(f.right, abstraction))
    if isinstance(f, F.Not):
        return F.Not(_eliminate_mixed(f.arg, abstraction))
    return f


def eliminate_group_quantifiers(f: F.Formula) -> F.Formula:
    """Remove group-sort quantifiers from a formula of the full language.

    ``ord`` subterms are abstracted as fresh group variables for the duration
    of the elimination and atoms of the other sorts are carried along
    unchanged; field and residue quantifiers are left in place.
    """
    return _eliminate_mixed(f, _Abstraction(f))


def holds(p: PNode, env: dict[str, int]) -> bool:
    """Truth of a quantifier-free internal formula at an integer point."""

    def value(lin: Lin) -> int:
        return lin.const + sum(c * env[v] for v, c in lin.coeffs)

    if isinstance(p, PLt):
        return value(p.lin) < 0
    if isinstance(p, PEq):
        return value(p.lin) == 0
    if isinstance(p, PDvd):
        return (value(p.lin) % p.modulus == 0) == p.positive
    if isinstance(p, PAnd):
        return all(holds(q, env) for q in p.parts)
    if isinstance(p, POr):
        return any(holds(q, env) for q in p.parts)
    raise NotPresburgerError(f"cannot evaluate opaque atom {p.formula}")
