"""Abstract syntax, s-expression grammar and sort checking for Pas's
three-sorted language of valued fields.

Variables are spelled ``x0, x1, ...`` (valued field), ``m0, m1, ...`` (value
group) and ``xi0, xi1, ...`` (residue field).  Integer literals are
polymorphic in the concrete syntax; the parser assigns them the sort demanded
by their context, defaulting to the group sort when an atom compares two
variable-free literal expressions.

Grammar::

    formula := atom | (and f f) | (or f f) | (not f)
             | (forall var f) | (exists var f)
    atom    := (= term term) | (< gterm gterm) | (divides nat gterm)
    term    := var | nat | (+ term term) | (* term term) | (- term)
             | (ord fterm) | (ac fterm)
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Union

import numpy as np


class FormulaError(ValueError):
    """Base class for errors raised while building or reading formulas."""


class ParseError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class SortError(FormulaError):
    pass


class Sort(enum.Enum):
    FIELD = "Field"
    GROUP = "Group"
    RESIDUE = "Residue"

    def __repr__(self) -> str:
        return f"Sort.{self.name}"


_NAME_RE = re.compile(r"^(xi|x|m)(\d+)$")
_PREFIX_SORT = {"x": Sort.FIELD, "m": Sort.GROUP, "xi": Sort.RESIDUE}


def sort_of_name(name: str) -> Sort:
    match = _NAME_RE.match(name)
    if match is None:
        raise SortError(f"{name!r} is not a variable name (expected x<i>, m<i> or xi<i>)")
    return _PREFIX_SORT[match.group(1)]


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self) -> None:
        sort_of_name(self.name)

    @property
    def sort(self) -> Sort:
        return sort_of_name(self.name)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Lit:
    """Decimal literal ``value`` read in ``sort`` (sugar for 1 + ... + 1)."""

    value: int
    sort: Sort = Sort.GROUP

    def __post_init__(self) -> None:
        if self.value < 0:
            raise SortError("literals are natural numbers; use (- n) for negatives")

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Add:
    left: Term
    right: Term

    def __post_init__(self) -> None:
        if self.left.sort is not self.right.sort:
            raise SortError(
                f"sum of {self.left.sort.value} and {self.right.sort.value} terms in {self}"
            )

    @property
    def sort(self) -> Sort:
        return self.left.sort

    def __str__(self) -> str:
        return f"(+ {self.left} {self.right})"


@dataclass(frozen=True)
class Mul:
    left: Term
    right: Term

    def __post_init__(self) -> None:
        if self.left.sort is not self.right.sort:
            raise SortError(
                f"product of {self.left.sort.value} and {self.right.sort.value} terms in {self}"
            )
        if self.left.sort is Sort.GROUP and not (is_ground(self.left) or is_ground(self.right)):
            raise SortError(f"group-sort product of two non-constant terms in {self}")

    @property
    def sort(self) -> Sort:
        return self.left.sort

    def __str__(self) -> str:
        return f"(* {self.left} {self.right})"


@dataclass(frozen=True)
class Neg:
    arg: Term

    @property
    def sort(self) -> Sort:
        return self.arg.sort

    def __str__(self) -> str:
        return f"(- {self.arg})"


@dataclass(frozen=True)
class Ord:
    arg: Term

    def __post_init__(self) -> None:
        if self.arg.sort is not Sort.FIELD:
            raise SortError(f"ord applied to a {self.arg.sort.value} term in {self}")

    @property
    def sort(self) -> Sort:
        return Sort.GROUP

    def __str__(self) -> str:
        return f"(ord {self.arg})"


@dataclass(frozen=True)
class Ac:
    arg: Term

    def __post_init__(self) -> None:
        if self.arg.sort is not Sort.FIELD:
            raise SortError(f"ac applied to a {self.arg.sort.value} term in {self}")

    @property
    def sort(self) -> Sort:
        return Sort.RESIDUE

    def __str__(self) -> str:
        return f"(ac {self.arg})"


Term = Union[Var, Lit, Add, Mul, Neg, Ord, Ac]


def is_ground(t: Term) -> bool:
    """True when ``t`` is built from literals only (no variables, ord, ac)."""
    if isinstance(t, Lit):
        return True
    if isinstance(t, (Add, Mul)):
        return is_ground(t.left) and is_ground(t.right)
    if isinstance(t, Neg):
        return is_ground(t.arg)
    return False


def ground_value(t: Term) -> int:
    """Integer value of a ground term (before any reduction mod p)."""
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Add):
        return ground_value(t.left) + ground_value(t.right)
    if isinstance(t, Mul):
        return ground_value(t.left) * ground_value(t.right)
    if isinstance(t, Neg):
        return -ground_value(t.arg)
    raise FormulaError(f"{t} is not a ground term")


def int_term(n: int, sort: Sort = Sort.GROUP) -> Term:
    return Lit(n, sort) if n >= 0 else Neg(Lit(-n, sort))


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term

    def __post_init__(self) -> None:
        if self.left.sort is not self.right.sort:
            raise SortError(
                f"equality between {self.left.sort.value} and {self.right.sort.value} in {self}"
            )

    @property
    def sort(self) -> Sort:
        return self.left.sort

    def __str__(self) -> str:
        return f"(= {self.left} {self.right})"


@dataclass(frozen=True)
class Lt:
    left: Term
    right: Term

    def __post_init__(self) -> None:
        for side in (self.left, self.right):
            if side.sort is not Sort.GROUP:
                raise SortError(f"'<' on a {side.sort.value} term in {self}")

    def __str__(self) -> str:
        return f"(< {self.left} {self.right})"


@dataclass(frozen=True)
class Divides:
    modulus: int
    term: Term

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise SortError(f"divides needs a positive modulus, got {self.modulus}")
        if self.term.sort is not Sort.GROUP:
            raise SortError(f"divides on a {self.term.sort.value} term in {self}")

    def __str__(self) -> str:
        return f"(divides {self.modulus} {self.term})"


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"(and {self.left} {self.right})"


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula

    def __str__(self) -> str:
        return f"(or {self.left} {self.right})"


@dataclass(frozen=True)
class Not:
    arg: Formula

    def __str__(self) -> str:
        return f"(not {self.arg})"


@dataclass(frozen=True)
class Forall:
    var: Var
    body: Formula

    def __str__(self) -> str:
        return f"(forall {self.var} {self.body})"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: Formula

    def __str__(self) -> str:
        return f"(exists {self.var} {self.body})"


Formula = Union[Eq, Lt, Divides, And, Or, Not, Forall, Exists]
Atom = (Eq, Lt, Divides)
Quantifier = (Forall, Exists)

TRUE: Formula = Eq(Lit(0), Lit(0))
FALSE: Formula = Not(TRUE)


def conj(*parts: Formula) -> Formula:
    """Right-nested conjunction; the empty conjunction is TRUE."""
    parts = tuple(parts)
    if not parts:
        return TRUE
    return reduce(lambda acc, f: And(f, acc), reversed(parts[:-1]), parts[-1])


def disj(*parts: Formula) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    return reduce(lambda acc, f: Or(f, acc), reversed(parts[:-1]), parts[-1])


def format_formula(f: Formula | Term) -> str:
    """Canonical text: single spaces, no redundant whitespace."""
    return str(f)


def subterms(f: Formula | Term) -> Iterator[Formula | Term]:
    """Pre-order walk over formula and term nodes, left to right."""
    yield f
    if isinstance(f, (Add, Mul, Eq, Lt, And, Or)):
        yield from subterms(f.left)
        yield from subterms(f.right)
    elif isinstance(f, (Neg, Ord, Ac, Not)):
        yield from subterms(f.arg)
    elif isinstance(f, Divides):
        yield from subterms(f.term)
    elif isinstance(f, (Forall, Exists)):
        yield f.var
        yield from subterms(f.body)


def free_variables(f: Formula | Term) -> list[tuple[str, Sort]]:
    """Free variables in order of first occurrence."""
    seen: dict[str, Sort] = {}

    def walk(node, bound: frozenset[str]) -> None:
        if isinstance(node, Var):
            if node.name not in bound and node.name not in seen:
                seen[node.name] = node.sort
        elif isinstance(node, (Forall, Exists)):
            walk(node.body, bound | {node.var.name})
        elif isinstance(node, (Add, Mul, Eq, Lt, And, Or)):
            walk(node.left, bound)
            walk(node.right, bound)
        elif isinstance(node, (Neg, Ord, Ac, Not)):
            walk(node.arg, bound)
        elif isinstance(node, Divides):
            walk(node.term, bound)

    walk(f, frozenset())
    return list(seen.items())


def is_quantifier_free(f: Formula) -> bool:
    return not any(isinstance(node, Quantifier) for node in subterms(f))


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, (Forall, Exists)):
        return 1 + quantifier_depth(f.body)
    if isinstance(f, (And, Or)):
        return max(quantifier_depth(f.left), quantifier_depth(f.right))
    if isinstance(f, Not):
        return quantifier_depth(f.arg)
    return 0


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\()|(\))|([A-Za-z_][A-Za-z0-9_]*|\d+|[=<+*-])|(\S))")


@dataclass
class _Node:
    """Untyped s-expression node: an atom string or a list of nodes."""

    value: str | list[_Node]
    pos: int

    def text(self) -> str:
        if isinstance(self.value, str):
            return self.value
        return "(" + " ".join(child.text() for child in self.value) + ")"


def _read(text: str) -> _Node:
    tokens: list[tuple[str, int]] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:  # only trailing whitespace left
            break
        if match.group(4) is not None:
            raise ParseError(f"unexpected character {match.group(4)!r}", match.start(4))
        start = match.start(match.lastindex)
        tokens.append((match.group(match.lastindex), start))
        pos = match.end()

    if not tokens:
        raise ParseError("empty input", 0)

    index = 0

    def read_node() -> _Node:
        nonlocal index
        if index >= len(tokens):
            raise ParseError("unexpected end of input", len(text))
        tok, at = tokens[index]
        index += 1
        if tok == ")":
            raise ParseError("unexpected ')'", at)
        if tok != "(":
            return _Node(tok, at)
        children = []
        while True:
            if index >= len(tokens):
                raise ParseError("unclosed '('", at)
            if tokens[index][0] == ")":
                index += 1
                return _Node(children, at)
            children.append(read_node())

    node = read_node()
    if index != len(tokens):
        raise ParseError("trailing input after formula", tokens[index][1])
    return node


def _head(node: _Node) -> tuple[str, list[_Node]]:
    if isinstance(node.value, str):
        raise ParseError(f"expected a parenthesised form, got {node.value!r}", node.pos)
    if not node.value or not isinstance(node.value[0].value, str):
        raise ParseError("form without an operator", node.pos)
    return node.value[0].value, node.value[1:]


def _arity(node: _Node, args: list[_Node], n: int) -> None:
    if len(args) != n:
        raise ParseError(f"{_head(node)[0]!r} takes {n} argument(s), got {len(args)}", node.pos)


def _infer(node: _Node) -> Sort | None:
    """Sort of a term node, or None for a literal-only expression."""
    if isinstance(node.value, str):
        if node.value.isdigit():
            return None
        try:
            return sort_of_name(node.value)
        except SortError as exc:
            raise ParseError(str(exc), node.pos) from None
    op, args = _head(node)
    if op in ("+", "*"):
        _arity(node, args, 2)
        sorts = {s for s in map(_infer, args) if s is not None}
        if len(sorts) > 1:
            names = " and ".join(sorted(s.value for s in sorts))
            raise SortError(f"mixed sorts ({names}) in subterm {node.text()}")
        return sorts.pop() if sorts else None
    if op == "-":
        _arity(node, args, 1)
        return _infer(args[0])
    if op in ("ord", "ac"):
        _arity(node, args, 1)
        inner = _infer(args[0])
        if inner not in (None, Sort.FIELD):
            raise SortError(f"{op} expects a Field term, got {inner.value} in {node.text()}")
        return Sort.GROUP if op == "ord" else Sort.RESIDUE
    raise ParseError(f"unknown term operator {op!r}", node.pos)


def _term(node: _Node, sort: Sort) -> Term:
    if isinstance(node.value, str):
        if node.value.isdigit():
            return Lit(int(node.value), sort)
        var = Var(node.value)
        if var.sort is not sort:
            raise SortError(f"{var.sort.value} variable {var} used where {sort.value} is required")
        return var
    op, args = _head(node)
    try:
        if op == "+":
            return Add(_term(args[0], sort), _term(args[1], sort))
        if op == "*":
            return Mul(_term(args[0], sort), _term(args[1], sort))
        if op == "-":
            return Neg(_term(args[0], sort))
        if op in ("ord", "ac"):
            want = Sort.GROUP if op == "ord" else Sort.RESIDUE
            if sort is not want:
                raise SortError(f"{node.text()} is {want.value}-sorted, {sort.value} required")
            inner = _term(args[0], Sort.FIELD)
            return Ord(inner) if op == "ord" else Ac(inner)
    except SortError as exc:
        if node.text() in str(exc):
            raise
        raise SortError(f"{exc} (in subterm {node.text()})") from None
    raise ParseError(f"unknown term operator {op!r}", node.pos)


def _formula(node: _Node) -> Formula:
    op, args = _head(node)
    if op == "=":
        _arity(node, args, 2)
        left, right = (_infer(a) for a in args)
        if left is not None and right is not None and left is not right:
            raise SortError(
                f"equality between {left.value} and {right.value} terms in {node.text()}"
            )
        sort = left or right or Sort.GROUP
        return Eq(_term(args[0], sort), _term(args[1], sort))
    if op == "<":
        _arity(node, args, 2)
        for arg in args:
            s = _infer(arg)
            if s not in (None, Sort.GROUP):
                raise SortError(f"'<' restricted to the Group sort; {arg.text()} is {s.value}")
        return Lt(_term(args[0], Sort.GROUP), _term(args[1], Sort.GROUP))
    if op == "divides":
        _arity(node, args, 2)
        modulus = args[0].value
        if not (isinstance(modulus, str) and modulus.isdigit() and int(modulus) > 0):
            raise ParseError("divides expects a positive integer modulus", args[0].pos)
        s = _infer(args[1])
        if s not in (None, Sort.GROUP):
            raise SortError(f"divides restricted to the Group sort; {args[1].text()} is {s.value}")
        return Divides(int(modulus), _term(args[1], Sort.GROUP))
    if op in ("and", "or"):
        _arity(node, args, 2)
        cls = And if op == "and" else Or
        return cls(_formula(args[0]), _formula(args[1]))
    if op == "not":
        _arity(node, args, 1)
        return Not(_formula(args[0]))
    if op in ("forall", "exists"):
        _arity(node, args, 2)
        name = args[0].value
        if not isinstance(name, str) or _NAME_RE.match(name) is None:
            raise ParseError("quantifier expects a variable name", args[0].pos)
        cls = Forall if op == "forall" else Exists
        return cls(Var(name), _formula(args[1]))
    raise ParseError(f"unknown formula operator {op!r}", node.pos)


def parse(text: str) -> Formula:
    """Parse and sort-check one formula."""
    return _formula(_read(text))


def parse_term(text: str, sort: Sort | None = None) -> Term:
    node = _read(text)
    return _term(node, sort or _infer(node) or Sort.GROUP)


# ---------------------------------------------------------------------------
# Integer semantics for the group sort (sampling oracle)
# ---------------------------------------------------------------------------


def _np_term(t: Term, env: dict[str, np.ndarray]):
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise FormulaError(f"unbound variable {t.name}") from None
    if isinstance(t, Lit):
        return t.value
    if isinstance(t, Add):
        return _np_term(t.left, env) + _np_term(t.right, env)
    if isinstance(t, Mul):
        return _np_term(t.left, env) * _np_term(t.right, env)
    if isinstance(t, Neg):
        return -_np_term(t.arg, env)
    raise FormulaError(f"{t} has no integer interpretation")


def _weights(t: Term, var: str) -> tuple[int, int, int]:
    """Absolute coefficient of ``var``, summed absolute coefficients of the
    other variables, and absolute constant of a linear group term."""
    if isinstance(t, Var):
        return (1, 0, 0) if t.name == var else (0, 1, 0)
    if isinstance(t, Lit):
        return 0, 0, t.value
    if isinstance(t, Add):
        a, b = _weights(t.left, var), _weights(t.right, var)
        return a[0] + b[0], a[1] + b[1], a[2] + b[2]
    if isinstance(t, Neg):
        return _weights(t.arg, var)
    if isinstance(t, Mul):
        if is_ground(t.left):
            k, inner = abs(ground_value(t.left)), t.right
        else:
            k, inner = abs(ground_value(t.right)), t.left
        a = _weights(inner, var)
        return k * a[0], k * a[1], k * a[2]
    raise FormulaError(f"{t} has no integer interpretation")


def _atoms(f: Formula) -> Iterator[Formula]:
    for node in subterms(f):
        if isinstance(node, Atom):
            yield node


def _window(q: Forall | Exists, magnitude: int) -> int:
    """Search radius for a bounded quantifier that is exact when the body is
    quantifier free: beyond the largest breakpoint of the order atoms every
    atom is periodic with period lcm(moduli)."""
    bound = 0
    period = 1
    const_total = 0
    for atom in _atoms(q.body):
        terms = (atom.term,) if isinstance(atom, Divides) else (atom.left, atom.right)
        weights = [_weights(t, q.var.name) for t in terms]
        coef = sum(w[0] for w in weights)
        others = sum(w[1] for w in weights)
        const = sum(w[2] for w in weights)
        const_total += const
        if isinstance(atom, Divides):
            period = math.lcm(period, atom.modulus)
        elif coef:
            bound = max(bound, -(-(others * magnitude + const) // coef))
    radius = bound + period + 1
    nested = quantifier_depth(q.body)
    if nested:
        radius = (2 ** nested) * (radius + const_total)
    return radius


def _np_formula(f: Formula, env: dict[str, np.ndarray], ndim: int):
    if isinstance(f, Eq):
        return _np_term(f.left, env) == _np_term(f.right, env)
    if isinstance(f, Lt):
        return _np_term(f.left, env) < _np_term(f.right, env)
    if isinstance(f, Divides):
        return _np_term(f.term, env) % f.modulus == 0
    if isinstance(f, And):
        return np.logical_and(_np_formula(f.left, env, ndim), _np_formula(f.right, env, ndim))
    if isinstance(f, Or):
        return np.logical_or(_np_formula(f.left, env, ndim), _np_formula(f.right, env, ndim))
    if isinstance(f, Not):
        return np.logical_not(_np_formula(f.arg, env, ndim))
    if isinstance(f, (Forall, Exists)):
        if f.var.sort is not Sort.GROUP:
            raise FormulaError(f"cannot sample a {f.var.sort.value} quantifier")
        magnitude = max((int(np.abs(v).max()) for v in env.values()), default=0)
        radius = _window(f, magnitude)
        inner = {k: v[..., None] for k, v in env.items()}
        inner[f.var.name] = np.arange(-radius, radius + 1, dtype=np.int64).reshape(
            (1,) * ndim + (-1,)
        )
        res = np.asarray(_np_formula(f.body, inner, ndim + 1))
        res = res.reshape((1,) * (ndim + 1 - res.ndim) + res.shape)
        return res.any(axis=-1) if isinstance(f, Exists) else res.all(axis=-1)
    raise FormulaError(f"unknown node {f!r}")


def evaluate_integers(f: Formula, assignment: dict[str, int]) -> bool:
    """Truth of a group-sort formula at one integer assignment.

    Quantifiers are evaluated by bounded search; exact for a quantifier over
    a quantifier-free body, a generous heuristic window otherwise.
    """
    env = {k: np.array([v], dtype=np.int64) for k, v in assignment.items()}
    res = np.asarray(_np_formula(f, env, 1))
    return bool(res.reshape(-1)[0])


def sample_equivalent(
    f: Formula, g: Formula, bound: int = 100, trials: int = 1000, seed: int = 0
) -> bool:
    """Whether ``f`` and ``g`` agree on ``trials`` seeded integer assignments
    with coordinates in ``[-bound, bound]``."""
    names: list[str] = []
    for name, sort in free_variables(f) + free_variables(g):
        if sort is not Sort.GROUP:
            raise FormulaError(f"free {sort.value} variable {name}: only Group variables can be sampled")
        if name not in names:
            names.append(name)
    for node in list(subterms(f)) + list(subterms(g)):
        if isinstance(node, (Ord, Ac)):
            raise FormulaError(f"{node} cannot be sampled over the integers")

    rng = np.random.default_rng(seed)
    values = rng.integers(-bound, bound, size=(trials, len(names)), endpoint=True, dtype=np.int64)
    nested = max(quantifier_depth(f), quantifier_depth(g))
    chunk = trials if nested <= 1 else 16
    for start in range(0, trials, chunk):
        block = values[start : start + chunk]
        env = {name: block[:, i] for i, name in enumerate(names)}
        n = len(block)
        a = np.broadcast_to(np.asarray(_np_formula(f, env, 1)), (n,))
        b = np.broadcast_to(np.asarray(_np_formula(g, env, 1)), (n,))
        if not np.array_equal(a, b):
            return False
    return True
