"""Truncated p-adic integers and a precision-aware evaluator for formulas of
the full three-sorted language over the integer ring Z_p.

A field variable is known only modulo p^N, so a formula is evaluated on a
whole residue class at once and the answer is three-valued: TRUE or FALSE
when the formula is constant on the class, UNKNOWN otherwise.  Field-sort
quantifiers range over Z_p (not Q_p) and are evaluated by enumerating the
p^N residue classes; residue quantifiers enumerate F_p.  Group quantifiers
must be eliminated beforehand (see ``presburger.eliminate_group_quantifiers``).

Volumes use the Haar measure giving Z_p volume 1, and the uniformizer is p.
"""

from __future__ import annotations

import enum
import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction

from . import formula as F
from .formula import Sort

INF = math.inf
DEFAULT_MAX_CLASSES = 10**8


class EvaluationError(ValueError):
    pass


class PrecisionError(ValueError):
    pass


class EnumerationLimitError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


def valuation(n: int, p: int) -> int | float:
    if n == 0:
        return INF
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def max_classes() -> int:
    return int(os.environ.get("PASVOL_MAX_CLASSES", DEFAULT_MAX_CLASSES))


@dataclass(frozen=True)
class PadicContext:
    p: int
    depth: int

    def __post_init__(self) -> None:
        if not is_prime(self.p) or self.p < 3:
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.depth < 1:
            raise ValueError(f"depth must be at least 1, got {self.depth}")

    @property
    def modulus(self) -> int:
        return self.p**self.depth


@dataclass(frozen=True)
class PadicApprox:
    """An element of Z_p known modulo p^depth (a residue class), or the exact zero."""

    rep: int
    p: int
    depth: int
    exact_zero: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.rep < self.p**self.depth:
            raise ValueError(f"representative {self.rep} outside [0, {self.p}^{self.depth})")
        if self.exact_zero and self.rep:
            raise ValueError("exact zero must have representative 0")

    @classmethod
    def from_int(cls, n: int, ctx: PadicContext) -> PadicApprox:
        return cls(n % ctx.modulus, ctx.p, ctx.depth, exact_zero=(n == 0))

    @property
    def ord_decided(self) -> bool:
        return self.rep != 0 or self.exact_zero

    def ord(self) -> int | float | None:
        """Valuation, INF for the exact zero, None when only ord >= depth is known."""
        if self.exact_zero:
            return INF
        if self.rep == 0:
            return None
        return valuation(self.rep, self.p)

    def ac(self) -> int | None:
        if self.exact_zero:
            return 0
        if self.rep == 0:
            return None
        return (self.rep // self.p ** valuation(self.rep, self.p)) % self.p


class TruthValue(enum.Enum):
    FALSE = 0
    UNKNOWN = 1
    TRUE = 2

    @classmethod
    def of(cls, b: bool) -> TruthValue:
        return cls.TRUE if b else cls.FALSE

    def __and__(self, other: TruthValue) -> TruthValue:
        return TruthValue(min(self.value, other.value))

    def __or__(self, other: TruthValue) -> TruthValue:
        return TruthValue(max(self.value, other.value))

    def __invert__(self) -> TruthValue:
        return TruthValue(2 - self.value)

    def __bool__(self) -> bool:
        raise TypeError("TruthValue is three-valued; compare with TruthValue.TRUE")


T, U, Fa = TruthValue.TRUE, TruthValue.UNKNOWN, TruthValue.FALSE


# ---------------------------------------------------------------------------
# Values of the three sorts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _FieldVal:
    residue: int  # modulo p^N
    exact: int | None = None  # the integer itself when known exactly


def _interval(lo, hi) -> tuple:
    if lo != lo or hi != hi:  # nan from inf - inf
        return (-INF, INF)
    return (lo, hi)


class _Evaluator:
    def __init__(self, ctx: PadicContext):
        self.ctx = ctx
        self.p = ctx.p
        self.mod = ctx.modulus

    # field terms -----------------------------------------------------------
    def field(self, t: F.Term, env: dict) -> _FieldVal:
        if isinstance(t, F.Var):
            return env[t.name]
        if isinstance(t, F.Lit):
            return _FieldVal(t.value % self.mod, t.value)
        if isinstance(t, F.Add):
            a, b = self.field(t.left, env), self.field(t.right, env)
            exact = a.exact + b.exact if a.exact is not None and b.exact is not None else None
            return _FieldVal((a.residue + b.residue) % self.mod, exact)
        if isinstance(t, F.Mul):
            a, b = self.field(t.left, env), self.field(t.right, env)
            if a.exact == 0 or b.exact == 0:
                return _FieldVal(0, 0)
            exact = a.exact * b.exact if a.exact is not None and b.exact is not None else None
            return _FieldVal((a.residue * b.residue) % self.mod, exact)
        if isinstance(t, F.Neg):
            a = self.field(t.arg, env)
            return _FieldVal(-a.residue % self.mod, None if a.exact is None else -a.exact)
        raise EvaluationError(f"{t} is not a field term")

    def ord_of(self, v: _FieldVal) -> tuple:
        if v.exact is not None:
            k = valuation(v.exact, self.p)
            return (k, k)
        if v.residue:
            k = valuation(v.residue, self.p)
            return (k, k)
        return (self.ctx.depth, INF)

    def ac_of(self, v: _FieldVal) -> int | None:
        if v.exact is not None:
            if v.exact == 0:
                return 0
            return (v.exact // self.p ** valuation(v.exact, self.p)) % self.p
        if v.residue:
            return (v.residue // self.p ** valuation(v.residue, self.p)) % self.p
        return None

    # group terms: closed intervals --------------------------------------------
    def group(self, t: F.Term, env: dict) -> tuple:
        if isinstance(t, F.Var):
            return (env[t.name], env[t.name])
        if isinstance(t, F.Lit):
            return (t.value, t.value)
        if isinstance(t, F.Add):
            a, b = self.group(t.left, env), self.group(t.right, env)
            return _interval(a[0] + b[0], a[1] + b[1])
        if isinstance(t, F.Neg):
            a = self.group(t.arg, env)
            return (-a[1], -a[0])
        if isinstance(t, F.Mul):
            if F.is_ground(t.left):
                c, a = F.ground_value(t.left), self.group(t.right, env)
            else:
                c, a = F.ground_value(t.right), self.group(t.left, env)
            if c == 0:
                return (0, 0)
            return (c * a[0], c * a[1]) if c > 0 else (c * a[1], c * a[0])
        if isinstance(t, F.Ord):
            return self.ord_of(self.field(t.arg, env))
        raise EvaluationError(f"{t} is not a group term")

    # residue terms: value mod p or None ---------------------------------------
    def residue(self, t: F.Term, env: dict) -> int | None:
        if isinstance(t, F.Var):
            return env[t.name]
        if isinstance(t, F.Lit):
            return t.value % self.p
        if isinstance(t, F.Add):
            a, b = self.residue(t.left, env), self.residue(t.right, env)
            return None if a is None or b is None else (a + b) % self.p
        if isinstance(t, F.Mul):
            a, b = self.residue(t.left, env), self.residue(t.right, env)
            if a == 0 or b == 0:
                return 0
            return None if a is None or b is None else (a * b) % self.p
        if isinstance(t, F.Neg):
            a = self.residue(t.arg, env)
            return None if a is None else -a % self.p
        if isinstance(t, F.Ac):
            return self.ac_of(self.field(t.arg, env))
        raise EvaluationError(f"{t} is not a residue term")

    # formulas -----------------------------------------------------------------
    def formula(self, f: F.Formula, env: dict) -> TruthValue:
        if isinstance(f, F.Eq):
            if f.sort is Sort.GROUP:
                a, b = self.group(f.left, env), self.group(f.right, env)
                if a[0] == a[1] == b[0] == b[1]:
                    return T
                if a[1] < b[0] or b[1] < a[0]:
                    return Fa
                return U
            if f.sort is Sort.RESIDUE:
                a, b = self.residue(f.left, env), self.residue(f.right, env)
                return U if a is None or b is None else TruthValue.of(a == b)
            diff = self.field(F.Add(f.left, F.Neg(f.right)), env)
            if diff.exact is not None:
                return TruthValue.of(diff.exact == 0)
            return Fa if diff.residue else U
        if isinstance(f, F.Lt):
            a, b = self.group(f.left, env), self.group(f.right, env)
            if a[1] < b[0]:
                return T
            if a[0] >= b[1]:
                return Fa
            return U
        if isinstance(f, F.Divides):
            lo, hi = self.group(f.term, env)
            if lo == hi and lo not in (INF, -INF):
                return TruthValue.of(lo % f.modulus == 0)
            return U
        if isinstance(f, F.And):
            left = self.formula(f.left, env)
            return left if left is Fa else left & self.formula(f.right, env)
        if isinstance(f, F.Or):
            left = self.formula(f.left, env)
            return left if left is T else left | self.formula(f.right, env)
        if isinstance(f, F.Not):
            return ~self.formula(f.arg, env)
        if isinstance(f, (F.Forall, F.Exists)):
            sort = f.var.sort
            if sort is Sort.GROUP:
                raise EvaluationError(
                    f"group quantifier in {f}; eliminate group quantifiers first"
                )
            if sort is Sort.RESIDUE:
                values = range(self.p)
            else:
                values = (_FieldVal(r) for r in range(self.mod))
            exists = isinstance(f, F.Exists)
            acc = Fa if exists else T
            for value in values:
                res = self.formula(f.body, {**env, f.var.name: value})
                acc = acc | res if exists else acc & res
                if acc is (T if exists else Fa):
                    break
            return acc
        raise EvaluationError(f"unknown node {f!r}")


def _bind(assign: dict, ctx: PadicContext, names: list[tuple[str, Sort]]) -> dict:
    env = {}
    for name, sort in names:
        if name not in assign:
            raise EvaluationError(f"unbound variable {name}")
        value = assign[name]
        if sort is Sort.FIELD:
            if isinstance(value, PadicApprox):
                if (value.p, value.depth) != (ctx.p, ctx.depth):
                    raise EvaluationError(f"{name} approximated at p={value.p}, N={value.depth}")
                env[name] = _FieldVal(0, 0) if value.exact_zero else _FieldVal(value.rep)
            elif isinstance(value, int) and not isinstance(value, bool):
                env[name] = _FieldVal(value % ctx.modulus, value)
            else:
                raise EvaluationError(f"field variable {name} needs a PadicApprox or integer")
        else:
            if not isinstance(value, int) or isinstance(value, bool):
                raise EvaluationError(f"{sort.value} variable {name} needs an integer")
            env[name] = value % ctx.p if sort is Sort.RESIDUE else value
    return env


def evaluate(f: F.Formula, assign: dict, ctx: PadicContext) -> TruthValue:
    """Three-valued truth of ``f`` on the precision class of ``assign``.

    Field variables take a PadicApprox (a class mod p^N) or a plain integer
    (an exact element); group variables take integers; residue variables take
    integers read mod p.
    """
    env = _bind(assign, ctx, F.free_variables(f))
    return _Evaluator(ctx).formula(f, env)


# ---------------------------------------------------------------------------
# Volumes by refinement of residue classes
# ---------------------------------------------------------------------------


def _check_vars(f: F.Formula, variables: list[str]) -> None:
    free = F.free_variables(f)
    for name, sort in free:
        if sort is not Sort.FIELD:
            raise EvaluationError(f"free {sort.value} variable {name}; volumes need field variables only")
    if sorted(n for n, _ in free) != sorted(set(variables)) or len(set(variables)) != len(variables):
        raise EvaluationError(
            f"variables {variables} do not match the free field variables {[n for n, _ in free]}"
        )


def _classes(f: F.Formula, variables: list[str], ctx: PadicContext, refine_true):
    """Yield (truth, level, reps) for a partition of Z_p^v into residue
    classes: a class at level k < N is emitted only when decided (and
    ``refine_true`` does not ask for more precision); the rest is refined
    down to level N.  Because refinement never changes a decided value, the
    counts agree with a flat enumeration at depth N."""
    v = len(variables)
    if ctx.p ** (ctx.depth * v) > max_classes():
        raise EnumerationLimitError(
            f"{ctx.p}^({ctx.depth}*{v}) classes exceed the cap of {max_classes()} "
            "(set PASVOL_MAX_CLASSES to raise it)"
        )
    p, N = ctx.p, ctx.depth
    evaluators = {k: _Evaluator(PadicContext(p, k)) for k in range(1, N + 1)}
    stack = [(1, reps) for reps in itertools.product(range(p), repeat=v)]
    while stack:
        k, reps = stack.pop()
        env = {name: _FieldVal(r) for name, r in zip(variables, reps)}
        truth = evaluators[k].formula(f, env)
        if k == N or truth is Fa or (truth is T and not refine_true(reps, k)):
            yield truth, k, reps
            continue
        step = p**k
        for digits in itertools.product(range(p), repeat=v):
            stack.append((k + 1, tuple(r + d * step for r, d in zip(reps, digits))))


def volume_bounds(f: F.Formula, variables: list[str], ctx: PadicContext) -> tuple[Fraction, Fraction]:
    """Lower and upper bounds on the Haar volume of {x in Z_p^v : f(x)}.

    lower counts depth-N classes on which f is TRUE, upper adds the UNKNOWN ones.
    """
    _check_vars(f, variables)
    v = len(variables)
    total = ctx.p ** (ctx.depth * v)
    true_count = unknown_count = 0
    for truth, k, _ in _classes(f, variables, ctx, lambda reps, k: False):
        weight = ctx.p ** ((ctx.depth - k) * v)
        if truth is T:
            true_count += weight
        elif truth is U:
            unknown_count += weight
    return Fraction(true_count, total), Fraction(true_count + unknown_count, total)


def monomial_integral_numeric(
    f: F.Formula, a: int, ctx: PadicContext
) -> tuple[Fraction, Fraction]:
    """Bounds on the integral of |x|^a over {x in Z_p : f(x)}."""
    if a < 0:
        raise ValueError("exponent must be non-negative")
    free = F.free_variables(f)
    if len(free) != 1 or free[0][1] is not Sort.FIELD:
        raise EvaluationError("monomial integrals need exactly one free field variable")
    name = free[0][0]
    p, N = ctx.p, ctx.depth

    def needs_exact_ord(reps, k):
        return a > 0 and reps[0] == 0

    lower = upper = Fraction(0)
    for truth, k, (rep,) in _classes(f, [name], ctx, needs_exact_ord):
        if truth is Fa:
            continue
        size = Fraction(1, p**k)
        if rep:
            value = size / Fraction(p) ** (a * valuation(rep, p))
            if truth is T:
                lower += value
            upper += value
        else:
            # class p^N Z_p: |x|^a ranges over [0, p^(-aN)]
            top = size / Fraction(p) ** (a * k)
            if truth is T and a == 0:
                lower += size
            upper += top
    return lower, upper

