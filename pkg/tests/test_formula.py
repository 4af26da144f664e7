from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pasvol import formula as F
from pasvol.formula import Sort

FIELD_VARS = ["x0", "x1"]
GROUP_VARS = ["m0", "m1", "m2"]
RESIDUE_VARS = ["xi0", "xi1"]
VARS = {Sort.FIELD: FIELD_VARS, Sort.GROUP: GROUP_VARS, Sort.RESIDUE: RESIDUE_VARS}


def terms(sort: Sort, depth: int = 2):
    leaves = st.one_of(
        st.sampled_from(VARS[sort]).map(F.Var),
        st.integers(0, 9).map(lambda n: F.Lit(n, sort)),
    )
    if sort is Sort.GROUP:
        leaves = st.one_of(leaves, st.sampled_from(FIELD_VARS).map(lambda v: F.Ord(F.Var(v))))
    if sort is Sort.RESIDUE:
        leaves = st.one_of(leaves, st.sampled_from(FIELD_VARS).map(lambda v: F.Ac(F.Var(v))))
    if depth == 0:
        return leaves
    sub = terms(sort, depth - 1)
    options = [leaves, st.builds(F.Add, sub, sub), st.builds(F.Neg, sub)]
    if sort is Sort.GROUP:
        options.append(st.builds(F.Mul, st.integers(0, 5).map(F.Lit), sub))
    else:
        options.append(st.builds(F.Mul, sub, sub))
    return st.one_of(options)


def _atom(draw):
    kind = draw(st.sampled_from(["eq", "lt", "dvd"]))
    if kind == "lt":
        return F.Lt(draw(terms(Sort.GROUP)), draw(terms(Sort.GROUP)))
    if kind == "dvd":
        return F.Divides(draw(st.integers(1, 6)), draw(terms(Sort.GROUP)))
    sort = draw(st.sampled_from(list(Sort)))
    left, right = draw(terms(sort)), draw(terms(sort))
    if sort is not Sort.GROUP and F.is_ground(left) and F.is_ground(right):
        # literal-only atoms read back at Group sort
        left = F.Var(VARS[sort][0])
    return F.Eq(left, right)


@st.composite
def formulas(draw, depth: int = 3):
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        return _atom(draw)
    kind = draw(st.sampled_from(["and", "or", "not", "forall", "exists"]))
    if kind in ("and", "or"):
        cls = F.And if kind == "and" else F.Or
        return cls(draw(formulas(depth - 1)), draw(formulas(depth - 1)))
    if kind == "not":
        return F.Not(draw(formulas(depth - 1)))
    var = F.Var(draw(st.sampled_from(FIELD_VARS + GROUP_VARS + RESIDUE_VARS)))
    cls = F.Forall if kind == "forall" else F.Exists
    return cls(var, draw(formulas(depth - 1)))


class TestParse:
    def test_exists_half_ord(self):
        f = F.parse("(exists m0 (= (+ m0 m0) (ord x0)))")
        m0 = F.Var("m0")
        assert f == F.Exists(m0, F.Eq(F.Add(m0, m0), F.Ord(F.Var("x0"))))

    def test_residue_literal(self):
        f = F.parse("(= (ac x0) 1)")
        assert f == F.Eq(F.Ac(F.Var("x0")), F.Lit(1, Sort.RESIDUE))
        assert f.sort is Sort.RESIDUE

    def test_cross_sort_equality(self):
        with pytest.raises(F.SortError, match="Field"):
            F.parse("(= x0 m0)")

    def test_whitespace_normalised(self):
        assert str(F.parse("( exists   m0 (< m0 1 ))")) == "(exists m0 (< m0 1))"

    def test_print(self):
        f = F.Exists(F.Var("m0"), F.Lt(F.Var("m0"), F.Lit(1)))
        assert F.format_formula(f) == "(exists m0 (< m0 1))"

    @pytest.mark.parametrize(
        "text",
        ["(< xi0 xi1)", "(divides 2 xi0)", "(< x0 x1)", "(= (* m0 m1) 2)", "(ord m0)", "(= (ac xi0) 1)"],
    )
    def test_sort_errors(self, text):
        with pytest.raises(F.FormulaError):
            F.parse(text)

    @pytest.mark.parametrize("text", ["(and (< m0 1)", "(< m0 1))", "(foo m0)", "(< m0 @)", ""])
    def test_syntax_errors(self, text):
        with pytest.raises(F.ParseError):
            F.parse(text)

    def test_syntax_error_position(self):
        with pytest.raises(F.ParseError) as info:
            F.parse("(< m0 @)")
        assert info.value.position == 6

    def test_divides_zero_modulus_rejected(self):
        with pytest.raises(F.FormulaError):
            F.parse("(divides 0 m0)")

    def test_group_product_with_constant(self):
        f = F.parse("(< (* 3 m0) m1)")
        assert isinstance(f.left, F.Mul)

    @settings(max_examples=100, deadline=None)
    @given(formulas())
    def test_round_trip(self, f):
        assert F.parse(F.format_formula(f)) == f

    @settings(max_examples=50, deadline=None)
    @given(formulas())
    def test_printing_is_canonical(self, f):
        text = F.format_formula(f)
        assert F.format_formula(F.parse(text.replace(" ", "   "))) == text


class TestFreeVariables:
    def test_bound_excluded(self):
        assert F.free_variables(F.parse("(exists m0 (= (ord x0) m0))")) == [("x0", Sort.FIELD)]

    def test_closed(self):
        assert F.free_variables(F.parse("(forall m0 (exists m1 (< m0 m1)))")) == []

    def test_first_occurrence_order(self):
        f = F.parse("(and (= (ac x0) xi0) (< m0 1))")
        assert F.free_variables(f) == [("x0", Sort.FIELD), ("xi0", Sort.RESIDUE), ("m0", Sort.GROUP)]

    def test_shadowing(self):
        f = F.parse("(and (< m0 1) (exists m0 (< m0 m1)))")
        assert [n for n, _ in F.free_variables(f)] == ["m0", "m1"]


class TestSampleEquivalent:
    def test_parity(self):
        f = F.parse("(exists m3 (= (+ m3 m3) m0))")
        assert F.sample_equivalent(f, F.parse("(divides 2 m0)"), bound=50, trials=1000, seed=0)

    def test_witness_found(self):
        assert not F.sample_equivalent(F.parse("(< m0 1)"), F.parse("(< m0 2)"), bound=100, trials=1000, seed=0)

    @pytest.mark.parametrize("seed", [0, 1, 17])
    def test_reflexive(self, seed):
        f = F.parse("(or (< m0 m1) (divides 3 (+ m0 m1)))")
        assert F.sample_equivalent(f, f, bound=100, trials=200, seed=seed)

    def test_rejects_field_variables(self):
        with pytest.raises(F.FormulaError):
            F.sample_equivalent(F.parse("(< (ord x0) 1)"), F.parse("(< (ord x0) 1)"))

    def test_deterministic(self):
        f, g = F.parse("(< m0 m1)"), F.parse("(< m0 (+ m1 1))")
        results = {F.sample_equivalent(f, g, bound=3, trials=50, seed=5) for _ in range(3)}
        assert len(results) == 1

    def test_nested_quantifiers(self):
        f = F.parse("(forall m1 (exists m2 (and (< m1 m2) (divides 5 (+ m2 m0)))))")
        assert F.sample_equivalent(f, F.TRUE, bound=100, trials=100, seed=0)


class TestLiterals:
    @given(st.integers(0, 1000))
    def test_group_literal_value(self, n):
        assert F.evaluate_integers(F.Eq(F.Var("m0"), F.Lit(n)), {"m0": n})

    @given(st.integers(0, 200), st.sampled_from([3, 5, 7, 11]))
    def test_residue_literal_mod_p(self, n, p):
        from pasvol import padic

        ctx = padic.PadicContext(p, 2)
        f = F.parse(f"(= xi0 {n})")
        assert padic.evaluate(f, {"xi0": n % p}, ctx) is padic.TruthValue.TRUE
