from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pasvol import formula as F
from pasvol import padic
from pasvol import presburger as PB
from pasvol.padic import PadicApprox, PadicContext, TruthValue

import oracles

T, U, Fa = TruthValue.TRUE, TruthValue.UNKNOWN, TruthValue.FALSE
CORPUS = sorted((Path(__file__).parent / "fixtures" / "corpus").glob("*.pas"))


class TestApprox:
    def test_ord_and_ac(self):
        ctx = PadicContext(3, 4)
        x = PadicApprox.from_int(6, ctx)
        assert x.ord() == 1 and x.ac() == 2

    def test_undecided_class(self):
        x = PadicApprox(0, 3, 2)
        assert not x.ord_decided and x.ord() is None and x.ac() is None

    def test_exact_zero(self):
        x = PadicApprox.from_int(0, PadicContext(5, 2))
        assert x.ord_decided and x.ord() == padic.INF

    @pytest.mark.parametrize("p", [2, 4, 9, 1])
    def test_context_rejects(self, p):
        with pytest.raises(ValueError):
            PadicContext(p, 3)

    def test_context_depth(self):
        with pytest.raises(ValueError):
            PadicContext(5, 0)

    @given(st.sampled_from([3, 5, 7]), st.integers(1, 5), st.integers(1, 10**6))
    def test_ac_is_nonzero_unit_part(self, p, depth, n):
        x = PadicApprox.from_int(n, PadicContext(p, depth))
        if x.ord_decided:
            v = x.ord()
            assert v < depth
            assert x.ac() == (x.rep // p**v) % p != 0


class TestEvaluate:
    def test_ord_and_ac_true(self):
        f = F.parse("(and (= (ord x0) 1) (= (ac x0) 2))")
        assert padic.evaluate(f, {"x0": 6}, PadicContext(3, 4)) is T

    def test_class_of_zero_unknown(self):
        f = F.parse("(= (ord x0) 2)")
        assert padic.evaluate(f, {"x0": PadicApprox(0, 3, 2)}, PadicContext(3, 2)) is U

    def test_residue_quantifier_decides(self):
        f = F.parse("(exists xi0 (= (* xi0 xi0) (ac x0)))")
        assert padic.evaluate(f, {"x0": 7}, PadicContext(5, 3)) is Fa

    def test_group_quantifier_rejected(self):
        with pytest.raises(padic.EvaluationError):
            padic.evaluate(F.parse("(exists m0 (< m0 (ord x0)))"), {"x0": 3}, PadicContext(3, 2))

    def test_unbound_variable(self):
        with pytest.raises(padic.EvaluationError):
            padic.evaluate(F.parse("(< (ord x0) m0)"), {"x0": 3}, PadicContext(3, 2))

    def test_sort_mismatch(self):
        with pytest.raises(padic.EvaluationError):
            padic.evaluate(F.parse("(< (ord x0) m0)"), {"x0": 3, "m0": PadicApprox(1, 3, 2)}, PadicContext(3, 2))


class TestKleene:
    values = st.sampled_from(list(TruthValue))

    @given(values, values)
    def test_de_morgan(self, a, b):
        assert ~(a & b) == (~a | ~b)
        assert ~(a | b) == (~a & ~b)

    @given(values, values, values)
    def test_distributive(self, a, b, c):
        assert a & (b | c) == (a & b) | (a & c)
        assert a | (b & c) == (a | b) & (a | c)

    @given(values, values)
    def test_absorption_and_commutation(self, a, b):
        assert a & (a | b) == a and a | (a & b) == a
        assert a & b == b & a and a | b == b | a

    @given(values)
    def test_involution_and_units(self, a):
        assert ~~a == a
        assert a & T == a and a | Fa == a

    def test_unknown_fixed_by_negation(self):
        assert ~U is U

    def test_no_truthiness(self):
        with pytest.raises(TypeError):
            bool(U)


QF_FRAGMENT = st.sampled_from(
    [
        "(= (ord x0) 1)",
        "(< (ord x0) (ord x1))",
        "(= (ac x0) (ac x1))",
        "(divides 2 (+ (ord x0) (ord x1)))",
        "(and (< 0 (ord x0)) (not (= (ac x1) 1)))",
        "(or (= (ac x0) 2) (< 2 (ord x1)))",
        "(= (+ (ord x0) (ord x1)) 3)",
        "(exists xi0 (= (* xi0 xi0) (ac x0)))",
        "(= (ord (* x0 x1)) 2)",
        "(= (ord (+ x0 x1)) 1)",
    ]
)


class TestMonotoneRefinement:
    @settings(max_examples=80, deadline=None)
    @given(QF_FRAGMENT, st.sampled_from([3, 5]), st.integers(1, 3), st.integers(0, 10**6), st.integers(0, 10**6), st.data())
    def test_refining_never_flips(self, text, p, k, r0, r1, data):
        f = F.parse(text)
        coarse = PadicContext(p, k)
        fine = PadicContext(p, k + 1)
        c0, c1 = r0 % p**k, r1 % p**k
        d0, d1 = data.draw(st.integers(0, p - 1)), data.draw(st.integers(0, p - 1))
        before = padic.evaluate(f, {"x0": PadicApprox(c0, p, k), "x1": PadicApprox(c1, p, k)}, coarse)
        after = padic.evaluate(
            f, {"x0": PadicApprox(c0 + d0 * p**k, p, k + 1), "x1": PadicApprox(c1 + d1 * p**k, p, k + 1)}, fine
        )
        if before is not U:
            assert after is before

    @pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.stem)
    @pytest.mark.parametrize("p", [3, 5])
    def test_nested_brackets_on_corpus(self, path, p):
        f = PB.eliminate_group_quantifiers(F.parse(path.read_text()))
        previous = (Fraction(0), Fraction(1))
        for depth in range(1, 5):
            lo, hi = padic.volume_bounds(f, ["x0"], PadicContext(p, depth))
            assert previous[0] <= lo <= hi <= previous[1]
            previous = (lo, hi)

    @pytest.mark.parametrize("text", ["(< (ord x0) (ord x1))", "(= (ac x0) (ac x1))", "(= (ord (+ x0 x1)) 1)"])
    def test_nested_brackets_two_variables(self, text):
        f = F.parse(text)
        previous = (Fraction(0), Fraction(1))
        for depth in range(1, 4):
            lo, hi = padic.volume_bounds(f, ["x0", "x1"], PadicContext(3, depth))
            assert previous[0] <= lo <= hi <= previous[1]
            previous = (lo, hi)


class TestVolumeBounds:
    def test_maximal_ideal(self):
        f = F.parse("(< 0 (ord x0))")
        assert padic.volume_bounds(f, ["x0"], PadicContext(5, 2)) == (Fraction(1, 5), Fraction(1, 5))

    def test_unit_squares(self):
        f = F.parse("(and (exists xi0 (= (* xi0 xi0) (ac x0))) (= (ord x0) 0))")
        assert padic.volume_bounds(f, ["x0"], PadicContext(5, 1)) == (Fraction(2, 5), Fraction(2, 5))

    def test_even_ord_bracket(self):
        f = F.parse("(divides 2 (ord x0))")
        lo, hi = padic.volume_bounds(f, ["x0"], PadicContext(5, 6))
        assert lo <= Fraction(5, 6) <= hi
        # only the class of zero is undecided
        assert hi - lo == Fraction(1, 5**6)

    def test_equal_ords_two_variables(self):
        f = F.parse("(= (ord x0) (ord x1))")
        for depth in (1, 2, 3):
            lo, hi = padic.volume_bounds(f, ["x0", "x1"], PadicContext(3, depth))
            assert lo <= Fraction(2, 4) <= hi

    def test_field_quantifier_is_sound(self):
        # the squares of Z_3 have volume 3/8
        f = F.parse("(exists x1 (= (* x1 x1) x0))")
        lo, hi = padic.volume_bounds(f, ["x0"], PadicContext(3, 2))
        assert lo <= Fraction(3, 8) <= hi

    def test_variables_must_match(self):
        with pytest.raises(padic.EvaluationError):
            padic.volume_bounds(F.parse("(< 0 (ord x0))"), ["x1"], PadicContext(3, 2))

    def test_enumeration_cap(self, monkeypatch):
        monkeypatch.setenv("PASVOL_MAX_CLASSES", "100")
        with pytest.raises(padic.EnumerationLimitError):
            padic.volume_bounds(F.parse("(< 0 (ord x0))"), ["x0"], PadicContext(5, 3))

    @pytest.mark.parametrize("path", CORPUS[:6], ids=lambda p: p.stem)
    def test_exact_brackets_match_enumeration(self, path):
        f = F.parse(path.read_text())
        lo, hi = padic.volume_bounds(PB.eliminate_group_quantifiers(f), ["x0"], PadicContext(3, 4))
        olo, ohi = oracles.truncated_integral(f, 3, 4)
        assert lo <= ohi and olo <= hi
        if lo == hi:
            assert olo <= lo <= ohi


class TestMonomialIntegral:
    def test_total_measure(self):
        f = F.parse("(not (< (ord x0) 0))")
        assert padic.monomial_integral_numeric(f, 0, PadicContext(3, 3)) == (1, 1)

    def test_linear_weight(self):
        f = F.parse("(not (< (ord x0) 0))")
        lo, hi = padic.monomial_integral_numeric(f, 1, PadicContext(3, 6))
        assert lo <= Fraction(3, 4) <= hi
        assert hi - lo <= Fraction(1, 3**6)

    def test_units(self):
        f = F.parse("(= (ord x0) 0)")
        assert padic.monomial_integral_numeric(f, 7, PadicContext(5, 2)) == (Fraction(4, 5), Fraction(4, 5))

    @pytest.mark.parametrize("m", range(6))
    @pytest.mark.parametrize("p", [3, 5, 7])
    def test_closed_form_in_every_bracket(self, m, p):
        f = F.parse("(not (< (ord x0) 0))")
        exact = (1 - Fraction(1, p)) / (1 - Fraction(1, p ** (m + 1)))
        for depth in range(1, 6):
            lo, hi = padic.monomial_integral_numeric(f, m, PadicContext(p, depth))
            assert lo <= exact <= hi

    def test_negative_exponent(self):
        with pytest.raises(ValueError):
            padic.monomial_integral_numeric(F.parse("(< 0 (ord x0))"), -1, PadicContext(3, 2))
