from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from pasvol import orbital as O
from pasvol.orbital import FpPoly, QpPoly, StripParams
from pasvol.padic import PadicContext, PrecisionError

import oracles

PRIMES = [5, 7, 11, 13, 17]


def qp(coeffs, p, depth=12):
    return QpPoly.from_ints(coeffs, PadicContext(p, depth))


def strip_fixture(p: int, second: int) -> list[int]:
    """(l^2 - p)(l^2 - second)"""
    return oracles.expand([[-p, 0, 1], [-second, 0, 1]])


# ---------------------------------------------------------------------------
# Newton polygons
# ---------------------------------------------------------------------------


@st.composite
def factored(draw):
    p = draw(st.sampled_from([3, 5, 7]))
    factors, expected = [], Counter()
    for _ in range(draw(st.integers(1, 5))):
        u = draw(st.integers(1, p - 1)) + p * draw(st.integers(0, 3))
        k = draw(st.integers(0, 3))
        if draw(st.booleans()):
            factors.append([-u * p**k, 1])
            expected[Fraction(k)] += 1
        else:
            factors.append([-u * p**k, 0, 1])
            expected[Fraction(k, 2)] += 2
    return p, oracles.expand(factors), expected


def polygon_counter(polygon) -> Counter:
    return Counter({s: m for s, m in polygon.segments})


class TestNewton:
    def test_square_root_of_p(self):
        assert O.newton_polygon(qp([-5, 0, 1], 5, 4)).segments == ((Fraction(1, 2), 2),)

    def test_two_valuations(self):
        p = 5
        f = qp([p, -(p + 1), 1], p, 4)
        assert O.newton_polygon(f).segments == ((Fraction(0), 1), (Fraction(1), 1))

    def test_strip_fixture(self):
        assert O.newton_polygon(qp(strip_fixture(7, 28), 7, 6)).segments == ((Fraction(1, 2), 4),)

    def test_zero_roots_skipped(self):
        polygon = O.newton_polygon(qp([0, 0, -5, 0, 1], 5, 4))
        assert polygon.segments == ((Fraction(1, 2), 2),)

    def test_undecided_coefficient(self):
        with pytest.raises(PrecisionError, match="increase depth"):
            O.newton_polygon(qp([25, 0, 1], 5, 2))

    @settings(max_examples=100, deadline=None)
    @given(factored())
    def test_random_products(self, case):
        p, coeffs, expected = case
        polygon = O.newton_polygon(qp(coeffs, p, 80))
        assert polygon_counter(polygon) == expected
        slopes = polygon.slopes
        assert slopes == sorted(set(slopes))
        assert sum(m for _, m in polygon.segments) == len(coeffs) - 1
        for s, m in polygon.segments:
            assert (s * m).denominator == 1


# ---------------------------------------------------------------------------
# strips and reduced polynomials
# ---------------------------------------------------------------------------


class TestReducedPoly:
    @pytest.mark.parametrize("p", [7, 11, 13])
    def test_two_distinct_reductions(self, p):
        R = O.reduced_poly(qp(strip_fixture(p, 4 * p), p, 6), StripParams(1, 2))
        assert R == FpPoly(p, (4, -5, 1))

    def test_single_root(self):
        assert O.reduced_poly(qp([-5, 0, 1], 5, 4), StripParams(1, 2)) == FpPoly(5, (-1, 1))

    def test_repeated_reduction(self):
        p = 5
        R = O.reduced_poly(qp(strip_fixture(p, p * (1 + p)), p, 6), StripParams(1, 2))
        assert R == FpPoly(p, (1, -2, 1))
        assert not R.is_separable()

    def test_mixed_slopes_rejected(self):
        with pytest.raises(ValueError):
            O.reduced_poly(qp(strip_fixture(5, 25), 5, 8), StripParams(1, 2))

    def test_precision_enforced(self):
        with pytest.raises(PrecisionError):
            O.reduced_poly(qp(strip_fixture(7, 28), 7, 3), StripParams(1, 2))

    def test_odd_h(self):
        # the three cube roots of 10 all have t^3 / 5 = 2
        R = O.reduced_poly(qp([-10, 0, 0, 1], 5, 6), StripParams(1, 3))
        assert R == FpPoly(5, (-8, 12, -6, 1))
        assert not R.is_separable()

    def test_valuation_three_halves(self):
        # roots t with t^2 = 2 p^3, so t^2 / p^3 reduces to 2
        p = 7
        R = O.reduced_poly(qp([-2 * p**3, 0, 1], p, 8), StripParams(3, 2))
        assert R == FpPoly(p, (-2, 1))

    def test_params_need_coprime(self):
        with pytest.raises(ValueError):
            StripParams(2, 4)

    @pytest.mark.parametrize("u", [2, 3, 5, 6])
    @pytest.mark.parametrize("p", [7, 11])
    def test_unit_rescaling(self, u, p):
        """P0(u l) has roots t/u, so the roots of R get multiplied by u^(-h)."""
        base = strip_fixture(p, 4 * p)
        scaled = [c * u**i for i, c in enumerate(base)]
        s = StripParams(1, 2)
        R = O.reduced_poly(qp(base, p, 8), s)
        R_scaled = O.reduced_poly(qp(scaled, p, 8), s)
        factor = pow(u, -s.h, p)
        roots = sorted(r * factor % p for r in range(p) if R(r) == 0)
        assert sorted(r for r in range(p) if R_scaled(r) == 0) == roots


class TestStripMembership:
    @pytest.mark.parametrize("p", [7, 11, 13])
    def test_member(self, p):
        member, R = O.strip_membership(qp(strip_fixture(p, 4 * p), p, 6), StripParams(1, 2))
        assert member and R == FpPoly(p, (4, -5, 1))

    def test_mixed_slopes(self):
        p = 7
        assert O.strip_membership(qp(strip_fixture(p, p * p), p, 8), StripParams(1, 2)) == (False, None)

    def test_not_separable(self):
        p = 5
        assert O.strip_membership(qp(strip_fixture(p, p * (1 + p)), p, 6), StripParams(1, 2)) == (False, None)

    def test_requires_even_polynomial(self):
        with pytest.raises(ValueError):
            O.strip_membership(qp([-7, 1, 1], 7, 4), StripParams(1, 2))

    @pytest.mark.parametrize("p", [7, 11, 13])
    def test_same_tube_same_count(self, p):
        s = StripParams(1, 2)
        a = O.strip_membership(qp(strip_fixture(p, 4 * p), p, 8), s)[1]
        b = O.strip_membership(qp(strip_fixture(p + p**3, 4 * p + 2 * p**4), p, 8), s)[1]
        assert a == b
        assert O.curve_point_count(a) == O.curve_point_count(b)


# ---------------------------------------------------------------------------
# point counts
# ---------------------------------------------------------------------------


def quartic_of(R: FpPoly) -> list[int]:
    c = list(R.coeffs) + [0] * (3 - len(R.coeffs))
    return [c[0], 0, c[1], 0, c[2]]


class TestCurveCount:
    def test_fixture(self):
        R = FpPoly(7, (4, -5, 1))
        count = O.curve_point_count(R)
        assert count.affine == oracles.affine_points([4, 0, -5, 0, 1], 7)
        assert count.smooth

    def test_degenerate_square(self):
        count = O.curve_point_count(FpPoly(5, (1, -2, 1)))
        assert not count.smooth
        # y = +-(l^2 - 1): one point where l^2 = 1, two elsewhere
        assert count.affine == 2 * 1 + 3 * 2

    def test_wrong_degree(self):
        with pytest.raises(ValueError):
            O.curve_point_count(FpPoly(7, (1, 0, 0, 1)))

    def test_even_prime(self):
        with pytest.raises(ValueError):
            O.curve_point_count(FpPoly(2, (1, 1, 1)))

    @settings(max_examples=80, deadline=None)
    @given(st.sampled_from(PRIMES + [3]), st.integers(0, 16), st.integers(0, 16))
    def test_against_double_loop(self, p, a, b):
        R = FpPoly(p, (b, a, 1))
        count = O.curve_point_count(R)
        assert count.affine == oracles.affine_points(quartic_of(R), p)
        assert count.smooth == oracles.squarefree_mod_p(quartic_of(R), p)

    @pytest.mark.parametrize("p", PRIMES)
    def test_weil_bound(self, p):
        smooth = 0
        for a in range(p):
            for b in range(p):
                count = O.curve_point_count(FpPoly(p, (b, a, 1)))
                if count.smooth:
                    smooth += 1
                    assert abs(count.affine - p) <= 3 * math.sqrt(p)
        assert smooth > 0


class TestFamily:
    def test_fixture(self):
        count = O.family_count(0, 1, 5)
        assert count.affine == oracles.affine_points([1, 0, 0, 0, 1], 5)
        assert count.smooth

    def test_x_squared_divides(self):
        assert not O.family_count(1, 0, 5).smooth

    @settings(max_examples=60, deadline=None)
    @given(st.integers(-20, 20), st.integers(-20, 20), st.sampled_from(PRIMES))
    def test_agrees_with_curve_count(self, a, b, p):
        assume(b % p)
        assert O.family_count(a, b, p) == O.curve_point_count(FpPoly(p, (b, a, 1)))

    def test_even_prime(self):
        with pytest.raises(ValueError):
            O.family_count(0, 1, 2)


# ---------------------------------------------------------------------------
# resultants and transfer support
# ---------------------------------------------------------------------------


class TestResultant:
    def test_linear(self):
        assert O.resultant([-3, 1], [-5, 1]) == 3 - 5

    def test_quadratic_and_derivative(self):
        assert O.resultant([-1, 0, 1], [0, 2]) == -4

    def test_repeated_root(self):
        f = [1, -2, 1]
        assert O.resultant(f, [-2, 2]) == 0

    def test_zero_input(self):
        with pytest.raises(ValueError):
            O.resultant([0], [1, 1])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(-6, 6), min_size=1, max_size=4), st.lists(st.integers(-5, 5), min_size=2, max_size=4))
    def test_product_over_roots(self, roots, g):
        assume(any(g[1:]))
        f = oracles.expand([[-r, 1] for r in roots])
        assert O.resultant(f, g) == oracles.root_product_resultant(roots, g)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(-9, 9), min_size=2, max_size=4), st.lists(st.integers(-9, 9), min_size=2, max_size=4), st.sampled_from([5, 7, 11]))
    def test_reduction_mod_p(self, f, g, p):
        assume(f[-1] % p and g[-1] % p)
        over_q = O.resultant(f, g)
        assert O.resultant(FpPoly(p, tuple(f)), FpPoly(p, tuple(g))) == over_q % p


QUINTIC = oracles.expand([[0, 1], [-1, 0, 1], [-4, 0, 1]])


class TestTransfer:
    def test_squarefree_quintic(self):
        assert O.transfer_support(QUINTIC, [-1, 0, 1], [-4, 0, 1])

    def test_repeated_roots(self):
        px = oracles.expand([[0, 1], [-1, 0, 1], [-1, 0, 1]])
        assert not O.transfer_support(px, [-1, 0, 1], [-1, 0, 1])

    def test_mismatched_product(self):
        assert not O.transfer_support([0, -1, 0, 1], [-1, 0, 1], [-4, 0, 1])

    def test_zero_factors_stripped(self):
        assert O.transfer_support(QUINTIC, [0, -1, 0, 1], [0, 0, -4, 0, 1])

    def test_px_must_vanish_at_zero(self):
        with pytest.raises(ValueError):
            O.transfer_support([1, 0, 1], [-1, 0, 1], [-4, 0, 1])

    def test_over_finite_field(self):
        p = 7
        polys = [FpPoly(p, tuple(c)) for c in (QUINTIC, [-1, 0, 1], [-4, 0, 1])]
        assert O.transfer_support(*polys)
        # 4 = -3 mod 7 keeps the roots apart; 1 and 8 collide
        collide = [FpPoly(p, tuple(c)) for c in (oracles.expand([[0, 1], [-1, 0, 1], [-8, 0, 1]]), [-1, 0, 1], [-8, 0, 1])]
        assert not O.transfer_support(*collide)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(-6, 6), min_size=1, max_size=3), st.lists(st.integers(-6, 6), min_size=1, max_size=3), st.booleans())
    def test_symmetric(self, ys, zs, perturb):
        py = oracles.expand([[-y, 0, 1] for y in ys])
        pz = oracles.expand([[-z, 0, 1] for z in zs])
        px = oracles.expand([[0, 1], py, pz])
        if perturb:
            px[-2] += 1
        assume(px[0] == 0)
        assert O.transfer_support(px, py, pz) == O.transfer_support(px, pz, py)
