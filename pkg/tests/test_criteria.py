import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fpotential import criteria as cr
from fpotential.errors import MonotonicityError, NotApplicableError
from fpotential.means import DECREASING, INCREASING, GeneratorFunction
from fpotential.numerics import Interval


def gen(source, lo, hi):
    return GeneratorFunction.from_expr(source, Interval(lo, hi))


class TestCurvature:
    @pytest.mark.parametrize(
        "fn,lo,hi,tag",
        [
            (lambda x: x * x, -3, 3, cr.CONVEX),
            (math.exp, -5, 5, cr.CONVEX),
            (math.log, 0.1, 10, cr.CONCAVE),
            (lambda x: -abs(x) ** 1.5, -1, 1, cr.CONCAVE),
            (lambda x: 2 * x - 1, -5, 5, cr.AFFINE),
            (math.sin, -1, 1, cr.NEITHER),
            (lambda x: x ** 3, -2, 2, cr.NEITHER),
        ],
    )
    def test_known_shapes(self, fn, lo, hi, tag):
        c = cr.curvature_classify(fn, Interval(lo, hi))
        assert c.tag == tag

    def test_neither_witnesses_recheck(self):
        c = cr.curvature_classify(math.sin, Interval(-2, 2))
        assert set(c.witnesses) == {cr.CONVEX, cr.CONCAVE}
        for direction, w in c.witnesses.items():
            gap = w.recheck(math.sin)
            assert gap == pytest.approx(w.gap, abs=1e-15)
            # concavity fails on a positive gap, convexity on a negative one
            assert (gap > 0) == (direction == cr.CONCAVE)

    def test_infinite_values(self):
        assert cr.curvature_classify(lambda x: math.inf, Interval(0, 1)).tag == cr.CONCAVE
        assert cr.curvature_classify(lambda x: -math.inf, Interval(0, 1)).tag == cr.CONVEX

    def test_inconclusive_when_nan(self):
        assert cr.curvature_classify(lambda x: math.nan, Interval(0, 1)).tag == cr.INCONCLUSIVE

    def test_deterministic(self):
        a = cr.curvature_classify(math.sin, Interval(-2, 2), seed=3)
        b = cr.curvature_classify(math.sin, Interval(-2, 2), seed=3)
        assert a == b


class TestH:
    def test_h_from_jet(self):
        assert cr.h_from_jet(2.0, 4.0) == 0.5
        assert cr.h_from_jet(1.0, 0.0) == math.inf
        assert cr.h_from_jet(-1.0, 0.0) == -math.inf
        with pytest.raises(MonotonicityError):
            cr.h_from_jet(0.0, 1.0)

    @given(st.floats(-9, 9))
    def test_exp_h_and_H(self, x):
        f = gen("exp(x)", -10, 10)
        assert cr.compute_h(f, x) == pytest.approx(1.0, rel=1e-14)
        y = math.exp(x)
        assert cr.compute_H(f, y) == pytest.approx(y, rel=1e-11)

    @given(st.floats(0.5, 2.5).filter(lambda p: abs(p - 1) > 0.05) | st.floats(-3, -0.2), st.floats(0.1, 50))
    def test_power_h(self, p, x):
        f = gen(f"x^{p!r}", 0, 100)
        assert cr.compute_h(f, x) == pytest.approx(x / (p - 1), rel=1e-12)
        # H(y) = f'^2/f'' = p x^p / (p - 1) = p y / (p - 1)
        y = x ** p
        assert cr.compute_H(f, y) == pytest.approx(p * y / (p - 1), rel=1e-9)

    def test_ln_H_is_constant(self):
        f = gen("ln(x)", 0, 100)
        for y in (-2.0, 0.0, 3.0):
            assert cr.compute_H(f, y) == pytest.approx(-1.0, rel=1e-12)

    def test_affine_H_infinite(self):
        assert cr.compute_H(gen("2*x+1", -5, 5), 0.0) == math.inf


class TestTypeRule:
    @pytest.mark.parametrize(
        "direction,sign,curv,expected",
        [
            (INCREASING, "positive", cr.CONCAVE, "a"),
            (DECREASING, "positive", cr.CONCAVE, "b"),
            (DECREASING, "negative", cr.CONVEX, "c"),
            (INCREASING, "negative", cr.CONVEX, "d"),
            (INCREASING, "positive", cr.AFFINE, "a"),
            (INCREASING, "negative", cr.AFFINE, "d"),
            (INCREASING, "positive", cr.CONVEX, cr.NEITHER),
            (DECREASING, "negative", cr.CONCAVE, cr.NEITHER),
            (INCREASING, "mixed", cr.CONCAVE, cr.NEITHER),
            (INCREASING, "zero(affine)", cr.AFFINE, cr.LINEAR),
            (INCREASING, "positive", cr.INCONCLUSIVE, cr.INCONCLUSIVE),
        ],
    )
    def test_rule(self, direction, sign, curv, expected):
        assert cr.potential_type_of(direction, sign, curv) == expected

    def test_potentials(self):
        assert cr.POTENTIAL_OF_TYPE["a"] == cr.POTENTIAL_OF_TYPE["b"] == cr.CONVEX
        assert cr.POTENTIAL_OF_TYPE["c"] == cr.POTENTIAL_OF_TYPE["d"] == cr.CONCAVE


class TestClassify:
    @pytest.mark.parametrize(
        "source,lo,hi,ptype",
        [
            ("exp(x)", -10, 10, "a"),
            ("-exp(x)", -10, 10, "b"),
            ("x^-1", 0.01, 100, "c"),
            ("ln(x)", 0.01, 100, "d"),
            ("exp(-x)", -5, 5, "c"),
            ("x^3", 0.1, 10, "a"),
            ("-x^0.5", 0.01, 100, "c"),
            ("2*x + 1", -5, 5, cr.LINEAR),
            ("sinh(x)", -1, 1, cr.NEITHER),
            ("tanh(x)", -1, 1, cr.NEITHER),
        ],
    )
    def test_types(self, source, lo, hi, ptype):
        r = cr.classify_potential(gen(source, lo, hi))
        assert r.potential_type == ptype
        assert r.definite
        d = r.to_dict()
        assert d["potential_type"] == ptype and d["potential"] == r.potential

    @given(st.floats(0.1, 10) | st.floats(-10, -0.1), st.floats(-5, 5))
    def test_gauge_changes_type_by_direction(self, A, B):
        base = gen("x^2.5", 0.01, 100)
        t = cr.classify_potential(base.affine(A, B)).potential_type
        assert t == ("a" if A > 0 else "b")


class TestIdentities:
    @pytest.mark.parametrize(
        "source,lo,hi",
        [("exp(x)", -10, 10), ("ln(x)", 0.01, 100), ("x^2.5", 0.01, 100), ("cosh(x)", 0.01, 10), ("arcosh(x)", 1, 50)],
    )
    def test_derivative_identity(self, source, lo, hi):
        assert cr.check_derivative_identity(gen(source, lo, hi)) <= 1e-4

    def test_identity_not_applicable_to_affine(self):
        with pytest.raises(NotApplicableError):
            cr.check_derivative_identity(gen("x", 0, 1))

    @pytest.mark.parametrize(
        "source,lo,hi,pair",
        [
            ("exp(x)", -5, 5, ("a", "d")),
            ("x^2", 0.1, 10, ("a", "d")),
            ("x^-1", 0.1, 10, ("c", "c")),
            ("-exp(x)", -3, 3, ("b", "b")),
            ("3*x - 1", -2, 2, (cr.LINEAR, cr.LINEAR)),
        ],
    )
    def test_dual_pairs(self, source, lo, hi, pair):
        d = cr.dual_classify(gen(source, lo, hi))
        assert (d.type_f, d.type_g) == pair
        assert d.pairing_ok is True
        assert d.duality_residual <= 1e-5

    def test_duality_residual_against_explicit_inverse(self):
        f = gen("exp(x)", -5, 5)
        g = gen("ln(x)", math.exp(-5), math.exp(5))
        assert cr.duality_residual(f, g) <= 1e-9
