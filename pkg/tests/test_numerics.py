import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fpotential.errors import AccuracyError, EvaluationError, MonotonicityError, OutOfRangeError
from fpotential.numerics import (
    Interval,
    Tolerance,
    differentiate_fd,
    endpoint_margin,
    gauss_legendre,
    integrate_adaptive,
    invert_monotone,
)

finite = st.floats(-50, 50, allow_nan=False)


class TestInterval:
    def test_open_membership(self):
        i = Interval(0, 1)
        assert 0.5 in i
        assert 0 not in i and 1 not in i

    @pytest.mark.parametrize("lo,hi", [(1, 1), (2, 1), (math.nan, 1)])
    def test_rejects_empty(self, lo, hi):
        with pytest.raises(ValueError):
            Interval(lo, hi)

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("0,1", (0, 1)),
            (" -10,10", (-10, 10)),
            ("(0, pi/2)", (0, math.pi / 2)),
            ("-inf,inf", (-math.inf, math.inf)),
            ("1,+inf", (1, math.inf)),
            ("-pi*2,0", (-2 * math.pi, 0)),
        ],
    )
    def test_parse(self, text, expected):
        i = Interval.parse(text)
        assert (i.lo, i.hi) == pytest.approx(expected)

    @pytest.mark.parametrize("text", ["1", "a,b", "1,2,3", "pix,1"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            Interval.parse(text)

    def test_clamped_pulls_finite_ends_inward(self):
        lo, hi = Interval(1, 100).clamped()
        assert lo == 1 + endpoint_margin(1) and hi == 100 - endpoint_margin(100)
        assert 1 < lo < hi < 100

    def test_clamped_infinite(self):
        assert Interval(-math.inf, math.inf).clamped(window=7) == (-7, 7)
        lo, hi = Interval(100, math.inf).clamped(window=50)
        assert lo > 100 and hi == pytest.approx(150)

    def test_grid_and_inner(self):
        g = Interval(0, 1).grid(11)
        assert len(g) == 11 and g[0] > 0 and g[-1] < 1
        lo, hi = Interval(0, 10).inner(0.8)
        assert lo == pytest.approx(1) and hi == pytest.approx(9)

    def test_to_list_roundtrip(self):
        i = Interval(-math.inf, 2.5)
        assert i.to_list() == ["-inf", 2.5]


class TestTolerance:
    def test_target(self):
        t = Tolerance(1e-10, 1e-8, 1e-6)
        assert t.target(0) == 1e-10
        assert t.target(1e4) == pytest.approx(1e-4)

    @pytest.mark.parametrize("kw", [{"abs_tol": -1}, {"rel_tol": math.nan}, {"decision_band": 1e-12}])
    def test_rejects_bad(self, kw):
        with pytest.raises(ValueError):
            Tolerance(**kw)


class TestQuadrature:
    def test_gauss_legendre_exact_for_polynomials(self):
        # order-10 rule integrates degree 19 exactly
        assert gauss_legendre(lambda x: x ** 19 + x ** 4, 0, 1) == pytest.approx(1 / 20 + 1 / 5, rel=1e-14)

    @pytest.mark.parametrize(
        "fn,a,b,exact",
        [
            (math.exp, -2, 2, math.exp(2) - math.exp(-2)),
            (math.sin, 0, math.pi, 2.0),
            (lambda x: 1 / x, 1, 1000, math.log(1000)),
            (lambda x: math.sqrt(x), 0, 1, 2 / 3),
            (lambda x: 1 / (1 + x * x), -50, 50, 2 * math.atan(50)),
        ],
    )
    def test_adaptive_closed_forms(self, fn, a, b, exact):
        assert integrate_adaptive(fn, a, b) == pytest.approx(exact, rel=1e-10, abs=1e-12)

    @given(finite, finite)
    def test_antisymmetry_and_zero_width(self, a, b):
        fwd = integrate_adaptive(math.cos, a, b)
        assert integrate_adaptive(math.cos, b, a) == -fwd
        assert fwd == pytest.approx(math.sin(b) - math.sin(a), abs=1e-9)
        assert integrate_adaptive(math.cos, a, a) == 0

    def test_non_finite_integrand(self):
        with pytest.raises(EvaluationError):
            integrate_adaptive(math.log, -1, 1)

    def test_budget_exhausted(self):
        with pytest.raises(AccuracyError):
            integrate_adaptive(lambda x: math.sin(1 / x), 1e-6, 1, max_evals=500)


class TestDifferentiation:
    @given(st.floats(-3, 3))
    def test_sin(self, x):
        assert differentiate_fd(math.sin, x, 1) == pytest.approx(math.cos(x), abs=1e-9)
        assert differentiate_fd(math.sin, x, 2) == pytest.approx(-math.sin(x), abs=1e-6)

    def test_exact_for_quadratics(self):
        f = lambda x: 3 * x * x - 2 * x + 1
        assert differentiate_fd(f, 1.5, 1) == pytest.approx(7, rel=1e-10)
        assert differentiate_fd(f, 1.5, 2) == pytest.approx(6, rel=1e-6)

    def test_bad_order(self):
        with pytest.raises(ValueError):
            differentiate_fd(math.sin, 0.0, 3)


class TestInversion:
    @given(st.floats(-20, 20))
    def test_exp_inverse(self, x):
        y = math.exp(x)
        assert invert_monotone(math.exp, y, Interval(-30, 30)) == pytest.approx(x, abs=1e-12)

    @given(st.floats(0.01, 100))
    def test_decreasing(self, x):
        f = lambda t: 1 / t
        got = invert_monotone(f, f(x), Interval(0, math.inf), fprime=lambda t: -1 / t ** 2)
        assert got == pytest.approx(x, rel=1e-12)

    def test_newton_and_bisection_agree(self):
        f = lambda t: t ** 3 + t
        a = invert_monotone(f, 5.0, Interval(-10, 10))
        b = invert_monotone(f, 5.0, Interval(-10, 10), fprime=lambda t: 3 * t * t + 1)
        assert a == pytest.approx(b, abs=1e-14)
        assert f(a) == pytest.approx(5.0, abs=1e-13)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            invert_monotone(math.tanh, 2.0, Interval(-5, 5))

    def test_non_monotone(self):
        with pytest.raises(MonotonicityError):
            invert_monotone(lambda t: (t - 1) ** 2 * (t + 1), 0.5, Interval(-2, 2), bracket=(-2, 2))
