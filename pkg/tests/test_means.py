import json
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fpotential.errors import DomainError, InputError, MonotonicityError
from fpotential.means import (
    DECREASING,
    INCREASING,
    GeneratorFunction,
    WeightedDistribution,
    cgf,
    derivative_density,
    directional_derivatives,
    eval_potential,
    mean_of_f,
)
from fpotential.numerics import Interval


def gen(source, lo, hi):
    return GeneratorFunction.from_expr(source, Interval(lo, hi))


EXP = gen("exp(x)", -20, 20)
LN = gen("ln(x)", 0, 100)
RECIP = gen("1/x", 0, 100)
SQ = gen("x^2", 0, 100)


@st.composite
def distributions(draw, lo=0.1, hi=10.0, max_atoms=6):
    n = draw(st.integers(1, max_atoms))
    xs = draw(st.lists(st.floats(lo, hi), min_size=n, max_size=n))
    ws = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    return WeightedDistribution.normalized(xs, ws)


class TestDistribution:
    def test_validation(self):
        with pytest.raises(InputError):
            WeightedDistribution((1.0, 2.0), (0.5, 0.6))
        with pytest.raises(InputError):
            WeightedDistribution((1.0,), (0.5, 0.5))
        with pytest.raises(InputError):
            WeightedDistribution((1.0, 2.0), (1.0, 0.0))
        with pytest.raises(InputError):
            WeightedDistribution((math.nan,), (1.0,))
        with pytest.raises(InputError):
            WeightedDistribution((), ())

    def test_parse_atoms(self):
        d = WeightedDistribution.parse_atoms("1:0.25, 4:0.75")
        assert d.xs == (1.0, 4.0) and d.ps == (0.25, 0.75)
        with pytest.raises(InputError):
            WeightedDistribution.parse_atoms("1;0.5")

    @given(distributions())
    def test_json_roundtrip(self, d):
        assert WeightedDistribution.from_json(json.dumps(d.to_json())) == d

    def test_from_json_rejects(self):
        with pytest.raises(InputError):
            WeightedDistribution.from_json('{"x": 1}')
        with pytest.raises(InputError):
            WeightedDistribution.from_json('[{"x": 1}]')

    def test_shifted(self):
        d = WeightedDistribution((1.0, 2.0), (0.5, 0.5))
        assert d.shifted([1.0, -1.0], 0.5).xs == (1.5, 1.5)
        assert not d.shifted([1.0, -1.0], 0.5).nondegenerate


class TestGenerator:
    def test_direction_and_image(self):
        assert EXP.direction == INCREASING and EXP.sign == 1
        assert RECIP.direction == DECREASING and RECIP.sign == -1
        lo, hi = EXP.image
        assert lo == pytest.approx(math.exp(-20), rel=1e-6) and hi == pytest.approx(math.exp(20), rel=1e-6)

    def test_rejects_non_monotone(self):
        with pytest.raises(MonotonicityError):
            gen("x^2", -1, 1)

    @given(st.floats(-9, 9))
    def test_inverse(self, x):
        assert EXP.inverse(math.exp(x)) == pytest.approx(x, abs=1e-12)

    def test_affine_jets(self):
        g = EXP.affine(-2.0, 3.0)
        assert tuple(g.jet(0.5)) == pytest.approx((-2 * math.exp(0.5) + 3, -2 * math.exp(0.5), -2 * math.exp(0.5)))
        assert g.direction == DECREASING
        with pytest.raises(InputError):
            EXP.affine(0.0, 1.0)

    @given(st.floats(-4, 4))
    def test_inverted_jets_match_ln(self, x):
        g = gen("exp(x)", -5, 5).inverted()
        y = math.exp(x)
        assert tuple(g.jet(y)) == pytest.approx((x, 1 / y, -1 / y ** 2), rel=1e-11)


class TestPotential:
    @given(distributions())
    def test_closed_form_means(self, d):
        arith = math.fsum(p * x for x, p in d.atoms)
        geo = math.exp(math.fsum(p * math.log(x) for x, p in d.atoms))
        harm = 1 / math.fsum(p / x for x, p in d.atoms)
        quad = math.sqrt(math.fsum(p * x * x for x, p in d.atoms))
        assert eval_potential(gen("x", -100, 100), d) == pytest.approx(arith, rel=1e-12)
        assert eval_potential(LN, d) == pytest.approx(geo, rel=1e-12)
        assert eval_potential(RECIP, d) == pytest.approx(harm, rel=1e-12)
        assert eval_potential(SQ, d) == pytest.approx(quad, rel=1e-12)

    @given(distributions(-8, 8))
    def test_exponential_mean_is_cgf_at_one(self, d):
        assert eval_potential(EXP, d) == pytest.approx(cgf(d, 1.0), abs=1e-12)

    def test_worked_examples(self):
        assert eval_potential(LN, WeightedDistribution.parse_atoms("1:0.5,4:0.5")) == pytest.approx(2.0, rel=1e-14)
        assert eval_potential(RECIP, WeightedDistribution.parse_atoms("1:0.5,3:0.5")) == pytest.approx(1.5, rel=1e-14)
        assert eval_potential(RECIP, WeightedDistribution((1.0, 1 / 3), (0.5, 0.5))) == pytest.approx(0.5, rel=1e-14)

    def test_point_mass(self):
        assert eval_potential(EXP, WeightedDistribution((3.0,), (1.0,))) == 3.0

    def test_domain_error(self):
        with pytest.raises(DomainError):
            eval_potential(LN, WeightedDistribution((-1.0, 2.0), (0.5, 0.5)))

    @given(distributions(0.1, 10), st.floats(0.1, 10) | st.floats(-10, -0.1), st.floats(-5, 5))
    def test_internality_and_gauge_invariance(self, d, A, B):
        for f in (EXP, LN, RECIP, SQ):
            lam = eval_potential(f, d)
            assert min(d.xs) - 1e-12 <= lam <= max(d.xs) + 1e-12
            assert eval_potential(f.affine(A, B), d) == pytest.approx(lam, rel=1e-9, abs=1e-9)

    @given(distributions(0.1, 5), st.lists(st.floats(0, 2), min_size=6, max_size=6))
    def test_monotone_in_atoms(self, d, bumps):
        up = WeightedDistribution(tuple(x + b for x, b in zip(d.xs, bumps)), d.ps)
        for f in (EXP, LN, RECIP, SQ):
            assert eval_potential(f, d) <= eval_potential(f, up) + 1e-12

    def test_mean_of_f(self):
        d = WeightedDistribution((1.0, 2.0), (0.5, 0.5))
        assert mean_of_f(SQ, d) == 2.5


class TestDerivatives:
    @given(distributions(-5, 5), st.lists(st.floats(-1, 1), min_size=6, max_size=6))
    def test_exponential_closed_form(self, d, psi):
        # lambda = ln sum p e^x: first derivative E_q[psi], second Var_q[psi] under Gibbs weights q
        psi = psi[: len(d)]
        lam = eval_potential(EXP, d)
        q = [p * math.exp(x - lam) for x, p in d.atoms]
        mean = math.fsum(w * v for w, v in zip(q, psi))
        var = math.fsum(w * (v - mean) ** 2 for w, v in zip(q, psi))
        first, second = directional_derivatives(EXP, d, psi)
        assert first == pytest.approx(mean, abs=1e-10)
        assert second == pytest.approx(var, abs=1e-10)

    @given(distributions(-5, 5))
    def test_gibbs_density(self, d):
        rho = derivative_density(EXP, d)
        assert math.fsum(p * r for p, r in zip(d.ps, rho)) == pytest.approx(1.0, abs=1e-12)
        assert all(r > 0 for r in rho)

    def test_arithmetic_mean_is_linear(self):
        d = WeightedDistribution((1.0, 2.0, 5.0), (0.2, 0.3, 0.5))
        first, second = directional_derivatives(gen("3*x+1", -10, 10), d, [1.0, -2.0, 0.5])
        assert first == pytest.approx(0.2 - 0.6 + 0.25) and second == 0.0

    def test_psi_length(self):
        with pytest.raises(InputError):
            directional_derivatives(EXP, WeightedDistribution((1.0, 2.0), (0.5, 0.5)), [1.0])


class TestCgf:
    @given(distributions(-50, 50), st.floats(-30, 30))
    def test_log_sum_exp_matches_numpy(self, d, t):
        ref = np.logaddexp.reduce([math.log(p) + t * x for x, p in d.atoms])
        assert cgf(d, t) == pytest.approx(float(ref), rel=1e-12, abs=1e-12)

    def test_no_overflow(self):
        d = WeightedDistribution((1000.0, 1001.0), (0.5, 0.5))
        assert cgf(d, 1.0) == pytest.approx(1001 + math.log((1 + math.exp(-1)) / 2))
        assert cgf(d, 0.0) == 0.0
