import dataclasses
import json

import numpy as np
import pytest

from fpotential import verify as vf
from fpotential.means import GeneratorFunction
from fpotential.numerics import Interval


def gen(source, lo, hi):
    return GeneratorFunction.from_expr(source, Interval(lo, hi))


@pytest.fixture(scope="module")
def table():
    return vf.reproduce_table()


class TestTable:
    def test_catalog_shape(self):
        rows = vf.load_table()
        assert [r.label for r in rows] == [str(i) for i in range(1, 14)]
        assert [r.expected_potential for r in rows] == ["convex"] * 4 + ["concave"] * 9
        for r in rows:
            # windows sit inside the natural intervals
            assert r.interval.lo <= r.domain.lo < r.domain.hi <= r.interval.hi

    def test_all_rows_pass(self, table):
        assert [r.row.label for r in table if not r.passed] == []
        assert all(r.h_max_rel_error <= 1e-6 for r in table)

    @pytest.mark.parametrize(
        "label,ptype", [("1", "a"), ("5", "d"), ("8", "d"), ("9", "c"), ("12", "c")]
    )
    def test_selected_rows(self, table, label, ptype):
        r = next(r for r in table if r.row.label == label)
        assert r.report.potential_type == ptype

    def test_deterministic(self, table):
        again = vf.reproduce_table()
        assert [r.to_dict() for r in again] == [r.to_dict() for r in table]

    def test_failures_are_recorded(self):
        row = vf.load_table()[0]
        wrong = dataclasses.replace(row, expected_f_type="d", expected_potential="concave")
        res = vf.check_row(wrong)
        assert not res.passed and any("type" in d for d in res.diagnostics)
        broken = dataclasses.replace(row, f_source="ln(x)", domain=Interval(-1, 1))
        res = vf.check_row(broken)
        assert not res.passed and res.report is None and res.diagnostics


class TestJensen:
    def test_exp_has_no_convexity_violation(self):
        res = vf.jensen_search(gen("exp(x)", -5, 5), 10_000, seed=0)
        assert res.convexity is None

    def test_affine_has_no_violation(self):
        res = vf.jensen_search(gen("2*x - 3", -5, 5), 2000, seed=1)
        assert res.convexity is None and res.concavity is None

    @pytest.mark.parametrize("source", ["sinh(x)", "arsinh(x)", "tanh(x)", "artanh(x)"])
    def test_unclassifiable_both_directions(self, source):
        f = gen(source, -1, 1)
        res = vf.jensen_search(f, 10_000, seed=0)
        assert res.convexity is not None and res.concavity is not None
        for rec in (res.convexity, res.concavity):
            restored = vf.CounterexampleRecord.from_dict(json.loads(json.dumps(rec.to_dict())))
            assert restored == rec
            assert restored.recheck(f)

    def test_tampered_record_fails_recheck(self):
        f = gen("sinh(x)", -1, 1)
        rec = vf.jensen_search(f, 2000, seed=0).convexity
        assert not dataclasses.replace(rec, lhs=rec.lhs + 1e-6).recheck(f)
        flipped = dataclasses.replace(rec, direction=vf.VIOLATES_CONCAVITY)
        assert not flipped.recheck(f)

    def test_bit_reproducible(self):
        f = gen("tanh(x)", -1, 1)
        a = vf.jensen_search(f, 3000, seed=42).to_dict()
        b = vf.jensen_search(f, 3000, seed=42).to_dict()
        assert json.dumps(a) == json.dumps(b)
        assert a != vf.jensen_search(f, 3000, seed=43).to_dict()

    def test_search_stays_in_central_band(self):
        f = gen("sinh(x)", -1, 1)
        res = vf.jensen_search(f, 2000, seed=5)
        for rec in (res.convexity, res.concavity):
            for d in (rec.dist_a, rec.dist_b):
                assert all(-0.8 - 1e-9 <= x <= 0.8 + 1e-9 for x in d.xs)
                assert 0.1 <= d.ps[0] <= 0.9


class TestSuite:
    @pytest.mark.parametrize("source,lo,hi,ptype", [("exp(x)", -5, 5, "a"), ("ln(x)", 0.01, 100, "d"), ("x^-1", 0.1, 10, "c")])
    def test_definite_generators_pass(self, source, lo, hi, ptype):
        rep = vf.consistency_suite(gen(source, lo, hi), trials=150, seed=7, jensen_trials=1000)
        assert rep.classification == ptype
        assert rep.passed, [p.to_dict() for p in rep.properties if not p.passed]

    def test_exp_specific_properties(self):
        rep = vf.consistency_suite(gen("exp(x)", -5, 5), trials=100, seed=1, jensen_trials=500)
        assert not rep.get("gibbs_normalization").skipped
        assert not rep.get("h_superadditivity").skipped
        assert rep.get("derivative_identity").worst_residual <= 1e-4

    def test_concave_skips_superadditivity(self):
        rep = vf.consistency_suite(gen("ln(x)", 0.01, 100), trials=50, seed=1, jensen_trials=200)
        assert rep.get("h_superadditivity").skipped
        assert rep.get("gibbs_normalization").skipped

    def test_neither(self):
        rep = vf.consistency_suite(gen("sinh(x)", -1, 1), trials=100, seed=7, jensen_trials=10_000)
        assert rep.classification == "neither"
        assert rep.get("classifier_soundness").skipped
        jensen = rep.get("jensen_search")
        assert jensen.passed and set(jensen.witness) == {vf.VIOLATES_CONVEXITY, vf.VIOLATES_CONCAVITY}
        assert rep.passed

    def test_report_json(self):
        rep = vf.consistency_suite(gen("x", -1, 1), trials=30, seed=3, jensen_trials=100)
        doc = json.loads(json.dumps(rep.to_dict()))
        assert {"suite", "seed", "tolerances", "properties"} <= set(doc)
        for p in doc["properties"]:
            assert {"name", "pass", "worst_residual"} <= set(p)
        assert doc["classification"] == "linear" and doc["pass"]

    def test_failures_are_recorded_not_raised(self):
        # a convex potential forced to claim concavity
        f = gen("exp(x)", -5, 5)
        rep = vf.consistency_suite(f, trials=50, seed=0, jensen_trials=200)
        report = vf.cr.classify_potential(f)
        report.potential_type = "d"
        res = vf.check_soundness(f, report, np.random.default_rng(0), 200, -4, 4)
        assert not res.passed and res.witness is not None
        assert rep.passed
