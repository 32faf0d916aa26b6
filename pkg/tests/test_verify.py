import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlweights.checks import Check, check_eq, check_le
from mlweights.exponents import ExponentConfig, ExponentError
from mlweights.grid import DyadicGrid
from mlweights.verify import (
    SUITES,
    SuiteConfig,
    Verdict,
    VerificationReport,
    aggregate,
    compare_reports,
    holder_vv_check,
    refinement_divergence,
    run_suite,
    suite_rng,
)
from mlweights.weights import VectorWeight, Weight

SMALL = dict(depth=5, samples=3)
ONES = ExponentConfig((1, 1), (1, 1, 1))


class TestChecks:
    def test_le_slack(self):
        assert check_le("a", "", 1.0 + 5e-10, 1.0).passed
        assert not check_le("a", "", 1.0 + 2e-9, 1.0).passed
        assert check_le("a", "", 5.0, math.inf).passed
        assert not check_le("a", "", math.inf, 5.0).passed
        assert not check_le("a", "", math.nan, 5.0).passed

    def test_eq_exact_and_relative(self):
        assert check_eq("a", "", F(27, 4), F(27, 4)).margin == 0
        assert check_eq("a", "", 1.0, 1.0 + 1e-12).passed
        assert not check_eq("a", "", 1.0, 1.0 + 1e-8).passed

    def test_dict_roundtrip(self):
        for c in (check_le("x", "d", 1.5, F(3, 2)), check_eq("y", "d", F(1, 3), F(1, 3)), check_le("z", "d", 1.0, math.inf)):
            back = Check.from_dict(json.loads(json.dumps(c.as_dict())))
            assert back.as_dict() == c.as_dict()


class TestAggregate:
    def test_one_per_anchor_worst_kept(self):
        cs = [check_le("a", "", 1.0, 2.0), check_le("a", "", 1.9, 2.0), check_le("b", "", 0.0, 1.0),
              check_le("a", "", 1.5, 2.0)]
        out = aggregate(cs)
        assert [c.anchor for c in out] == ["a", "b"]
        assert out[0].lhs == 1.9

    def test_failure_wins(self):
        out = aggregate([check_le("a", "", 3.0, 2.0), check_le("a", "", 1.99999, 2.0)])
        assert not out[0].passed

    def test_nan_is_worst(self):
        out = aggregate([check_le("a", "", 0.0, 2.0), check_le("a", "", math.nan, 2.0)])
        assert math.isnan(out[0].lhs)


class TestDivergence:
    def test_constant_weights_finite(self):
        g = DyadicGrid(1, 2)
        res = refinement_divergence(VectorWeight((Weight.constant(g), Weight.constant(g)), ONES), depths=(4, 6, 8))
        assert res.verdict is Verdict.FINITE
        np.testing.assert_allclose(res.values, 1.0)

    def test_introduction_examples(self):
        g = DyadicGrid(1, 2)
        inv, one = Weight.power_law(g, 1), Weight.constant(g)
        fin = refinement_divergence(VectorWeight((inv, one), ONES))
        div = refinement_divergence(VectorWeight((inv, inv), ONES))
        assert fin.verdict is Verdict.FINITE and fin.values[-1] == pytest.approx(4.0)
        assert div.verdict is Verdict.DIVERGENT and math.isinf(div.values[-1])

    def test_sampled_inverse_pair_grows_slowly(self):
        # cell averages of 1/x with the first cell truncated grow like log^2 per two levels
        def make(g):
            edges = np.arange(g.n_cells + 1) * g.h
            vals = np.log(edges[2:] / edges[1:-1]) / g.h
            vals = np.concatenate([[vals[0]], vals])
            w = Weight(g, vals)
            return VectorWeight((w, w), ONES)

        res = refinement_divergence(make)
        assert all(r > 1 for r in res.ratios)
        assert res.verdict in (Verdict.INCONCLUSIVE, Verdict.DIVERGENT)
        stricter = refinement_divergence(make, growth_threshold=1.2)
        assert stricter.verdict is Verdict.DIVERGENT

    def test_grid_weight_needs_callable(self):
        g = DyadicGrid(1, 3)
        w = Weight(g, np.arange(1.0, 9.0))
        with pytest.raises(ValueError):
            refinement_divergence(VectorWeight((w, w), ONES))

    def test_depths_validated(self):
        g = DyadicGrid(1, 2)
        wv = VectorWeight((Weight.constant(g), Weight.constant(g)), ONES)
        with pytest.raises(ValueError):
            refinement_divergence(wv, depths=(4, 6))
        with pytest.raises(ValueError):
            refinement_divergence(wv, depths=(6, 4, 8))


class TestHolder:
    def test_single_row_equality(self):
        (c,) = holder_vv_check([[2.0, 3.0]], (2, 2))
        assert c.lhs == pytest.approx(c.rhs)

    def test_constant_table_equality(self):
        (c,) = holder_vv_check(np.full((7, 2), 1.7), (3, F(3, 2)))
        assert c.lhs == pytest.approx(c.rhs, rel=1e-12)
        checks = holder_vv_check(np.full((4, 5, 2), 0.6), (2, 4), "double", t=(3, 3))
        assert checks[-1].lhs == pytest.approx(checks[-1].rhs, rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), s=st.sampled_from([(1, 1), (2, 2), (F(3, 2), 3), (1, 1, 1), (4, F(4, 3))]))
    def test_random_tables(self, seed, s):
        rng = np.random.default_rng(seed)
        m = len(s)
        assert all(c.passed for c in holder_vv_check(rng.lognormal(size=(5, m)), s))
        t = tuple(reversed(s))
        assert all(c.passed for c in holder_vv_check(rng.lognormal(size=(4, 3, m)), s, "double", t=t))

    def test_preconditions(self):
        with pytest.raises(ExponentError):
            holder_vv_check(np.ones((2, 2)), (F(1, 2), 2))
        with pytest.raises(ValueError):
            holder_vv_check(-np.ones((2, 2)), (2, 2))
        with pytest.raises(ValueError):
            holder_vv_check(np.ones((2, 2, 2)), (2, 2), "double")


class TestSuites:
    @pytest.mark.parametrize("name", SUITES)
    def test_small_runs_pass(self, name):
        rep = run_suite(name, SuiteConfig(**SMALL))
        assert rep.passed, [c.as_dict() for c in rep.checks if not c.passed]
        anchors = [c.anchor for c in rep.checks]
        assert len(anchors) == len(set(anchors))

    def test_reproducible_json(self):
        a = run_suite("lemma-main", SuiteConfig(seed=7, **SMALL))
        b = run_suite("lemma-main", SuiteConfig(seed=7, **SMALL))
        assert compare_reports(a.as_dict(), b.as_dict())
        assert json.loads(a.to_json())["config"] == {"dim": 1, "depth": 5, "policy": "mesh", "seed": 7, "samples": 3}

    def test_seed_changes_values(self):
        a = run_suite("lemma-two", SuiteConfig(seed=1, **SMALL))
        b = run_suite("lemma-two", SuiteConfig(seed=2, **SMALL))
        assert not compare_reports(a.as_dict(), b.as_dict())

    def test_report_roundtrip(self):
        rep = run_suite("sparse-bound", SuiteConfig(**SMALL))
        back = VerificationReport.from_json(rep.to_json())
        assert back.as_dict() == rep.as_dict()
        assert rep.summary["constant"] == F(27, 4)

    def test_schema_keys(self):
        d = run_suite("exponents", SuiteConfig(**SMALL)).as_dict()
        assert {"suite", "config", "checks", "pass"} <= d.keys()
        assert set(d["checks"][0]) >= {"anchor", "description", "lhs", "rhs", "margin", "pass"}
        assert all(c["margin"] in (0, "0") for c in d["checks"])

    def test_two_dimensional_lemma(self):
        rep = run_suite("lemma-main", SuiteConfig(dim=2, depth=3, policy="dyadic", samples=2))
        assert rep.passed

    def test_sparse_other_exponents(self):
        rep = run_suite("sparse-bound", SuiteConfig(r=(2, 2, 2), zeta=F(1, 6), **SMALL))
        assert rep.passed and rep.summary["constant"] == 6 * 3**3  # zeta^-1 (1 - 2/3)^-3

    def test_unknown_suite_and_config(self):
        with pytest.raises(ValueError):
            run_suite("everything")
        with pytest.raises(ValueError):
            SuiteConfig(samples=0)
        with pytest.raises(ValueError):
            SuiteConfig(dim=3)

    def test_rng_streams_independent(self):
        a = suite_rng(42, "maximal").random(3)
        b = suite_rng(42, "lemma-main").random(3)
        assert not np.allclose(a, b)
        np.testing.assert_array_equal(a, suite_rng(42, "maximal").random(3))
