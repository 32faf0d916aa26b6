from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlweights.exponents import ExponentConfig, ExponentError
from mlweights.grid import DyadicGrid, GridFunction
from mlweights.weights import (
    LemmaConstructive,
    VectorWeight,
    Weight,
    gen_weight,
    hat_weight,
    lemma2_check,
    lemma_decompose,
    lemma_reconstruct,
    ml_constant,
    norm_identity_check,
    random_vector_weight,
    random_weight,
    reconstruct_last,
    rooted_ap,
    scalar_constant,
)

OPEN_SETS = [((3, 3), (1, 1, 1)), ((4, 4), (1, 1, 1)), ((3, 3), (2, 2, 2)), ((3, 1), (1, 1, 1)),
             ((2, 5, 4), (1, 2, 1, 1))]


def _signed(grid, rng):
    return GridFunction(grid, rng.normal(size=grid.n_cells))


class TestRootedAp:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), kappa=st.sampled_from([F(1, 2), F(1), F(3, 2), F(3)]),
           lam=st.sampled_from([F(1, 4), F(1, 2), F(1), F(2)]))
    def test_matches_scalar_ap(self, seed, kappa, lam):
        g = DyadicGrid(1, 5)
        b = random_weight(g, np.random.default_rng(seed))
        expect = scalar_constant(b**kappa, "A_p", 1 + lam * kappa) ** float(1 / kappa)
        assert rooted_ap(b, 1 / kappa, lam) == pytest.approx(expect, rel=1e-10)

    def test_a1_endpoint(self):
        g = DyadicGrid(1, 5)
        b = Weight.power_law(g, F(1, 2))
        assert rooted_ap(b, 1, 0) == pytest.approx(scalar_constant(b, "A_1"), rel=1e-12)


class TestDecomposition:
    @pytest.mark.parametrize("p, r", OPEN_SETS)
    def test_checks_and_roundtrip(self, p, r):
        cfg = ExponentConfig(p, r)
        g = DyadicGrid(1, 6)
        rng = np.random.default_rng(11)
        for _ in range(5):
            wv = random_vector_weight(g, cfg, rng)
            dec = lemma_decompose(wv)
            assert dec.passed, [c for c in dec.checks if not c.passed]
            back, cert = lemma_reconstruct(wv.weights[:-1], dec.what, dec.cap_w, cfg)
            assert all(c.passed for c in cert)
            np.testing.assert_allclose(back.weights[-1].values, wv.weights[-1].values, rtol=1e-10)
            assert all(c.passed for c in norm_identity_check(_signed(g, rng), wv, dec))

    def test_hat_weight_exponents(self):
        g = DyadicGrid(1, 3)
        cfg = ExponentConfig((3, 3), (1, 1, 1))
        # rho = 3/4, so what = w_1^(1/4)
        assert hat_weight((Weight.power_law(g, 1),), cfg).power == F(1, 4)

    def test_opposite_sign_breaks_roundtrip(self):
        cfg = ExponentConfig((3, 3), (1, 1, 1))
        g = DyadicGrid(1, 5)
        wv = random_vector_weight(g, cfg, np.random.default_rng(3), family="logu")
        dec = lemma_decompose(wv)
        flipped = reconstruct_last(dec.what, dec.cap_w, cfg, sign=+1)
        assert not flipped.allclose(wv.weights[-1])
        assert reconstruct_last(dec.what, dec.cap_w, cfg).allclose(wv.weights[-1])

    def test_closed_endpoint_rejected(self):
        cfg = ExponentConfig((4, 4), (2, 2, 2))
        wv = random_vector_weight(DyadicGrid(1, 4), cfg, np.random.default_rng(0))
        with pytest.raises(ExponentError):
            lemma_decompose(wv)

    def test_infinite_constant_rejected(self):
        g = DyadicGrid(1, 4)
        w = Weight.power_law(g, 1)
        with pytest.raises(ValueError):
            lemma_decompose(VectorWeight((w, w), ExponentConfig((3, 3), (1, 1, 1))))

    def test_inconsistent_hat_rejected(self):
        cfg = ExponentConfig((3, 3), (1, 1, 1))
        wv = random_vector_weight(DyadicGrid(1, 4), cfg, np.random.default_rng(1))
        dec = lemma_decompose(wv)
        with pytest.raises(ValueError):
            lemma_reconstruct(wv.weights[:-1], dec.what * 2.0, dec.cap_w, cfg)

    @pytest.mark.parametrize("p, r", [((3, 3), (1, 1, 1)), ((4, 4), (1, 1, 1))])
    def test_constructive_family_is_finite(self, p, r):
        cfg = ExponentConfig(p, r)
        wv = gen_weight(LemmaConstructive(5, cfg), DyadicGrid(1, 6))
        assert np.isfinite(ml_constant(wv))
        assert lemma_decompose(wv).passed


class TestSecondLemma:
    @pytest.mark.parametrize("p", [(3, 3), (4, 4)])
    @pytest.mark.parametrize("r", [(1, 1, 1), (2, 2, 2)])
    def test_both_directions(self, p, r):
        cfg = ExponentConfig(p, r)
        g = DyadicGrid(1, 6)
        rng = np.random.default_rng(2)
        for _ in range(5):
            checks = lemma2_check(random_vector_weight(g, cfg, rng))
            assert all(c.passed for c in checks)
            assert {c.anchor for c in checks} == {"lemma-two.component-bound", "lemma-two.product-weight-bound",
                                                  "lemma-two.product-bound"}

    def test_needs_p_above_one(self):
        cfg = ExponentConfig((1, 1), (1, 1, 1))
        with pytest.raises(ExponentError):
            lemma2_check(random_vector_weight(DyadicGrid(1, 3), cfg, np.random.default_rng(0)))

    def test_bad_direction(self):
        cfg = ExponentConfig((3, 3), (1, 1, 1))
        with pytest.raises(ValueError):
            lemma2_check(random_vector_weight(DyadicGrid(1, 3), cfg, np.random.default_rng(0)), "sideways")
