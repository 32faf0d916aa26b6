import numpy as np
import pytest

from mlweights.exponents import ExponentConfig
from mlweights.grid import DyadicGrid, GridFunction
from mlweights.weights import (
    FAMILIES,
    CoifmanRochberg,
    ExpBmo,
    LemmaConstructive,
    LogBoundedOscillation,
    gen_weight,
    log_distance,
    random_spikes,
    random_weight,
    scalar_constant,
)


class TestGenerators:
    def test_cr_is_a1(self):
        g = DyadicGrid(1, 7, "dyadic")
        w = gen_weight(CoifmanRochberg(random_spikes(g, np.random.default_rng(0)), 0.5))
        # (M f)^eta lies in A_1 with a constant depending only on eta
        assert scalar_constant(w, "A_1") < 10

    @pytest.mark.parametrize("eta", [0.0, 1.0, 1.5])
    def test_cr_eta_range(self, eta):
        g = DyadicGrid(1, 3)
        with pytest.raises(ValueError):
            gen_weight(CoifmanRochberg(random_spikes(g, np.random.default_rng(0)), eta))

    def test_cr_zero_input(self):
        g = DyadicGrid(1, 3)
        with pytest.raises(ValueError):
            gen_weight(CoifmanRochberg(GridFunction(g, np.zeros(8)), 0.5))

    def test_logu_oscillation_bounded(self):
        g = DyadicGrid(1, 6)
        w = gen_weight(LogBoundedOscillation(2.0, 9), g)
        assert np.all(np.abs(np.log(w.values)) <= 2.0 + 1e-12)

    def test_seed_determinism(self):
        g = DyadicGrid(1, 6)
        a = gen_weight(LogBoundedOscillation(1.0, 4), g)
        b = gen_weight(LogBoundedOscillation(1.0, 4), g)
        np.testing.assert_array_equal(a.values, b.values)

    def test_expbmo(self):
        g = DyadicGrid(1, 6)
        b = log_distance(g, 0.5)
        w = gen_weight(ExpBmo(b, -0.5))
        np.testing.assert_allclose(w.values, np.exp(-0.5 * b.values))

    def test_log_distance_exact_average(self):
        g = DyadicGrid(1, 2)
        # average of log x over [0, 1/4) is log(1/4) - 1
        assert log_distance(g, 0.0).values[0] == pytest.approx(np.log(0.25) - 1)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_families_2d(self, family):
        g = DyadicGrid(2, 3, "dyadic")
        w = random_weight(g, np.random.default_rng(0), family)
        assert w.values.shape == (g.n_cells,) and np.all(w.values > 0)

    def test_unknown(self):
        with pytest.raises(TypeError):
            gen_weight(object())
        with pytest.raises(ValueError):
            random_weight(DyadicGrid(1, 2), np.random.default_rng(0), "gaussian")

    def test_constructive_needs_grid(self):
        with pytest.raises(ValueError):
            gen_weight(LemmaConstructive(0, ExponentConfig((3, 3), (1, 1, 1))))
