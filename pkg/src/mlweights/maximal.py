"""Dyadic weighted maximal operator and the multi-sublinear maximal function."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .checks import Check, check_le
from .exponents import as_rational, conjugate
from .grid import DyadicGrid, GridFunction, Policy, lp_norm
from .weights.core import Weight

__all__ = [
    "dyadic_maximal",
    "multilinear_maximal",
    "maximal_norm_check",
    "MaximalNormReport",
    "random_test_function",
]


def _cube_avgs(grid: DyadicGrid, vals: np.ndarray, mu: Weight | None) -> np.ndarray:
    if mu is None:
        return grid.reduce(vals * grid.cell_volume) / grid.cube_volumes
    masses = mu.cell_masses()
    if not np.all(np.isfinite(masses)):
        raise ValueError("the measure must be locally finite")
    return grid.reduce(vals * masses) / grid.reduce(masses)


def dyadic_maximal(f: GridFunction, mu: Weight | None = None) -> GridFunction:
    """``M^D_mu f``: per cell, the largest ``mu``-average of ``|f|`` over dyadic cubes containing it.

    Always uses the standard dyadic cubes regardless of the grid's policy.
    """
    grid = f.grid.with_policy(Policy.DYADIC)
    if mu is not None:
        mu = mu.on_grid(grid)
    avgs = _cube_avgs(grid, np.abs(f.values), mu)
    return GridFunction(f.grid, grid.spread_max(avgs), nonnegative=True)


def multilinear_maximal(fs: Sequence[GridFunction]) -> GridFunction:
    """Per cell, the largest ``prod_i avg_Q |f_i|`` over the grid's cubes containing it."""
    grid = fs[0].grid
    avgs = grid.reduce(np.vstack([np.abs(f.values) for f in fs]) * grid.cell_volume) / grid.cube_volumes
    return GridFunction(grid, grid.spread_max(np.prod(avgs, axis=0)), nonnegative=True)


def random_test_function(grid: DyadicGrid, rng: np.random.Generator) -> GridFunction:
    """Nonnegative input drawn from spikes, rough noise or a cube indicator."""
    n = grid.n_cells
    kind = rng.integers(3)
    if kind == 0:
        vals = np.zeros(n)
        k = int(rng.integers(1, 6))
        vals[rng.integers(n, size=k)] = rng.exponential(size=k) + 0.1
    elif kind == 1:
        vals = rng.lognormal(sigma=rng.uniform(0.1, 2.0), size=n)
    else:
        vals = np.zeros(n)
        cubes = grid.cube_bounds()
        i = int(rng.integers(grid.n_cubes))
        lo, hi = cubes[0][i], cubes[1][i]
        mask = np.ones(grid.shape, dtype=bool)
        for ax, (a, b) in enumerate(zip(lo, hi)):
            idx = np.arange(grid.side)
            shape = [1] * grid.dim
            shape[ax] = grid.side
            mask &= ((idx >= a) & (idx < b)).reshape(shape)
        vals[mask.ravel()] = 1.0
    return GridFunction(grid, vals, nonnegative=True)


@dataclass
class MaximalNormReport:
    p: object
    bound: float
    ratios: list
    check: Check

    @property
    def worst_ratio(self) -> float:
        return max(self.ratios)

    @property
    def passed(self) -> bool:
        return self.check.passed


def maximal_norm_check(mu: Weight | None, p, samples: int = 100, seed: int = 0, grid: DyadicGrid | None = None,
                       fs: Sequence[GridFunction] | None = None) -> MaximalNormReport:
    """Worst ``||M^D_mu f||_{L^p(mu)} / ||f||_{L^p(mu)}`` over random inputs, against ``p'``."""
    p = as_rational(p)
    if p <= 1:
        raise ValueError("the maximal bound needs p > 1")
    grid = grid or mu.grid
    rng = np.random.default_rng(seed)
    if fs is None:
        fs = [random_test_function(grid, rng) for _ in range(samples)]
    ratios = []
    for f in fs:
        den = lp_norm(f, mu, p)
        if den == 0:
            continue
        ratios.append(lp_norm(dyadic_maximal(f, mu), mu, p) / den)
    bound = float(conjugate(p))
    worst = max(ratios) if ratios else 0.0
    chk = check_le("maximal.lp-bound", f"||M_mu f||_L^{p}(mu) <= {p}' ||f||_L^{p}(mu)", worst, bound)
    return MaximalNormReport(p, bound, ratios, chk)
