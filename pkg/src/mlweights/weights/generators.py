"""Seeded weight generators: maximal-function powers, bounded log-oscillation,
exponentials of BMO functions and vector weights assembled from factorization pieces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exponents import ExponentConfig, ExponentError
from ..grid import DyadicGrid, GridFunction
from .core import VectorWeight, Weight
from .lemmas import hat_weight, reconstruct_last

__all__ = [
    "CoifmanRochberg",
    "LogBoundedOscillation",
    "ExpBmo",
    "LemmaConstructive",
    "gen_weight",
    "random_spikes",
    "log_distance",
    "dyadic_martingale",
    "random_weight",
    "random_vector_weight",
    "FAMILIES",
]

FAMILIES = ("cr", "logu", "expbmo")


@dataclass(frozen=True)
class CoifmanRochberg:
    """``(M^D f)^eta`` with ``0 < eta < 1``."""

    f: GridFunction
    eta: float


@dataclass(frozen=True)
class LogBoundedOscillation:
    """``exp(osc * U)`` with ``U`` a random dyadic martingale scaled into ``[-1, 1]``."""

    osc: float
    seed: int


@dataclass(frozen=True)
class ExpBmo:
    """``exp(lam * b)``."""

    b: GridFunction
    lam: float


@dataclass(frozen=True)
class LemmaConstructive:
    """Vector weight rebuilt from maximal-function pieces via the factorization formula."""

    seed: int
    cfg: ExponentConfig
    eta: float = 0.5


def random_spikes(grid: DyadicGrid, rng: np.random.Generator, k: int | None = None) -> GridFunction:
    """A few point masses of random height, plus a faint floor."""
    k = int(rng.integers(1, 5)) if k is None else k
    vals = np.full(grid.n_cells, 1e-3)
    vals[rng.integers(grid.n_cells, size=k)] += rng.exponential(size=k) * grid.n_cells
    return GridFunction(grid, vals, nonnegative=True)


def log_distance(grid: DyadicGrid, x0) -> GridFunction:
    """``log|x - x0|``: exact cell averages in 1D, midpoint samples otherwise."""
    if grid.dim == 1:
        x0 = float(x0)
        edges = np.arange(grid.side + 1) * grid.h - x0

        def anti(t):
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(t == 0, 0.0, t * np.log(np.abs(t)) - t)

        vals = np.diff(anti(edges)) / grid.h
        return GridFunction(grid, vals)
    c = grid.cell_centers().reshape(grid.n_cells, grid.dim)
    return GridFunction(grid, np.log(np.linalg.norm(c - np.asarray(x0, dtype=float), axis=1)))


def dyadic_martingale(grid: DyadicGrid, rng: np.random.Generator) -> GridFunction:
    """Sum over levels of independent random signs per dyadic cube, scaled into ``[-1, 1]``."""
    u = np.zeros(grid.shape)
    for level in range(1, grid.depth + 1):
        k = 1 << level
        signs = rng.choice([-1.0, 1.0], size=(k,) * grid.dim)
        for ax in range(grid.dim):
            signs = np.repeat(signs, grid.side // k, axis=ax)
        u += signs * rng.uniform(0.2, 1.0)
    peak = np.max(np.abs(u))
    return GridFunction(grid, (u / peak if peak > 0 else u).ravel())


def gen_weight(kind, grid: DyadicGrid | None = None):
    """Build a weight (or, for :class:`LemmaConstructive`, a vector weight)."""
    from ..maximal import dyadic_maximal

    if isinstance(kind, CoifmanRochberg):
        if not 0 < kind.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        mf = dyadic_maximal(kind.f).values
        if not np.all(mf > 0):
            raise ValueError("f must not vanish identically")
        return Weight(kind.f.grid, mf**kind.eta)
    if isinstance(kind, LogBoundedOscillation):
        if kind.osc <= 0:
            raise ValueError("osc must be positive")
        if grid is None:
            raise ValueError("a grid is required")
        u = dyadic_martingale(grid, np.random.default_rng(kind.seed))
        return Weight(grid, np.exp(kind.osc * u.values))
    if isinstance(kind, ExpBmo):
        return Weight(kind.b.grid, np.exp(kind.lam * kind.b.values))
    if isinstance(kind, LemmaConstructive):
        if grid is None:
            raise ValueError("a grid is required")
        return _lemma_constructive(kind, grid)
    raise TypeError(f"unknown generator {kind!r}")


def _lemma_constructive(kind: LemmaConstructive, grid: DyadicGrid) -> VectorWeight:
    cfg = kind.cfg
    d = cfg.derived()
    if d.inv_rho == 0 or d.inv_delta[-1] == 0:
        raise ExponentError("the constructive family needs finite rho and 1/delta_{m+1} > 0")
    rng = np.random.default_rng(kind.seed)

    def a1_piece() -> Weight:
        return gen_weight(CoifmanRochberg(random_spikes(grid, rng), kind.eta))

    # w_i^(theta_i/p_i) is a power of an A_1 weight, W is another
    comps = tuple(a1_piece() ** (cfg.p[i] * d.inv_theta[i]) for i in range(cfg.m - 1))
    what = hat_weight(comps, cfg)
    w_m = reconstruct_last(what, a1_piece(), cfg)
    return VectorWeight(comps + (w_m,), cfg)


def random_weight(grid: DyadicGrid, rng: np.random.Generator, family: str | None = None) -> Weight:
    """One grid-sampled weight from a randomly chosen (or given) family."""
    family = family or FAMILIES[int(rng.integers(len(FAMILIES)))]
    if family == "cr":
        return gen_weight(CoifmanRochberg(random_spikes(grid, rng), float(rng.uniform(0.1, 0.9))))
    if family == "logu":
        return gen_weight(LogBoundedOscillation(float(rng.uniform(0.1, 3.0)), int(rng.integers(2**31))), grid)
    if family == "expbmo":
        x0 = rng.uniform(0, 1, size=None if grid.dim == 1 else grid.dim)
        return gen_weight(ExpBmo(log_distance(grid, x0), float(rng.uniform(-0.9, 0.9))))
    raise ValueError(f"unknown family {family!r}")


def random_vector_weight(grid: DyadicGrid, cfg: ExponentConfig, rng: np.random.Generator,
                         family: str | None = None) -> VectorWeight:
    return VectorWeight(tuple(random_weight(grid, rng, family) for _ in range(cfg.m)), cfg)
