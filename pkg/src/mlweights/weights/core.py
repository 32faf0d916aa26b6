"""Weights on a dyadic grid: piecewise-constant data times an optional power of ``x``.

A :class:`Weight` has density ``values[cell] * x**(-power)`` on ``[0, 1)``.
``power = 0`` is a plain grid-sampled weight; ``values = 1`` with ``power = a``
is the analytic weight ``|x|^-a`` with singularity at the left endpoint.
Cell integrals of the power factor are evaluated in closed form, so moments of
analytic weights are exact and diverge to ``inf`` precisely when they should.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ..exponents import ExponentConfig, as_rational
from ..grid import DyadicGrid, GridFunction, read_csv

__all__ = ["Weight", "VectorWeight", "product_weight", "power_cell_integrals"]


@lru_cache(maxsize=256)
def _power_tables(side: int, c: Fraction) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-cell ``int x^-c dx``, ``sup x^-c`` and ``inf x^-c`` on a 1D mesh."""
    h = 1.0 / side
    j = np.arange(side, dtype=float)
    x1, x2 = j * h, (j + 1) * h
    cf = float(c)
    e = 1.0 - cf
    integ = np.empty(side)
    with np.errstate(divide="ignore"):
        if c == 1:
            integ[0] = math.inf
            integ[1:] = np.log1p(1.0 / j[1:])
        else:
            integ[0] = h**e / e if e > 0 else math.inf
            integ[1:] = x1[1:] ** e * np.expm1(e * np.log1p(1.0 / j[1:])) / e
        left = np.where(x1 > 0, x1, 0.0) ** -cf if c != 0 else np.ones(side)
        right = x2**-cf
    if c > 0:
        sup, inf = left, right
    elif c < 0:
        sup, inf = right, left
    else:
        sup = inf = np.ones(side)
    for a in (integ, sup, inf):
        a.setflags(write=False)
    return integ, sup, inf


def power_cell_integrals(grid: DyadicGrid, c) -> np.ndarray:
    """``int_cell x^-c dx`` for every cell (``inf`` where it diverges)."""
    return _power_tables(grid.side, as_rational(c))[0]


class Weight:
    """Positive density on the grid: ``values * x**(-power)``."""

    __slots__ = ("grid", "values", "power")

    def __init__(self, grid: DyadicGrid, values=None, power=0, *, check: bool = True):
        vals = np.ones(grid.n_cells) if values is None else np.array(values, dtype=float).ravel()
        power = as_rational(power)
        if check:
            if vals.size != grid.n_cells:
                raise ValueError(f"expected {grid.n_cells} values, got {vals.size}")
            if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
                raise ValueError("weight values must be finite and strictly positive")
            if power != 0 and grid.dim != 1:
                raise ValueError("power-law weights are only available in dimension 1")
        vals.setflags(write=False)
        self.grid = grid
        self.values = vals
        self.power = power

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, grid: DyadicGrid, c: float = 1.0) -> "Weight":
        return cls(grid, np.full(grid.n_cells, float(c)))

    @classmethod
    def power_law(cls, grid: DyadicGrid, a) -> "Weight":
        """The analytic weight ``|x|^-a``."""
        return cls(grid, None, a)

    @classmethod
    def from_values(cls, grid: DyadicGrid, values) -> "Weight":
        return cls(grid, values)

    @classmethod
    def from_function(cls, f: GridFunction) -> "Weight":
        return cls(f.grid, f.values)

    @classmethod
    def from_csv(cls, path, grid: DyadicGrid) -> "Weight":
        return cls(grid, read_csv(path, grid))

    # -- algebra ---------------------------------------------------------------

    @property
    def is_analytic(self) -> bool:
        return self.power != 0

    def __pow__(self, s) -> "Weight":
        s = as_rational(s)
        with np.errstate(over="ignore", under="ignore"):
            vals = self.values ** float(s)
        return Weight(self.grid, vals, self.power * s, check=False)

    def __mul__(self, other) -> "Weight":
        if isinstance(other, Weight):
            if other.grid != self.grid:
                raise ValueError("weights live on different grids")
            return Weight(self.grid, self.values * other.values, self.power + other.power, check=False)
        if isinstance(other, GridFunction):
            return Weight(self.grid, self.values * other.values, self.power)
        c = float(other)
        if not c > 0:
            raise ValueError("weights can only be scaled by positive numbers")
        return Weight(self.grid, self.values * c, self.power, check=False)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Weight":
        if isinstance(other, Weight):
            return self * other ** -1
        return self * (1.0 / float(other))

    # -- cell data ---------------------------------------------------------------

    def _tables(self):
        return _power_tables(self.grid.side, self.power)

    def cell_masses(self) -> np.ndarray:
        """``int_cell w dx`` for every cell."""
        if self.power == 0:
            return self.values * self.grid.cell_volume
        with np.errstate(over="ignore", invalid="ignore"):
            return self.values * self._tables()[0]

    def cell_sup(self) -> np.ndarray:
        if self.power == 0:
            return self.values
        with np.errstate(over="ignore", invalid="ignore"):
            return self.values * self._tables()[1]

    def cell_inf(self) -> np.ndarray:
        if self.power == 0:
            return self.values
        return self.values * self._tables()[2]

    def moment(self, cube, s=1) -> float:
        """Lebesgue average of ``w**s`` over ``cube``."""
        g = self**s
        return math.fsum(g.cell_masses()[cube.cells(self.grid)]) / cube.volume(self.grid)

    def discretize(self) -> "Weight":
        """Grid-sampled copy holding cell averages.

        Cells whose average diverges are truncated to the density at the cell
        midpoint.
        """
        if self.power == 0:
            return self
        avg = self.cell_masses() / self.grid.cell_volume
        mid = self.values * self.grid.cell_centers() ** -float(self.power)
        return Weight(self.grid, np.where(np.isfinite(avg), avg, mid))

    def sample_midpoints(self) -> "Weight":
        if self.power == 0:
            return self
        return Weight(self.grid, self.values * self.grid.cell_centers() ** -float(self.power))

    def on_grid(self, grid: DyadicGrid) -> "Weight":
        """Same weight on a grid with another policy (same mesh)."""
        if grid.shape != self.grid.shape:
            raise ValueError("grids have different meshes")
        return Weight(grid, self.values, self.power, check=False)

    def as_function(self) -> GridFunction:
        if self.power != 0:
            raise ValueError("an analytic weight is not piecewise constant")
        return GridFunction(self.grid, self.values, nonnegative=True)

    def allclose(self, other: "Weight", rtol: float = 1e-10) -> bool:
        return self.power == other.power and bool(np.allclose(self.values, other.values, rtol=rtol, atol=0))

    def __repr__(self) -> str:
        kind = f"|x|^-{self.power}" if self.power else "grid"
        return f"Weight({kind}, n={self.grid.n_cells})"


@dataclass(frozen=True, eq=False)
class VectorWeight:
    weights: tuple[Weight, ...]
    cfg: ExponentConfig

    def __post_init__(self):
        ws = tuple(self.weights)
        if len(ws) != self.cfg.m:
            raise ValueError(f"expected {self.cfg.m} weights, got {len(ws)}")
        if any(w.grid.shape != ws[0].grid.shape for w in ws):
            raise ValueError("component weights live on different meshes")
        object.__setattr__(self, "weights", ws)

    @property
    def grid(self) -> DyadicGrid:
        return self.weights[0].grid

    @property
    def m(self) -> int:
        return self.cfg.m

    def __getitem__(self, i: int) -> Weight:
        return self.weights[i]

    def __iter__(self):
        return iter(self.weights)

    def product(self) -> Weight:
        return product_weight(self)

    def scaled(self, factors) -> "VectorWeight":
        return VectorWeight(tuple(w * c for w, c in zip(self.weights, factors)), self.cfg)

    def with_weights(self, weights) -> "VectorWeight":
        return VectorWeight(tuple(weights), self.cfg)

    def on_grid(self, grid: DyadicGrid) -> "VectorWeight":
        return VectorWeight(tuple(w.on_grid(grid) for w in self.weights), self.cfg)


def product_weight(wv: VectorWeight) -> Weight:
    """``w = prod_i w_i^(p/p_i)``."""
    p = wv.cfg.p_total
    out = wv.weights[0] ** (p / wv.cfg.p[0])
    for w, pi in zip(wv.weights[1:], wv.cfg.p[1:]):
        out = out * w ** (p / pi)
    return out
