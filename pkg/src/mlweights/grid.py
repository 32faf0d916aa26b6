"""Dyadic grids on the unit cube, cube enumerations and piecewise-constant functions.

Every function lives on the finest mesh of a :class:`DyadicGrid`, so integrals
and averages reduce to finite cell sums. Suprema over "all cubes" run over the
grid's enumeration policy:

* ``dyadic``   all dyadic subcubes of levels ``0..depth``;
* ``shifted``  the dyadic cubes of the ``3**dim`` grids translated by thirds of
  the side length, keeping the translated cubes that fit inside the domain;
* ``mesh``     (1D only) every interval with both endpoints on the finest mesh.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

__all__ = [
    "Policy",
    "UnsupportedPolicyError",
    "Cube",
    "DyadicGrid",
    "GridFunction",
    "average",
    "ess_sup",
    "ess_inf",
    "lp_norm",
    "weak_lp_norm",
    "read_csv",
    "write_csv",
]

_UFUNCS = {"sum": np.add, "max": np.maximum, "min": np.minimum}


class UnsupportedPolicyError(ValueError):
    pass


class Policy(str, Enum):
    DYADIC = "dyadic"
    SHIFTED = "shifted"
    MESH = "mesh"

    @classmethod
    def parse(cls, value: "Policy | str") -> "Policy":
        if isinstance(value, Policy):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "dyadic": cls.DYADIC,
            "shifted": cls.SHIFTED,
            "shifteddyadic": cls.SHIFTED,
            "mesh": cls.MESH,
            "meshintervals": cls.MESH,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown cube policy {value!r}") from None


@dataclass(frozen=True)
class Cube:
    """A cube given by half-open cell-index ranges ``[lo[k], hi[k])`` per axis.

    ``level``/``index`` are filled in when the cube is a dyadic cube.
    """

    lo: tuple[int, ...]
    hi: tuple[int, ...]
    level: int | None = field(default=None, compare=False)
    index: tuple[int, ...] | None = field(default=None, compare=False)

    @property
    def side(self) -> int:
        return self.hi[0] - self.lo[0]

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in zip(self.lo, self.hi))

    def n_cells(self) -> int:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    def cells(self, grid: "DyadicGrid") -> np.ndarray:
        """Flat (row-major) indices of the finest cells inside the cube."""
        idx = np.arange(grid.n_cells).reshape(grid.shape)
        return idx[self.slices()].ravel()

    def volume(self, grid: "DyadicGrid") -> float:
        return self.n_cells() * grid.cell_volume

    def contains(self, other: "Cube") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def contains_cell(self, grid: "DyadicGrid", cell: int) -> bool:
        coords = np.unravel_index(cell, grid.shape)
        return all(a <= c < b for a, b, c in zip(self.lo, self.hi, coords))


class _Block(NamedTuple):
    level: int
    offset: tuple[int, ...]
    count: tuple[int, ...]
    size: int


@dataclass(frozen=True)
class DyadicGrid:
    dim: int = 1
    depth: int = 10
    policy: Policy = Policy.MESH

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy.parse(self.policy))
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ValueError(f"depth must be a positive integer, got {self.depth}")
        if self.policy is Policy.MESH and self.dim != 1:
            raise UnsupportedPolicyError("mesh-interval enumeration is only available in dimension 1")

    @property
    def side(self) -> int:
        """Number of finest cells along each axis."""
        return 1 << self.depth

    @property
    def n_cells(self) -> int:
        return self.side**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.dim

    @property
    def h(self) -> float:
        return 1.0 / self.side

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def with_policy(self, policy) -> "DyadicGrid":
        return DyadicGrid(self.dim, self.depth, policy)

    def with_depth(self, depth: int) -> "DyadicGrid":
        return DyadicGrid(self.dim, depth, self.policy)

    def root(self) -> Cube:
        return Cube((0,) * self.dim, self.shape, 0, (0,) * self.dim)

    def dyadic_cube(self, level: int, index) -> Cube:
        index = (index,) if np.ndim(index) == 0 else tuple(index)
        if not 0 <= level <= self.depth or len(index) != self.dim:
            raise ValueError("cube outside the grid")
        s = 1 << (self.depth - level)
        if any(not 0 <= i < (1 << level) for i in index):
            raise ValueError("cube outside the grid")
        return Cube(tuple(int(i) * s for i in index), tuple((int(i) + 1) * s for i in index), level, tuple(int(i) for i in index))

    def cell_centers(self) -> np.ndarray:
        """Cell midpoints; shape ``(n_cells,)`` in 1D and ``(n_cells, 2)`` in 2D."""
        c = (np.arange(self.side) + 0.5) * self.h
        if self.dim == 1:
            return c
        x, y = np.meshgrid(c, c, indexing="ij")
        return np.stack([x.ravel(), y.ravel()], axis=1)

    # -- enumeration -------------------------------------------------------

    @cached_property
    def _blocks(self) -> tuple[_Block, ...]:
        blocks = []
        for level in range(self.depth + 1):
            s = 1 << (self.depth - level)
            if self.policy is Policy.SHIFTED:
                offsets = sorted({((2 * j * s + 3) // 6) % s for j in range(3)})
            else:
                offsets = [0]
            for off in itertools.product(offsets, repeat=self.dim):
                count = tuple((self.side - t) // s for t in off)
                if min(count) > 0:
                    blocks.append(_Block(level, off, count, s))
        return tuple(blocks)

    @cached_property
    def n_cubes(self) -> int:
        if self.policy is Policy.MESH:
            return self.side * (self.side + 1) // 2
        return sum(math.prod(b.count) for b in self._blocks)

    @cached_property
    def _bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.policy is Policy.MESH:
            a, b = np.triu_indices(self.side + 1, k=1)
            return a[:, None], b[:, None]
        los = []
        for blk in self._blocks:
            axes = [t + blk.size * np.arange(c) for t, c in zip(blk.offset, blk.count)]
            grids = np.meshgrid(*axes, indexing="ij")
            los.append(np.stack([g.ravel() for g in grids], axis=1))
        lo = np.concatenate(los)
        sizes = np.concatenate([np.full(math.prod(b.count), b.size) for b in self._blocks])
        return lo, lo + sizes[:, None]

    def cube_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays ``lo, hi`` of shape ``(n_cubes, dim)`` in enumeration order."""
        return self._bounds

    @cached_property
    def cube_volumes(self) -> np.ndarray:
        lo, hi = self._bounds
        return np.prod(hi - lo, axis=1) * self.cell_volume

    def cubes(self) -> list[Cube]:
        lo, hi = self._bounds
        out = []
        for a, b in zip(lo.tolist(), hi.tolist()):
            s = b[0] - a[0]
            level = index = None
            if s & (s - 1) == 0 and all(bb - aa == s for aa, bb in zip(a, b)) and all(x % s == 0 for x in a):
                level = self.depth - s.bit_length() + 1
                index = tuple(x // s for x in a)
            out.append(Cube(tuple(a), tuple(b), level, index))
        return out

    # -- reductions over the enumeration ------------------------------------

    def _as_rows(self, values) -> tuple[np.ndarray, bool]:
        arr = np.asarray(values, dtype=float)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.shape[-1] != self.n_cells:
            raise ValueError(f"expected {self.n_cells} cell values, got {arr.shape[-1]}")
        return arr, single

    def _block_view(self, arr: np.ndarray, blk: _Block) -> np.ndarray:
        k, s = arr.shape[0], blk.size
        if self.dim == 1:
            (t,), (c,) = blk.offset, blk.count
            return arr[:, t : t + c * s].reshape(k, c, s)
        (t0, t1), (c0, c1) = blk.offset, blk.count
        sq = arr.reshape(k, self.side, self.side)[:, t0 : t0 + c0 * s, t1 : t1 + c1 * s]
        return sq.reshape(k, c0, s, c1, s).transpose(0, 1, 3, 2, 4).reshape(k, c0 * c1, s * s)

    def reduce(self, values, op: str = "sum") -> np.ndarray:
        """Reduce cell values over every enumerated cube.

        ``values`` has shape ``(n_cells,)`` or ``(k, n_cells)``; the result has
        shape ``(n_cubes,)`` or ``(k, n_cubes)``. ``op`` is sum, max or min.
        """
        arr, single = self._as_rows(values)
        uf = _UFUNCS[op]
        if self.policy is Policy.MESH:
            n = self.side
            out = np.empty((arr.shape[0], self.n_cubes))
            pos = 0
            for a in range(n):
                out[:, pos : pos + n - a] = uf.accumulate(arr[:, a:], axis=1)
                pos += n - a
        else:
            out = np.concatenate([uf.reduce(self._block_view(arr, b), axis=-1) for b in self._blocks], axis=1)
        return out[0] if single else out

    def spread_max(self, cube_values) -> np.ndarray:
        """Per cell, the maximum of ``cube_values`` over enumerated cubes containing it."""
        vals = np.asarray(cube_values, dtype=float)
        res = np.full(self.shape, -np.inf)
        pos = 0
        if self.policy is Policy.MESH:
            n = self.side
            for a in range(n):
                row = vals[pos : pos + n - a]
                res[a:] = np.maximum(res[a:], np.maximum.accumulate(row[::-1])[::-1])
                pos += n - a
            return res
        for blk in self._blocks:
            cnt = math.prod(blk.count)
            v = vals[pos : pos + cnt].reshape(blk.count)
            pos += cnt
            for ax in range(self.dim):
                v = np.repeat(v, blk.size, axis=ax)
            sl = tuple(slice(t, t + c * blk.size) for t, c in zip(blk.offset, blk.count))
            res[sl] = np.maximum(res[sl], v)
        return res.ravel()

    def groups(self, values) -> Iterator[tuple[np.ndarray, np.ndarray | None]]:
        """Yield per-cube cell values in enumeration order, chunk by chunk.

        Each item is ``(vals, mask)`` with ``vals`` of shape
        ``(k, cubes_in_chunk, cells_per_cube)``; ``mask`` marks which cells
        belong to each cube (``None`` means all of them).
        """
        arr, _ = self._as_rows(values)
        if self.policy is not Policy.MESH:
            for blk in self._blocks:
                yield self._block_view(arr, blk), None
            return
        n = self.side
        for a in range(n):
            tail = arr[:, a:]
            length = n - a
            vals = np.broadcast_to(tail[:, None, :], (arr.shape[0], length, length))
            yield vals, np.tri(length, dtype=bool)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """One real value per finest cell, row-major."""

    grid: DyadicGrid
    values: np.ndarray
    nonnegative: bool = False

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        if vals.size != self.grid.n_cells:
            raise ValueError(f"expected {self.grid.n_cells} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        if self.nonnegative and np.any(vals < 0):
            raise ValueError("negative value in a nonnegative grid function")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: DyadicGrid, c: float = 1.0) -> "GridFunction":
        return cls(grid, np.full(grid.n_cells, float(c)), nonnegative=c >= 0)

    @classmethod
    def indicator(cls, grid: DyadicGrid, cube: Cube) -> "GridFunction":
        vals = np.zeros(grid.shape)
        vals[cube.slices()] = 1.0
        return cls(grid, vals.ravel(), nonnegative=True)

    @classmethod
    def from_callable(cls, grid: DyadicGrid, fn) -> "GridFunction":
        """Sample ``fn`` at cell midpoints."""
        return cls(grid, np.asarray(fn(grid.cell_centers()), dtype=float))

    @classmethod
    def from_csv(cls, path, grid: DyadicGrid) -> "GridFunction":
        return cls(grid, read_csv(path, grid))

    def to_csv(self, path) -> None:
        write_csv(path, self.values)

    def __abs__(self) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values), nonnegative=True)

    def __add__(self, other) -> "GridFunction":
        other = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values + other)

    def __mul__(self, other) -> "GridFunction":
        other = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.grid, self.values * other)

    __rmul__ = __mul__

    def __pow__(self, s) -> "GridFunction":
        return GridFunction(self.grid, np.abs(self.values) ** float(s), nonnegative=True)

    # the weight protocol used by norms and averages
    def cell_masses(self) -> np.ndarray:
        return self.values * self.grid.cell_volume

    def cell_sup(self) -> np.ndarray:
        return self.values

    def cell_inf(self) -> np.ndarray:
        return self.values


def read_csv(path, grid: DyadicGrid | None = None) -> np.ndarray:
    rows = [line.strip() for line in Path(path).read_text().splitlines()]
    vals = np.array([float(r.split(",")[0]) for r in rows if r], dtype=float)
    if grid is not None and vals.size != grid.n_cells:
        raise ValueError(f"{path}: expected {grid.n_cells} rows, found {vals.size}")
    return vals


def write_csv(path, values) -> None:
    Path(path).write_text("".join(f"{v!r}\n" for v in map(float, np.ravel(values))))


def _masses(grid: DyadicGrid, mu) -> np.ndarray:
    if mu is None:
        return np.full(grid.n_cells, grid.cell_volume)
    return mu.cell_masses()


def _product(f_vals: np.ndarray, masses: np.ndarray) -> np.ndarray:
    # 0 * inf is 0 here: cells where the integrand vanishes carry no mass
    with np.errstate(invalid="ignore"):
        out = f_vals * masses
    return np.where(f_vals == 0, 0.0, out)


def average(f, cube: Cube, mu=None) -> float:
    """Average of ``f`` over ``cube`` with respect to ``mu`` (Lebesgue if omitted)."""
    grid = f.grid
    cells = cube.cells(grid)
    if isinstance(f, GridFunction):
        m = _masses(grid, mu)[cells]
        num = math.fsum(_product(f.values[cells], m))
        den = math.fsum(m)
    else:
        if mu is not None:
            num = math.fsum((f * mu).cell_masses()[cells])
            den = math.fsum(mu.cell_masses()[cells])
        else:
            num = math.fsum(f.cell_masses()[cells])
            den = cube.volume(grid)
    if math.isinf(den):
        raise ValueError("measure is not locally finite on this cube")
    return num / den


def ess_sup(f, cube: Cube) -> float:
    return float(np.max(f.cell_sup()[cube.cells(f.grid)]))


def ess_inf(f, cube: Cube) -> float:
    return float(np.min(f.cell_inf()[cube.cells(f.grid)]))


def lp_norm(f, w=None, p=1) -> float:
    """``(int |f|^p w dx)^(1/p)``; ``f`` may be a grid function or a weight."""
    p = float(p)
    if p <= 0:
        raise ValueError("p must be positive")
    if isinstance(f, GridFunction):
        terms = _product(np.abs(f.values) ** p, _masses(f.grid, w))
    else:
        g = f**p
        terms = (g * w).cell_masses() if w is not None else g.cell_masses()
    total = math.fsum(terms)
    return total ** (1.0 / p)


def weak_lp_norm(f: GridFunction, w=None, p=1) -> float:
    """``sup_t t * w({|f| > t})^(1/p)``, attained just below a value of ``|f|``.

    Each level ``v`` is evaluated as ``(sum_{|f|>=v} v^p w(cell))^(1/p)`` with
    correctly rounded sums, so the result never exceeds :func:`lp_norm`.
    """
    p = float(p)
    if p <= 0:
        raise ValueError("p must be positive")
    a = np.abs(f.values)
    m = _masses(f.grid, w)
    best = 0.0
    for v in np.unique(a[a > 0]):
        sel = a >= v
        best = max(best, math.fsum(_product(np.full(int(sel.sum()), v) ** p, m[sel])) ** (1.0 / p))
    return best
