"""Mean oscillation norms, exponential weights and reverse Hoelder exponents."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..checks import Check, check_le
from ..exponents import as_rational
from ..grid import DyadicGrid, GridFunction
from .constants import scalar_constant
from .core import Weight

__all__ = [
    "BmoFunction",
    "ReverseHolderResult",
    "bmo_norms",
    "exp_weight_check",
    "reverse_holder_eta",
]

BISECT_RTOL = 1e-8
LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class BmoFunction:
    b: GridFunction
    bmo: float
    bmo_exp: float

    @property
    def grid(self) -> DyadicGrid:
        return self.b.grid

    def normalized(self) -> "BmoFunction":
        """``b / ||b||_exp`` so the exponential norm is exactly 1."""
        if self.bmo_exp == 0:
            raise ValueError("cannot normalize a constant function")
        c = self.bmo_exp
        return BmoFunction(GridFunction(self.grid, self.b.values / c), self.bmo / c, 1.0)

    def scaled(self, c: float) -> "BmoFunction":
        c = float(c)
        return BmoFunction(GridFunction(self.grid, self.b.values * c), self.bmo * abs(c), self.bmo_exp * abs(c))


@dataclass(frozen=True)
class ReverseHolderResult:
    eta: float
    eta_prime: float


def _deviations(grid: DyadicGrid, values: np.ndarray):
    """Per chunk of cubes: ``|b - b_Q|`` on each cube's cells and the cell mask."""
    for vals, mask in grid.groups(values):
        vals = vals[0]
        if mask is None:
            mean = vals.mean(axis=-1, keepdims=True)
            yield np.abs(vals - mean), None
        else:
            cnt = mask.sum(axis=-1, keepdims=True)
            mean = np.where(mask, vals, 0.0).sum(axis=-1, keepdims=True) / cnt
            yield np.where(mask, np.abs(vals - mean), 0.0), mask


def _exp_excess(dev: np.ndarray, mask, lam: np.ndarray) -> np.ndarray:
    """``avg_Q (exp(|b - b_Q|/lam) - 1)`` for each cube in the chunk."""
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        t = np.expm1(dev / lam[:, None])
    if mask is None:
        return t.mean(axis=-1)
    t = np.where(mask, t, 0.0)
    return t.sum(axis=-1) / mask.sum(axis=-1)


def _luxemburg(dev: np.ndarray, mask) -> np.ndarray:
    """Smallest ``lam`` with ``avg (exp(|d|/lam) - 1) <= 1``, per cube, as a feasible upper bracket.

    Jensen gives ``lam >= avg|d| / ln 2``, which seeds the lower end, so the
    result never falls below the plain mean oscillation.
    """
    n = dev.shape[-1] if mask is None else mask.sum(axis=-1)
    l1 = dev.sum(axis=-1) / n
    lo = l1 / LN2
    hi = dev.max(axis=-1) / LN2
    hi = np.maximum(hi, lo)
    out = np.zeros_like(lo)
    live = hi > 0
    if not np.any(live):
        return out
    lo, hi = lo[live], hi[live]
    d = dev[live]
    mk = None if mask is None else mask[live]
    # lo itself may already be feasible (two-valued b on a cube)
    ok_lo = _exp_excess(d, mk, lo) <= 1.0
    hi = np.where(ok_lo, lo, hi)
    for _ in range(200):
        todo = hi - lo > BISECT_RTOL * hi
        if not np.any(todo):
            break
        mid = 0.5 * (lo + hi)
        ok = _exp_excess(d, mk, mid) <= 1.0
        hi = np.where(todo & ok, mid, hi)
        lo = np.where(todo & ~ok, mid, lo)
    out[live] = hi
    return out


def bmo_norms(b: GridFunction) -> BmoFunction:
    """Mean oscillation norm and its exponential (Luxemburg) variant over the grid's cubes."""
    grid = b.grid
    bmo = 0.0
    bmo_exp = 0.0
    for dev, mask in _deviations(grid, b.values):
        n = dev.shape[-1] if mask is None else mask.sum(axis=-1)
        l1 = dev.sum(axis=-1) / n
        bmo = max(bmo, float(l1.max()))
        bmo_exp = max(bmo_exp, float(_luxemburg(dev, mask).max()))
    return BmoFunction(b, bmo, bmo_exp)


def exp_weight_check(b: BmoFunction, lam, q) -> list[Check]:
    """``[exp(lam b)]_{A_q} <= 4^(|lam| ||b||_exp)`` in the admissible range of ``lam``."""
    lam = float(lam)
    q = as_rational(q)
    if q <= 1:
        raise ValueError("q must exceed 1")
    reach = abs(lam) * b.bmo_exp
    if reach > min(1.0, float(q - 1)) * (1 + 1e-12):
        raise ValueError(f"|lambda| * ||b||_exp = {reach:.6g} exceeds min(1, q - 1) = {float(min(1, q - 1)):.6g}")
    v = Weight(b.grid, np.exp(lam * b.b.values))
    const = scalar_constant(v, "A_p", q)
    return [check_le("exp-weight.ap-bound", f"[exp(lam b)]_A_{q} <= 4^(|lam| ||b||_exp)", const, 4.0**reach)]


def reverse_holder_eta(v: Weight, cap: float = 64.0, tol: float = 1e-6) -> ReverseHolderResult:
    """Largest ``eta`` in ``[1, cap]`` with ``(avg v^eta)^(1/eta) <= 2 avg v`` on every cube.

    The condition is monotone in ``eta`` (power means increase), so a
    global bisection is exact up to ``tol``. The returned ``eta`` always
    satisfies the inequality.
    """
    grid = v.grid
    if v.power == 0:
        v = v * (1.0 / float(v.values.max()))
    vols = grid.cube_volumes
    rhs = 2.0 * grid.reduce(v.cell_masses()) / vols

    def ok(eta: float) -> bool:
        g = v ** eta
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            sums = grid.reduce(g.cell_masses())
            lhs = (sums / vols) ** (1.0 / eta)
        if not np.all(np.isfinite(lhs)) or np.any(sums <= 0):
            return False
        return bool(np.all(lhs <= rhs))

    if ok(cap):
        eta = float(cap)
    else:
        lo, hi = 1.0, float(cap)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        eta = lo
    eta_prime = math.inf if eta == 1.0 else eta / (eta - 1.0)
    return ReverseHolderResult(eta, eta_prime)
