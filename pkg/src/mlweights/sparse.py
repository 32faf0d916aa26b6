"""Sparse families of dyadic cubes, sparse operators and forms, and the duality chain
that bounds a sparse form by weighted norms at natural exponents."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .checks import Check, check_eq, check_le
from .exponents import ExponentError, as_rational, parse_vector
from .grid import Cube, DyadicGrid, GridFunction, Policy, lp_norm
from .maximal import dyadic_maximal
from .weights.constants import ml_constant
from .weights.core import VectorWeight, Weight, product_weight

__all__ = [
    "SparseFamily",
    "DualWeightSet",
    "is_sparse",
    "random_sparse",
    "cz_sparse",
    "sparse_operator",
    "sparse_form",
    "dual_weights",
    "dual_identity_check",
    "FormCertificate",
    "form_bound_certificate",
    "necessity_extract",
    "necessity_all_cubes",
]


@dataclass(frozen=True, eq=False)
class SparseFamily:
    """Dyadic cubes with explicit disjoint sets ``E_Q`` of finest cells."""

    grid: DyadicGrid
    cubes: tuple[Cube, ...]
    eq_sets: tuple[np.ndarray, ...]
    zeta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "cubes", tuple(self.cubes))
        object.__setattr__(self, "eq_sets", tuple(np.asarray(e, dtype=np.int64) for e in self.eq_sets))
        object.__setattr__(self, "zeta", as_rational(self.zeta))
        if len(self.cubes) != len(self.eq_sets):
            raise ValueError("one E_Q set is needed per cube")

    def __len__(self) -> int:
        return len(self.cubes)

    def total_measure(self) -> float:
        return math.fsum(c.volume(self.grid) for c in self.cubes)

    def to_json(self) -> str:
        rows = [
            {"level": c.level, "index": list(c.index), "e_cells": e.tolist(), "zeta": str(self.zeta)}
            for c, e in zip(self.cubes, self.eq_sets)
        ]
        return json.dumps(rows)

    @classmethod
    def from_json(cls, text: str, grid: DyadicGrid) -> "SparseFamily":
        rows = json.loads(text)
        zetas = {as_rational(r["zeta"]) for r in rows}
        if len(zetas) > 1:
            raise ValueError("inconsistent sparsity constants")
        zeta = zetas.pop() if zetas else Fraction(1, 2)
        cubes = [grid.dyadic_cube(r["level"], tuple(r["index"])) for r in rows]
        return cls(grid, cubes, [r["e_cells"] for r in rows], zeta)


def is_sparse(S: SparseFamily) -> bool:
    """``E_Q`` inside ``Q``, ``|E_Q| > zeta |Q|`` and pairwise disjoint, checked exactly."""
    if not 0 < S.zeta < 1:
        return False
    seen = []
    for cube, e in zip(S.cubes, S.eq_sets):
        if cube.level is None:
            return False
        cells = cube.cells(S.grid)
        if len(np.unique(e)) != len(e) or not np.all(np.isin(e, cells)):
            return False
        if not Fraction(len(e)) > S.zeta * cube.n_cells():
            return False
        seen.append(e)
    allc = np.concatenate(seen) if seen else np.zeros(0, dtype=np.int64)
    return len(np.unique(allc)) == len(allc)


def _dyadic_cubes(grid: DyadicGrid):
    """Dyadic cubes from coarse to fine."""
    for level in range(grid.depth + 1):
        k = 1 << level
        for idx in np.ndindex(*(k,) * grid.dim):
            yield grid.dyadic_cube(level, idx)


def random_sparse(grid: DyadicGrid, zeta, seed: int) -> SparseFamily:
    """Each dyadic cube joins with probability 1/2 when enough of it is unclaimed."""
    zeta = as_rational(zeta)
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    free = np.ones(grid.n_cells, dtype=bool)
    cubes, sets = [], []
    for cube in _dyadic_cubes(grid):
        cells = cube.cells(grid)
        avail = cells[free[cells]]
        need = math.floor(zeta * cube.n_cells()) + 1
        if len(avail) < need or rng.random() >= 0.5:
            continue
        e = np.sort(rng.choice(avail, size=need, replace=False))
        free[e] = False
        cubes.append(cube)
        sets.append(e)
    return SparseFamily(grid, cubes, sets, zeta)


def cz_sparse(fs: Sequence[GridFunction], lam: float = 4.0) -> SparseFamily:
    """Stopping-time family for ``prod_i avg |f_i|``.

    Below each selected cube ``Q`` the maximal dyadic cubes whose product of
    averages exceeds ``lam`` times the value at ``Q`` are selected;
    ``E_Q`` is ``Q`` minus those children. The reported ``zeta`` is the largest
    rational of the form ``(|E_Q| - 1/2)/|Q|`` that all cubes beat.
    """
    if not lam > 1:
        raise ValueError("lambda must exceed 1")
    grid = fs[0].grid
    dg = grid.with_policy(Policy.DYADIC)
    avgs = np.prod(dg.reduce(np.vstack([np.abs(f.values) for f in fs])) / dg.cube_volumes * dg.cell_volume, axis=0)
    # per level arrays of cube values
    levels, pos = [], 0
    for level in range(grid.depth + 1):
        cnt = (1 << level) ** grid.dim
        levels.append(avgs[pos : pos + cnt].reshape((1 << level,) * grid.dim))
        pos += cnt
    root = grid.root()
    selected = [(root, (0, (0,) * grid.dim), float(levels[0].flat[0]))]
    cubes, sets = [], []
    head = 0
    while head < len(selected):
        cube, (level, idx), a = selected[head]
        head += 1
        chosen = []
        if a > 0:
            stack = [(level, idx)]
            while stack:
                lv, ix = stack.pop()
                if lv == grid.depth:
                    continue
                for off in np.ndindex(*(2,) * grid.dim):
                    cl, ci = lv + 1, tuple(2 * t + o for t, o in zip(ix, off))
                    v = float(levels[cl][ci])
                    if v > lam * a:
                        chosen.append((grid.dyadic_cube(cl, ci), (cl, ci), v))
                    else:
                        stack.append((cl, ci))
        cells = cube.cells(grid)
        taken = np.concatenate([c.cells(grid) for c, _, _ in chosen]) if chosen else np.zeros(0, dtype=np.int64)
        e = np.setdiff1d(cells, taken)
        if len(e) == 0:
            raise ValueError("stopping time left an empty E_Q; increase lambda")
        cubes.append(cube)
        sets.append(e)
        selected.extend(chosen)
    zeta = min(Fraction(2 * len(e) - 1, 2 * c.n_cells()) for c, e in zip(cubes, sets))
    return SparseFamily(grid, cubes, sets, zeta)


def _cube_avg(vals: np.ndarray, cells: np.ndarray) -> float:
    return math.fsum(vals[cells]) / len(cells)


def sparse_operator(S: SparseFamily, fs: Sequence[GridFunction]) -> GridFunction:
    """``sum_Q prod_i avg_Q |f_i| chi_Q``."""
    out = np.zeros(S.grid.n_cells)
    absf = [np.abs(f.values) for f in fs]
    for cube in S.cubes:
        cells = cube.cells(S.grid)
        out[cells] += math.prod(_cube_avg(a, cells) for a in absf)
    return GridFunction(S.grid, out, nonnegative=True)


def _check_form_exponents(r) -> tuple[Fraction, ...]:
    r = parse_vector(r)
    if any(x < 1 for x in r):
        raise ExponentError("every r_i must be at least 1")
    if not sum(1 / x for x in r) > 1:
        raise ExponentError("the sparse form needs sum 1/r_i > 1")
    return r


def sparse_form(S: SparseFamily, r, fs: Sequence[GridFunction], h: GridFunction) -> float:
    """``sum_Q |Q| prod_i (avg_Q |f_i|^r_i)^(1/r_i)`` with ``f_{m+1} = h``."""
    r = _check_form_exponents(r)
    inputs = list(fs) + [h]
    if len(inputs) != len(r):
        raise ValueError(f"expected {len(r) - 1} inputs plus h")
    powered = [np.abs(f.values) ** float(ri) for f, ri in zip(inputs, r)]
    terms = []
    for cube in S.cubes:
        cells = cube.cells(S.grid)
        prod = cube.volume(S.grid)
        for a, ri in zip(powered, r):
            prod *= _cube_avg(a, cells) ** float(1 / ri)
        terms.append(prod)
    return math.fsum(terms)


@dataclass(frozen=True, eq=False)
class DualWeightSet:
    sigma: tuple[Weight, ...]
    r: tuple[Fraction, ...]

    def product_gap(self) -> float:
        """Largest ``|prod_i sigma_i^(rbar/r_i) - 1|`` over cells."""
        rbar = 1 / sum(1 / x for x in self.r)
        prod = self.sigma[0] ** (rbar / self.r[0])
        for s, ri in zip(self.sigma[1:], self.r[1:]):
            prod = prod * s ** (rbar / ri)
        if prod.power != 0:
            return math.inf
        return float(np.max(np.abs(prod.values - 1.0)))


def dual_weights(wv: VectorWeight) -> DualWeightSet:
    cfg = wv.cfg
    if not cfg.is_natural:
        raise ExponentError("dual weights need natural exponents p_i = r_i / rbar")
    rbar = cfg.derived().rbar
    k = rbar / (1 - rbar)
    pc_minus_1 = 1 / (cfg.p_total - 1)
    sig = tuple(w ** (-k) for w in wv.weights) + (product_weight(wv) ** (pc_minus_1 * k),)
    return DualWeightSet(sig, tuple(cfg.r))


def dual_identity_check(wv: VectorWeight) -> list[Check]:
    """Per cube, ``[w]_Q^(1/(1-rbar)) = prod_i (avg_Q sigma_i)^(1/r_i)``, and the cellwise product identity."""
    from .weights.constants import cube_averages, ml_cube_values

    ds = dual_weights(wv)
    rbar = wv.cfg.derived().rbar
    lhs = ml_cube_values(wv) ** float(1 / (1 - rbar))
    avgs = cube_averages(list(ds.sigma))
    rhs = np.prod([a ** float(1 / ri) for a, ri in zip(avgs, ds.r)], axis=0)
    gap = float(np.max(np.abs(lhs - rhs) / np.maximum(lhs, rhs)))
    return [
        check_le("sparse.dual-product", "prod sigma_i^(rbar/r_i) = 1 cellwise (max deviation <= 1e-10)", ds.product_gap(), 1e-10, slack=0.0),
        check_le("sparse.dual-constant", "[w]_Q^(1/(1-rbar)) = prod (avg_Q sigma_i)^(1/r_i) on every cube (relative gap <= 1e-10)", gap, 1e-10, slack=0.0),
    ]


@dataclass
class FormCertificate:
    constant: Fraction
    ml: float
    lines: dict
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def c0(self) -> float:
        """The full constant ``zeta^-1 (1-rbar)^-(m+1) [w]^(1/(1-rbar))``."""
        rbar = self.lines["rbar"]
        return float(self.constant) * self.ml ** float(1 / (1 - rbar))


def form_bound_certificate(S: SparseFamily, wv: VectorWeight, fs: Sequence[GridFunction], h: GridFunction) -> FormCertificate:
    """Evaluate every line of the duality chain and check each step."""
    cfg = wv.cfg
    if not is_sparse(S):
        raise ValueError("the family is not sparse")
    if any(w.is_analytic for w in wv.weights):
        raise ValueError("the chain is evaluated on grid-sampled weights")
    ds = dual_weights(wv)
    r = tuple(cfg.r)
    m = cfg.m
    rbar = cfg.derived().rbar
    ml = ml_constant(wv)
    if not math.isfinite(ml):
        raise ValueError("the multilinear constant is infinite")
    constant = (1 / S.zeta) * (1 / (1 - rbar)) ** (m + 1)
    grid = S.grid
    inputs = list(fs) + [h]
    sig = [s.values for s in ds.sigma]
    fr = [np.abs(f.values) ** float(ri) for f, ri in zip(inputs, r)]
    inv_r = [float(1 / ri) for ri in r]
    big = float(1 / S.zeta) * ml ** float(1 / (1 - rbar))

    l0 = sparse_form(S, r, fs, h)
    t1, t2 = [], []
    for cube, e in zip(S.cubes, S.eq_sets):
        cells = cube.cells(grid)
        sig_avg = [_cube_avg(s, cells) for s in sig]
        dual_avg = [_cube_avg(f, cells) / sa for f, sa in zip(fr, sig_avg)]
        inner = math.prod(d**q for d, q in zip(dual_avg, inv_r))
        t1.append(cube.volume(grid) * inner * math.prod(sa**q for sa, q in zip(sig_avg, inv_r)))
        t2.append(len(e) * grid.cell_volume * inner)
    l1 = math.fsum(t1)
    l2 = big * math.fsum(t2)

    F = [GridFunction(grid, f / s, nonnegative=True) for f, s in zip(fr, sig)]
    M = [dyadic_maximal(Fi, si).values for Fi, si in zip(F, ds.sigma)]
    l3 = big * math.fsum(np.prod([Mi**q for Mi, q in zip(M, inv_r)], axis=0) * grid.cell_volume)
    weight_r = [float(rbar / ri) for ri in r]
    l4 = big * math.fsum(np.prod([Mi**q * s**k for Mi, q, s, k in zip(M, inv_r, sig, weight_r)], axis=0) * grid.cell_volume)
    p_r = 1 / rbar
    l5 = big * math.prod(lp_norm(GridFunction(grid, Mi), si, p_r) ** q for Mi, si, q in zip(M, ds.sigma, inv_r))
    full = float(constant) * ml ** float(1 / (1 - rbar))
    l6 = full * math.prod(lp_norm(Fi, si, p_r) ** q for Fi, si, q in zip(F, ds.sigma, inv_r))
    w = product_weight(wv)
    pc = cfg.p_total / (cfg.p_total - 1)
    norms = [lp_norm(f, wi, pi) for f, wi, pi in zip(fs, wv.weights, cfg.p)]
    l7 = full * lp_norm(h, w ** (1 - pc), pc) * math.prod(norms)

    lines = {"rbar": rbar, "L0": l0, "L1": l1, "L2": l2, "L3": l3, "L4": l4, "L5": l5, "L6": l6, "L7": l7}
    checks = [
        check_eq("sparse-chain.dual-rewrite", "L0 = L1: averages rewritten against sigma_i", l0, l1),
        check_le("sparse-chain.sparsity", "L1 <= L2: |Q| < |E_Q|/zeta and the cube constant", l1, l2),
        check_le("sparse-chain.maximal-domination", "L2 <= L3: E_Q disjoint, averages below M_sigma", l2, l3),
        check_eq("sparse-chain.product-one", "L3 = L4: prod sigma_i^(rbar/r_i) = 1", l3, l4),
        check_le("sparse-chain.holder", "L4 <= L5: Hoelder with exponents r_i/rbar", l4, l5),
        check_le("sparse-chain.maximal-norm", "L5 <= L6: M_sigma bounded on L^(1/rbar)(sigma) by (1-rbar)^-1", l5, l6),
        check_eq("sparse-chain.norm-rewrite", "L6 = L7: norms of f_i^r_i/sigma_i are the weighted norms", l6, l7),
        check_le("sparse-chain.final", "form <= zeta^-1 (1-rbar)^-(m+1) [w]^(1/(1-rbar)) ||h|| prod ||f_i||", l0, l7),
    ]
    return FormCertificate(constant, ml, lines, checks)


def necessity_extract(Q: Cube, wv: VectorWeight, C0: float) -> list[Check]:
    """Single-cube test with ``f_i = sigma_i^(1/r_i) chi_Q``.

    The test functions give ``||h|| prod ||f_i|| = |Q| prod (avg_Q sigma_i)^(rbar/r_i)``,
    so the form bound with constant ``C0`` reads
    ``prod (avg_Q sigma_i)^((1-rbar)/r_i) <= C0``. For the certificate
    constant the stronger ``prod (avg_Q sigma_i)^(1/r_i) <= C0`` also holds and
    is checked as well.
    """
    cfg = wv.cfg
    grid = wv.grid
    ds = dual_weights(wv)
    r = tuple(cfg.r)
    rbar = cfg.derived().rbar
    cells = Q.cells(grid)
    chi = np.zeros(grid.n_cells)
    chi[cells] = 1.0
    inputs = [GridFunction(grid, chi * s.values ** float(1 / ri), nonnegative=True) for s, ri in zip(ds.sigma, r)]
    sig_avg = [_cube_avg(s.values, cells) for s in ds.sigma]
    vol = Q.volume(grid)
    per_cube = math.prod(a ** float(1 / ri) for a, ri in zip(sig_avg, r))
    if Q.level is not None:
        lam = sparse_form(SparseFamily(grid, [Q], [cells], Fraction(1, 2)), r, inputs[:-1], inputs[-1])
    else:
        # non-dyadic cube: evaluate the single form term directly
        lam = vol * math.prod(_cube_avg(np.abs(f.values) ** float(ri), cells) ** float(1 / ri) for f, ri in zip(inputs, r))
    w = product_weight(wv)
    pc = cfg.p_total / (cfg.p_total - 1)
    norm_prod = lp_norm(inputs[-1], w ** (1 - pc), pc) * math.prod(
        lp_norm(f, wi, pi) for f, wi, pi in zip(inputs[:-1], wv.weights, cfg.p)
    )
    norm_expected = vol * math.prod(a ** float(rbar / ri) for a, ri in zip(sig_avg, r))
    return [
        check_eq("necessity.single-cube-form", "form on {Q} equals |Q| prod (avg_Q sigma_i)^(1/r_i)", lam, vol * per_cube),
        check_eq("necessity.norm-product", "||h|| prod ||f_i|| equals |Q| prod (avg_Q sigma_i)^(rbar/r_i)", norm_prod, norm_expected),
        check_le("necessity.form-bound", "form on {Q} <= C0 ||h|| prod ||f_i|| for the test functions", lam, C0 * norm_prod),
        check_le("necessity.cube-bound", "prod (avg_Q sigma_i)^(1/r_i) <= C0", per_cube, C0),
    ]


def necessity_all_cubes(wv: VectorWeight, C0: float) -> list[Check]:
    """Every enumerated cube passes the single-cube bound, so ``[w] <= C0^(1-rbar)``."""
    from .weights.constants import cube_averages

    ds = dual_weights(wv)
    rbar = wv.cfg.derived().rbar
    avgs = cube_averages(list(ds.sigma))
    per_cube = np.prod([a ** float(1 / ri) for a, ri in zip(avgs, ds.r)], axis=0)
    return [
        check_le("necessity.all-cubes", "sup_Q prod (avg_Q sigma_i)^(1/r_i) <= C0", float(per_cube.max()), C0),
        check_le("necessity.constant", "[w] <= C0^(1-rbar)", ml_constant(wv), C0 ** float(1 - rbar)),
    ]
