"""Exponential perturbation of a multilinear weight by BMO functions.

Given ``v`` with finite constant and ``b_i`` normalized in the exponential
oscillation norm, the weights ``w_i = v_i exp(-gamma_i s_i b_i)`` keep a finite
constant, bounded by ``2^(gap + 2 sum|gamma_i|) [v]`` as long as every
``|gamma_i|`` stays below ``(1/eta') min(1/delta_i, s/(delta_{m+1} s_i))``,
where ``eta`` is a common reverse Hoelder exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..checks import Check, check_le
from .bmo import BmoFunction, ReverseHolderResult, reverse_holder_eta
from .constants import ml_constant
from .core import VectorWeight, Weight, product_weight

__all__ = ["CommutatorReport", "common_reverse_holder", "max_gamma", "commutator_perturb"]

NORMALIZED_TOL = 1e-9


@dataclass
class CommutatorReport:
    eta: float
    eta_prime: float
    gamma: tuple
    gamma_max: tuple
    ml_v: float
    ml_w: float
    bound: float
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def common_reverse_holder(vv: VectorWeight, cap: float = 64.0) -> ReverseHolderResult:
    """Smallest reverse Hoelder exponent over ``v^(delta_{m+1}/s)`` and ``v_i^(-delta_i/s_i)``."""
    cfg = vv.cfg
    d = cfg.derived()
    pieces = []
    if d.inv_delta[-1] != 0:
        pieces.append(product_weight(vv) ** (1 / (d.inv_delta[-1] * cfg.p_total)))
    for vi, si, inv_d in zip(vv.weights, cfg.p, d.inv_delta):
        if inv_d != 0:
            pieces.append(vi ** (-1 / (inv_d * si)))
    eta = min((reverse_holder_eta(w, cap) for w in pieces), key=lambda r: r.eta, default=None)
    return eta or ReverseHolderResult(cap, cap / (cap - 1))


def max_gamma(vv: VectorWeight, rh: ReverseHolderResult | None = None) -> tuple[float, ...]:
    """``(1/eta') min(1/delta_i, s/(delta_{m+1} s_i))`` for each component."""
    cfg = vv.cfg
    d = cfg.derived()
    rh = rh or common_reverse_holder(vv)
    out = []
    for i in range(cfg.m):
        a = d.inv_delta[i]
        b = d.inv_delta[-1] * cfg.p_total / cfg.p[i]
        out.append(float(min(a, b)) / rh.eta_prime)
    return tuple(out)


def commutator_perturb(vv: VectorWeight, bs: Sequence[BmoFunction], gamma: Sequence[float],
                       rh: ReverseHolderResult | None = None) -> tuple[VectorWeight, CommutatorReport]:
    cfg = vv.cfg
    if len(bs) != cfg.m or len(gamma) != cfg.m:
        raise ValueError(f"expected {cfg.m} functions and {cfg.m} parameters")
    for i, b in enumerate(bs):
        if abs(b.bmo_exp - 1.0) > NORMALIZED_TOL:
            raise ValueError(f"b_{i + 1} is not normalized (exponential norm {b.bmo_exp:.6g})")
        if b.grid.shape != vv.grid.shape or b.grid.policy != vv.grid.policy:
            raise ValueError(f"b_{i + 1} lives on a different grid")
    rh = rh or common_reverse_holder(vv)
    gmax = max_gamma(vv, rh)
    gamma = tuple(float(g) for g in gamma)
    for i, (g, gm) in enumerate(zip(gamma, gmax)):
        if abs(g) > gm * (1 + 1e-12):
            raise ValueError(f"|gamma_{i + 1}| = {abs(g):.6g} exceeds the admissible {gm:.6g}")
    ws = tuple(
        vi * Weight(vv.grid, np.exp(-g * float(si) * b.b.values))
        for vi, si, g, b in zip(vv.weights, cfg.p, gamma, bs)
    )
    wv = VectorWeight(ws, cfg)
    d = cfg.derived()
    ml_v = ml_constant(vv)
    ml_w = ml_constant(wv)
    bound = 2.0 ** (float(d.gap) + 2 * math.fsum(abs(g) for g in gamma)) * ml_v
    chk = check_le("commutator.perturbed-bound", "[w] <= 2^(gap + 2 sum|gamma|) [v]", ml_w, bound)
    return wv, CommutatorReport(rh.eta, rh.eta_prime, gamma, gmax, ml_v, ml_w, bound, [chk])
