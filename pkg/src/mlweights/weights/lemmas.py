"""Factorization of multilinear weights into scalar pieces and back.

Given ``w = (w_1, ..., w_m)`` with finite constant, the first ``m - 1``
components are combined into ``what = (prod_{i<m} w_i^(1/p_i))^rho`` and the
last one is absorbed into ``W = w^(r_m/p) * what^(-r_m/delta_{m+1})``. Each
piece belongs to a scalar class whose constant is controlled by a power of
the multilinear constant; conversely the pieces rebuild ``w_m`` by

    w_m = W^(p_m/r_m) * what^(-p_m/delta_m).

Scalar constants are compared in rooted form: ``[v]_{A_q} <= [w]^kappa`` is
checked as ``[v]_{A_q}^(1/kappa) <= [w]``, which is the same inequality and
extends continuously to ``kappa = inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..checks import Check, check_eq, check_le
from ..exponents import ExponentConfig, ExponentError
from ..grid import GridFunction, lp_norm
from .constants import _prod, ml_constant, power_mean, sup
from .core import VectorWeight, Weight, product_weight

__all__ = [
    "Decomposition",
    "rooted_ap",
    "hat_weight",
    "lemma_decompose",
    "lemma_reconstruct",
    "reconstruct_last",
    "norm_identity_check",
    "lemma2_check",
]


def rooted_ap(b: Weight, inv_kappa, lam, mu: Weight | None = None) -> float:
    """``[b^kappa]_{A_q(mu)}^(1/kappa)`` where ``lam = (q - 1)/kappa``.

    Per cube this is ``P_kappa(b) * P_{1/lam}(1/b)``; ``lam = 0`` is the
    ``A_1`` endpoint and ``inv_kappa = 0`` the limit ``kappa = inf``.
    """
    return sup(_prod(power_mean(b, inv_kappa, mu), power_mean(b**-1, lam, mu)))


def _rooted_apr(v: Weight, inv_pc, inv_r, k, mu: Weight) -> float:
    """``[v]_{A_{p,r}(mu)}^(1/root)`` with ``k = r/root``.

    Per cube ``(P_r(v) * P_{p'}(1/v))^k`` against ``mu``.
    """
    with np.errstate(over="ignore"):
        per_cube = _prod(power_mean(v, inv_r, mu), power_mean(v**-1, inv_pc, mu)) ** float(k)
    return sup(per_cube)


def hat_weight(components: Sequence[Weight], cfg: ExponentConfig) -> Weight:
    """``(prod_{i<m} w_i^(1/p_i))^rho``."""
    d = cfg.derived()
    if d.inv_rho == 0:
        raise ExponentError("rho is infinite for this configuration")
    rho = 1 / d.inv_rho
    out = components[0] ** (rho / cfg.p[0])
    for w, pi in zip(components[1:], cfg.p[1:]):
        out = out * w ** (rho / pi)
    return out


def reconstruct_last(what: Weight, cap_w: Weight, cfg: ExponentConfig, sign: int = -1) -> Weight:
    """``W^(p_m/r_m) * what^(sign * p_m/delta_m)``; ``sign=-1`` is the consistent choice."""
    d = cfg.derived()
    pm, rm = cfg.p[-1], cfg.r[cfg.m - 1]
    return cap_w ** (pm / rm) * what ** (sign * pm * d.inv_delta[cfg.m - 1])


@dataclass
class Decomposition:
    what: Weight
    cap_w: Weight
    ml: float
    component_constants: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _require_open_last(cfg: ExponentConfig):
    d = cfg.derived()
    if d.inv_delta[-1] == 0:
        raise ExponentError("the factorization needs r'_{m+1} > p (1/delta_{m+1} > 0)")
    return d


def _component_constants(components: Sequence[Weight], what: Weight, cap_w: Weight, cfg: ExponentConfig) -> dict:
    """Rooted constants of the three kinds of pieces."""
    d = _require_open_last(cfg)
    m = cfg.m
    out = {}
    for i in range(m - 1):
        out[f"component_{i + 1}"] = rooted_ap(components[i] ** (1 / cfg.p[i]), d.inv_theta[i], d.inv_delta[i])
    out["hat"] = rooted_ap(what ** d.inv_rho, d.inv_rho, d.gap - d.inv_rho)
    rm = cfg.r[m - 1]
    # W in A_{p_m/r_m, delta_{m+1}/r_m}(what), rooted by delta_{m+1}
    out["cap"] = _rooted_apr(cap_w, 1 - rm / cfg.p[-1], rm * d.inv_delta[m], 1 / rm, what)
    return out


def lemma_decompose(wv: VectorWeight) -> Decomposition:
    cfg = wv.cfg
    d = _require_open_last(cfg)
    m = cfg.m
    ml = ml_constant(wv)
    if not math.isfinite(ml):
        raise ValueError("the multilinear constant is infinite; nothing to decompose")
    w = product_weight(wv)
    what = hat_weight(wv.weights[:-1], cfg)
    rm = cfg.r[m - 1]
    cap_w = w ** (rm / cfg.p_total) * what ** (-rm * d.inv_delta[m])
    alt = wv.weights[-1] ** (rm / cfg.p[-1]) * what ** (rm * d.inv_delta[m - 1])
    consts = _component_constants(wv.weights[:-1], what, cap_w, cfg)
    gap = _worst_rel_gap(cap_w, alt) if cap_w.power == alt.power else math.inf
    checks = [check_le("lemma-main.cap-forms", "both expressions for W agree cellwise (relative gap <= 1e-10)", gap, 1e-10, slack=0.0)]
    for i in range(m - 1):
        checks.append(
            check_le(
                "lemma-main.component-bound",
                f"[w_{i + 1}^(theta/p)]_A^(1/theta) <= [w]",
                consts[f"component_{i + 1}"],
                ml,
            )
        )
    checks.append(check_le("lemma-main.hat-bound", "[what]_A^(1/rho) <= [w]", consts["hat"], ml))
    checks.append(check_le("lemma-main.cap-bound", "[W]_{A_{p,r}(what)}^(1/delta_last) <= [w]", consts["cap"], ml))
    return Decomposition(what, cap_w, ml, consts, checks)


def _worst_rel_gap(a: Weight, b: Weight) -> float:
    return float(np.max(np.abs(a.values - b.values) / np.maximum(np.abs(a.values), np.abs(b.values))))


def lemma_reconstruct(components: Sequence[Weight], what: Weight, cap_w: Weight, cfg: ExponentConfig):
    """Rebuild ``w_m`` and certify the multilinear constant from the pieces.

    Returns ``(wv, checks)``.
    """
    components = tuple(components)
    if len(components) != cfg.m - 1:
        raise ValueError(f"expected {cfg.m - 1} components")
    expected = hat_weight(components, cfg)
    if expected.power != what.power or _worst_rel_gap(expected, what) > 1e-10:
        raise ValueError("hat weight is inconsistent with the components")
    consts = _component_constants(components, what, cap_w, cfg)
    bad = [k for k, v in consts.items() if not math.isfinite(v)]
    if bad:
        raise ValueError(f"infinite component constant: {', '.join(bad)}")
    w_m = reconstruct_last(what, cap_w, cfg)
    wv = VectorWeight(components + (w_m,), cfg)
    bound = consts["cap"] * consts["hat"]
    for i in range(cfg.m - 1):
        bound *= consts[f"component_{i + 1}"]
    ml = ml_constant(wv)
    return wv, [check_le("lemma-main.product-bound", "[w] <= [W]^(1/delta_last) [what]^(1/rho) prod [w_i]^(1/theta_i)", ml, bound)]


def _composite_norm(f: GridFunction, factor: Weight, k, q, mu: Weight) -> float:
    """``|| (|f| * factor)^k ||_{L^q(mu)}``."""
    kq = Fraction(k) * Fraction(q)
    fv = np.abs(f.values) ** float(kq)
    masses = (factor**kq * mu).cell_masses()
    with np.errstate(invalid="ignore"):
        terms = np.where(fv == 0, 0.0, fv * masses)
    return math.fsum(terms) ** float(1 / Fraction(q))


def norm_identity_check(f: GridFunction, wv: VectorWeight, dec: Decomposition) -> list[Check]:
    cfg = wv.cfg
    m = cfg.m
    p, pm, rm = cfg.p_total, cfg.p[-1], cfg.r[m - 1]
    what, cap_w = dec.what, dec.cap_w
    inv_rc = 1 - 1 / cfg.r[-1]
    lhs1 = lp_norm(f, product_weight(wv), p)
    rhs1 = _composite_norm(f, what ** (-inv_rc), rm, p / rm, cap_w ** (p / rm) * what) ** float(1 / rm)
    lhs2 = lp_norm(f, wv.weights[-1], pm)
    rhs2 = _composite_norm(f, what ** (-1 / rm), rm, pm / rm, cap_w ** (pm / rm) * what) ** float(1 / rm)
    return [
        check_eq("lemma-main.norm-product", "||f||_{L^p(w)} rewritten against what and W", lhs1, rhs1),
        check_eq("lemma-main.norm-last", "||f||_{L^{p_m}(w_m)} rewritten against what and W", lhs2, rhs2),
    ]


def lemma2_check(wv: VectorWeight, direction: str = "both") -> list[Check]:
    """Bounds between ``[w]`` and the scalar constants of ``w_i^(theta_i/p_i)`` and ``w^(delta/p)``."""
    cfg = wv.cfg
    if any(x <= 1 for x in cfg.p):
        raise ExponentError("this check needs every p_i > 1")
    if direction not in ("decompose", "reconstruct", "both"):
        raise ValueError(f"unknown direction {direction!r}")
    d = cfg.derived()
    m = cfg.m
    ml = ml_constant(wv)
    comps = [rooted_ap(wv.weights[i] ** (1 / cfg.p[i]), d.inv_theta[i], d.inv_delta[i]) for i in range(m)]
    prod_c = rooted_ap(product_weight(wv) ** (1 / cfg.p_total), d.inv_delta[m], d.gap - d.inv_delta[m])
    checks = []
    if direction in ("decompose", "both"):
        for i, c in enumerate(comps):
            checks.append(check_le("lemma-two.component-bound", f"[w_{i + 1}^(theta/p)]_A^(1/theta) <= [w]", c, ml))
        checks.append(check_le("lemma-two.product-weight-bound", "[w^(delta/p)]_A^(1/delta) <= [w]", prod_c, ml))
    if direction in ("reconstruct", "both"):
        bound = prod_c * math.prod(comps)
        checks.append(check_le("lemma-two.product-bound", "[w] <= [w^(delta/p)]^(1/delta) prod [w_i^(theta/p)]^(1/theta)", ml, bound))
    return checks
