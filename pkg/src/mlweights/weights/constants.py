"""Characteristic constants as suprema of per-cube quantities.

All constants are assembled from power means over the cubes of the grid's
enumeration,

    P_t(b; Q, mu) = (avg_{Q, mu} b^t)^(1/t),   P_inf(b; Q) = esssup_Q b,

which handles the endpoint replacements (``1/delta_i = 0``, ``p = 1``) without
special cases.
"""
from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..exponents import ExponentError, as_rational, conjugate
from .core import VectorWeight, Weight, product_weight

__all__ = [
    "ScalarClass",
    "cube_averages",
    "power_mean",
    "sup",
    "scalar_cube_values",
    "scalar_constant",
    "ml_cube_values",
    "ml_constant",
]


class ScalarClass(str, Enum):
    A_P = "A_p"
    A_1 = "A_1"
    A_PR = "A_pr"


def cube_averages(weights: Sequence[Weight], mu: Weight | None = None) -> np.ndarray:
    """Averages of each weight over every cube; shape ``(len(weights), n_cubes)``."""
    grid = weights[0].grid
    if mu is None:
        masses = [w.cell_masses() for w in weights]
        den = grid.cube_volumes
    else:
        mu_mass = mu.cell_masses()
        if not np.all(np.isfinite(mu_mass)):
            raise ValueError("the measure is not locally finite")
        masses = [(w * mu).cell_masses() for w in weights]
        den = grid.reduce(mu_mass)
    with np.errstate(over="ignore", invalid="ignore"):
        return grid.reduce(np.vstack(masses)) / den


def power_mean(b: Weight, inv_t, mu: Weight | None = None) -> np.ndarray:
    """Per-cube ``(avg_mu b^t)^(1/t)`` given ``1/t``; ``1/t = 0`` gives the esssup."""
    inv_t = as_rational(inv_t)
    if inv_t < 0:
        raise ValueError("power mean needs t > 0")
    if inv_t == 0:
        return b.grid.reduce(b.cell_sup(), "max")
    avg = cube_averages([b ** (1 / inv_t)], mu)[0]
    with np.errstate(over="ignore"):
        return avg ** float(inv_t)


def sup(values: np.ndarray) -> float:
    v = np.asarray(values, dtype=float)
    if np.any(np.isnan(v)):
        return math.inf
    return float(np.max(v))


def _prod(*arrays: np.ndarray) -> np.ndarray:
    out = np.ones_like(arrays[0])
    with np.errstate(over="ignore", invalid="ignore"):
        for a in arrays:
            out = out * a
    return out


def scalar_cube_values(v: Weight, kind, p=None, r=None, mu: Weight | None = None) -> np.ndarray:
    kind = ScalarClass(kind)
    if kind is ScalarClass.A_1:
        p = Fraction(1)
    p = as_rational(p)
    if p < 1:
        raise ExponentError("scalar classes need p >= 1")
    if kind is ScalarClass.A_PR:
        r = as_rational(r)
        if r <= 0:
            raise ExponentError("need r > 0")
        pc = conjugate(p)
        first = cube_averages([v**r], mu)[0]
        if pc == math.inf:
            second = v.grid.reduce((v ** -r).cell_sup(), "max")
        else:
            second = cube_averages([v**-pc], mu)[0] ** float(r / pc)
        return _prod(first, second)
    first = cube_averages([v], mu)[0]
    if p == 1:
        second = v.grid.reduce((v**-1).cell_sup(), "max")
    else:
        second = cube_averages([v ** (-1 / (p - 1))], mu)[0] ** float(p - 1)
    return _prod(first, second)


def scalar_constant(v: Weight, kind, p=None, r=None, mu: Weight | None = None) -> float:
    """``[v]`` for ``A_p(mu)``, ``A_1(mu)`` or ``A_{p,r}(mu)``; ``inf`` on divergence.

    For ``A_{p,r}(mu)`` both averages are taken against ``mu``.
    """
    return sup(scalar_cube_values(v, kind, p, r, mu))


def ml_cube_values(wv: VectorWeight) -> np.ndarray:
    d = wv.cfg.derived()
    w = product_weight(wv)
    terms = [power_mean(w ** (1 / wv.cfg.p_total), d.inv_delta[-1])]
    for wi, pi, inv_d in zip(wv.weights, wv.cfg.p, d.inv_delta):
        terms.append(power_mean(wi ** (-1 / pi), inv_d))
    return _prod(*terms)


def ml_constant(wv: VectorWeight) -> float:
    """Multilinear characteristic constant of ``wv`` over the grid's cubes."""
    return sup(ml_cube_values(wv))
