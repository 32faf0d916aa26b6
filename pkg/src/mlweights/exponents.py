"""Exact rational bookkeeping for multilinear exponent tuples.

Exponents are :class:`fractions.Fraction`; the conjugate of 1 is ``math.inf``.
Reciprocals are stored wherever a quantity may be infinite, so ``1/delta = 0``
is represented exactly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "INF",
    "Order",
    "ExponentError",
    "as_rational",
    "parse_rational",
    "parse_vector",
    "recip",
    "conjugate",
    "check_order",
    "ExponentConfig",
    "DerivedExponents",
    "derived",
    "natural_exponents",
    "bht_admissible",
    "gamma_to_r",
    "power_weight_interval",
    "bh_power_interval",
    "Step1Parameters",
    "step1_parameters",
    "Certificate",
    "PathStep",
    "extrapolation_path",
]

INF = math.inf

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")
_RATIO = re.compile(r"^[+-]?\d+\s*/\s*\d+$")


class ExponentError(ValueError):
    """An exponent tuple violates a precondition."""


class Order(str, Enum):
    STRICT = "strict"
    WEAK = "weak"
    NONE = "none"


def parse_rational(text: str) -> Fraction:
    """Parse ``num/den`` or a plain decimal string into an exact fraction."""
    t = str(text).strip()
    if _RATIO.match(t) or _DECIMAL.match(t):
        return Fraction(t.replace(" ", ""))
    raise ExponentError(f"not an exact rational: {text!r} (use num/den or a plain decimal)")


def as_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ExponentError(f"exponent must be finite, got {x}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return parse_rational(x)
    return Fraction(x)


def parse_vector(text: str | Iterable) -> tuple[Fraction, ...]:
    if isinstance(text, str):
        return tuple(parse_rational(t) for t in text.split(",") if t.strip())
    return tuple(as_rational(t) for t in text)


def recip(y):
    """``1/y`` with ``1/0 = inf`` and ``1/inf = 0``."""
    if y == 0:
        return INF
    if y == INF:
        return Fraction(0)
    return 1 / Fraction(y)


def conjugate(x):
    """Hölder conjugate ``x/(x-1)``; the conjugate of 1 is ``inf``."""
    if x == INF:
        return Fraction(1)
    x = as_rational(x)
    return INF if x == 1 else x / (x - 1)


def _check_entries(name: str, v: Sequence[Fraction]) -> None:
    for i, x in enumerate(v):
        if x < 1:
            raise ExponentError(f"{name}[{i}] = {x} must be >= 1")


def check_order(r, p, closed: bool = False) -> Order:
    """Classify the pair: ``r_i <= p_i`` for ``i <= m`` and ``r_{m+1}' > p``.

    With ``closed=True`` the endpoint ``r_{m+1}' = p`` is accepted as well.
    """
    r, p = parse_vector(r), parse_vector(p)
    if len(r) != len(p) + 1:
        raise ExponentError(f"length mismatch: r has {len(r)} entries, p has {len(p)}; need len(r) = len(p) + 1")
    _check_entries("r", r)
    _check_entries("p", p)
    inv_p = sum(1 / x for x in p)
    inv_rc = 1 - 1 / r[-1]
    if all(a <= b for a, b in zip(r, p)) and (inv_rc < inv_p or closed and inv_rc == inv_p):
        return Order.STRICT if all(a < b for a, b in zip(r, p)) else Order.WEAK
    return Order.NONE


@dataclass(frozen=True)
class DerivedExponents:
    """Quantities derived from ``(p, r)``; ``inv_*`` fields are exact reciprocals."""

    inv_rbar: Fraction
    inv_p: Fraction
    inv_pm1: Fraction
    inv_delta: tuple[Fraction, ...]
    inv_theta: tuple[Fraction, ...]
    inv_rho: Fraction

    @property
    def rbar(self) -> Fraction:
        return 1 / self.inv_rbar

    @property
    def pm1(self):
        """``p_{m+1}``; formally signed, ``inf`` when ``p = 1``."""
        return recip(self.inv_pm1)

    @property
    def delta(self) -> tuple:
        return tuple(recip(x) for x in self.inv_delta)

    @property
    def theta(self) -> tuple:
        return tuple(recip(x) for x in self.inv_theta)

    @property
    def rho(self):
        return recip(self.inv_rho)

    @property
    def gap(self) -> Fraction:
        """``(1 - rbar)/rbar``, the sum of all ``1/delta_i``."""
        return self.inv_rbar - 1

    def as_dict(self) -> dict:
        s = lambda x: "inf" if x == INF else str(x)  # noqa: E731
        return {
            "rbar": s(self.rbar),
            "p_m_plus_1": s(self.pm1),
            "inv_p_m_plus_1": str(self.inv_pm1),
            "delta": [s(x) for x in self.delta],
            "theta": [s(x) for x in self.theta],
            "rho": s(self.rho),
        }


@dataclass(frozen=True)
class ExponentConfig:
    p: tuple[Fraction, ...]
    r: tuple[Fraction, ...]

    def __post_init__(self):
        p, r = parse_vector(self.p), parse_vector(self.r)
        if len(r) != len(p) + 1:
            raise ExponentError(f"length mismatch: r has {len(r)} entries, p has {len(p)}")
        if len(p) < 2:
            raise ExponentError("need at least two components (m >= 2)")
        _check_entries("r", r)
        _check_entries("p", p)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r", r)

    @property
    def m(self) -> int:
        return len(self.p)

    @property
    def inv_p(self) -> Fraction:
        return sum((1 / x for x in self.p), Fraction(0))

    @property
    def p_total(self) -> Fraction:
        return 1 / self.inv_p

    @property
    def order(self) -> Order:
        return check_order(self.r, self.p)

    @property
    def is_natural(self) -> bool:
        inv_rbar = sum(1 / x for x in self.r)
        return all(pi == ri * inv_rbar for pi, ri in zip(self.p, self.r))

    @property
    def on_boundary(self) -> bool:
        """True when ``r_{m+1}' = p`` exactly, so that ``1/delta_{m+1} = 0``."""
        return 1 - 1 / self.r[-1] == self.inv_p

    def derived(self) -> DerivedExponents:
        return derived(self)

    def replace_p(self, p) -> "ExponentConfig":
        return ExponentConfig(p, self.r)

    def __str__(self) -> str:
        return f"p=({','.join(map(str, self.p))}) r=({','.join(map(str, self.r))})"


def derived(cfg: ExponentConfig) -> DerivedExponents:
    """Derived exponents; the closed endpoint ``r_{m+1}' = p`` is allowed."""
    if check_order(cfg.r, cfg.p, closed=True) is Order.NONE:
        raise ExponentError(f"order violation: r is not below p for {cfg}")
    m = cfg.m
    inv_rbar = sum(1 / x for x in cfg.r)
    inv_p = cfg.inv_p
    inv_pm1 = 1 - inv_p
    inv_pi = [1 / x for x in cfg.p] + [inv_pm1]
    inv_delta = tuple(1 / ri - ip for ri, ip in zip(cfg.r, inv_pi))
    gap = inv_rbar - 1
    inv_theta = tuple(gap - inv_delta[i] for i in range(m))
    inv_rho = inv_delta[m - 1] + inv_delta[m]
    return DerivedExponents(inv_rbar, inv_p, inv_pm1, inv_delta, inv_theta, inv_rho)


def natural_exponents(r) -> tuple[tuple[Fraction, ...], Fraction]:
    """``p_i = r_i / rbar`` and the matching total exponent ``p``."""
    r = parse_vector(r)
    _check_entries("r", r)
    inv_rbar = sum(1 / x for x in r)
    if inv_rbar <= 1:
        raise ExponentError(f"inadmissible r: sum of reciprocals is {inv_rbar}, need > 1")
    p = tuple(x * inv_rbar for x in r[:-1])
    inv_pt = 1 - 1 / (inv_rbar * r[-1])
    return p, 1 / inv_pt


def bht_admissible(r) -> bool:
    r = parse_vector(r)
    if len(r) != 3:
        raise ExponentError("bilinear admissibility needs three exponents")
    if any(x <= 1 for x in r):
        raise ExponentError(f"entries must exceed 1, got {tuple(map(str, r))}")
    return sum(1 / min(x, Fraction(2)) for x in r) < 2


def gamma_to_r(gamma) -> tuple[Fraction, ...]:
    """``r_i = 2/(1 + gamma_i)``.

    The image always satisfies ``sum 1/r_i = 2``, the boundary of the
    admissible region; admissible tuples are obtained by enlarging any
    ``r_i`` slightly, which keeps the order relations used downstream.
    """
    g = parse_vector(gamma)
    if len(g) != 3:
        raise ExponentError("gamma must have three entries")
    if any(not 0 <= x < 1 for x in g) or sum(g) != 1:
        raise ExponentError("need 0 <= gamma_i < 1 and gamma_1 + gamma_2 + gamma_3 = 1")
    return tuple(2 / (1 + x) for x in g)


def power_weight_interval(q, r) -> tuple[Fraction, Fraction]:
    """Open interval of ``a`` with ``(|x|^-a, |x|^-a)`` in the class for ``(q, r)``."""
    q, r = parse_vector(q), parse_vector(r)
    if len(q) != 2 or check_order(r, q, closed=True) is not Order.STRICT:
        raise ExponentError(f"order violation for q={tuple(map(str, q))}, r={tuple(map(str, r))}")
    inv_q = sum(1 / x for x in q)
    lower = 1 - min(q[0] / r[0], q[1] / r[1])
    upper = 1 - (1 - 1 / r[2]) / inv_q
    return lower, upper


def bh_power_interval(p, s=None) -> tuple[Fraction, Fraction]:
    """Bounds on ``a`` for power weights with the bilinear Hilbert transform.

    ``a = 0`` is admissible separately; the returned open interval may be empty.
    """
    vecs = [parse_vector(p)] + ([parse_vector(s)] if s is not None else [])
    for v in vecs:
        if len(v) != 2 or any(x <= 1 for x in v) or sum(1 / x for x in v) >= Fraction(3, 2):
            raise ExponentError(f"exponent range violation for {tuple(map(str, v))}")
    pv, extra = vecs[0], vecs[1:]
    half = Fraction(1, 2)
    lows = [max([Fraction(1), pv[i] / 2] + [pv[i] / sv[i] for sv in extra]) for i in range(2)]
    highs = [max([Fraction(0)] + [1 / v[i] - half for v in vecs]) for i in range(2)]
    p_total = 1 / sum(1 / x for x in vecs[0])
    return 1 - min(lows), 1 - p_total * sum(highs)


@dataclass(frozen=True)
class Step1Parameters:
    s: object
    s_m: Fraction
    tau: object
    inv_s: Fraction
    inv_tau: Fraction
    differences: tuple[Fraction, Fraction, Fraction]


def step1_parameters(p, r, q_m) -> Step1Parameters:
    """Exponents for changing only the last component of ``p`` to ``q_m``."""
    cfg = ExponentConfig(p, r)
    d = derived(cfg)
    q_m = as_rational(q_m)
    m = cfg.m
    if q_m <= cfg.r[m - 1]:
        raise ExponentError(f"need q_m > r_m, got q_m={q_m}, r_m={cfg.r[m - 1]}")
    q = cfg.p[:-1] + (q_m,)
    if check_order(cfg.r, q) is Order.NONE:
        raise ExponentError(f"order violation for the target tuple {tuple(map(str, q))}")
    inv_s = d.inv_p + (1 / q_m - 1 / cfg.p[-1])
    inv_tau = d.inv_delta[m] + (inv_s - d.inv_p)
    target = derived(ExponentConfig(q, cfg.r)).inv_delta[m]
    if inv_tau != target:
        raise AssertionError("tau disagrees with the derived delta of the target tuple")
    diffs = (inv_s - d.inv_p, inv_tau - d.inv_delta[m], 1 / q_m - 1 / cfg.p[-1])
    return Step1Parameters(recip(inv_s), q_m, recip(inv_tau), inv_s, inv_tau, diffs)


@dataclass(frozen=True)
class Certificate:
    constraint: str
    lhs: Fraction
    rhs: Fraction
    holds: bool

    def as_dict(self) -> dict:
        return {"constraint": self.constraint, "lhs": str(self.lhs), "rhs": str(self.rhs), "holds": self.holds}


@dataclass(frozen=True)
class PathStep:
    source: tuple[Fraction, ...]
    target: tuple[Fraction, ...]
    changed_index: int
    certificates: tuple[Certificate, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "from": [str(x) for x in self.source],
            "to": [str(x) for x in self.target],
            "changed_index": self.changed_index,
            "certificates": [c.as_dict() for c in self.certificates],
        }


def _step_certificates(s: tuple[Fraction, ...], r: tuple[Fraction, ...], i: int) -> tuple[Certificate, ...]:
    certs = [Certificate(f"r[{j}] <= s[{j}]", r[j], s[j], r[j] <= s[j]) for j in range(len(s))]
    inv_s = sum(1 / x for x in s)
    inv_rc = 1 - 1 / r[-1]
    certs.append(Certificate("sum 1/s_j > 1/r_last'", inv_s, inv_rc, inv_s > inv_rc))
    certs.append(Certificate(f"r[{i}] < s[{i}]", r[i], s[i], r[i] < s[i]))
    return tuple(certs)


def extrapolation_path(p, q, r) -> list[PathStep]:
    """One-coordinate steps leading from ``p`` to ``q`` at fixed ``r``.

    Coordinates with ``p_i > q_i`` are moved first (in their original order),
    then the rest; steps with ``p_i = q_i`` are skipped. Indices are 0-based.
    """
    p, q, r = parse_vector(p), parse_vector(q), parse_vector(r)
    if len(p) != len(q):
        raise ExponentError("p and q must have the same length")
    if check_order(r, p) is Order.NONE:
        raise ExponentError("precondition failed: r is not below p")
    _check_entries("q", q)
    for j, (rj, pj, qj) in enumerate(zip(r, p, q)):
        if rj > qj:
            raise ExponentError(f"precondition failed: r[{j}] = {rj} > q[{j}] = {qj}")
        if rj < pj and not rj < qj:
            raise ExponentError(f"precondition failed: r[{j}] < p[{j}] requires r[{j}] < q[{j}]")
    if not 1 - 1 / r[-1] < sum(1 / x for x in q):
        raise ExponentError("precondition failed: need r_last' > q")
    order = [i for i in range(len(p)) if p[i] > q[i]]
    order += [i for i in range(len(p)) if i not in order]
    steps = []
    cur = p
    for i in order:
        if p[i] == q[i]:
            continue
        nxt = cur[:i] + (q[i],) + cur[i + 1 :]
        certs = _step_certificates(nxt, r, i)
        bad = [c.constraint for c in certs if not c.holds]
        if bad:
            raise ExponentError(f"step {i} fails: {', '.join(bad)}")
        steps.append(PathStep(cur, nxt, i, certs))
        cur = nxt
    return steps
