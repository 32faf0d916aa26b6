"""Inequality and identity records shared by every verification routine."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = ["Check", "check_le", "check_eq", "jsonable", "from_jsonable", "SLACK", "RTOL"]

SLACK = 1e-9
RTOL = 1e-10


def jsonable(x):
    """Fractions become ``"num/den"`` strings, non-finite floats become strings."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if hasattr(x, "item"):
        return jsonable(x.item())
    return x


def from_jsonable(x):
    """Inverse of :func:`jsonable` for scalars."""
    if isinstance(x, str):
        return float(x) if x in ("inf", "-inf", "nan") else Fraction(x)
    return x


@dataclass(frozen=True)
class Check:
    anchor: str
    description: str
    lhs: float | Fraction
    rhs: float | Fraction
    kind: str = "le"
    tol: float = SLACK

    @property
    def margin(self):
        if self.kind == "eq":
            if self.lhs == self.rhs:
                return 0 if isinstance(self.lhs, Fraction) else 0.0
            return -abs(self.lhs - self.rhs)
        if self.rhs == math.inf:
            return math.inf
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        lhs, rhs = self.lhs, self.rhs
        if isinstance(lhs, float) and math.isnan(lhs) or isinstance(rhs, float) and math.isnan(rhs):
            return False
        if self.kind == "eq":
            if lhs == rhs:
                return True
            if math.isinf(lhs) or math.isinf(rhs):
                return False
            return abs(lhs - rhs) <= self.tol * max(abs(lhs), abs(rhs))
        if rhs == math.inf:
            return True
        if lhs == math.inf:
            return False
        return lhs <= rhs + self.tol * abs(rhs)

    def as_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "description": self.description,
            "lhs": jsonable(self.lhs),
            "rhs": jsonable(self.rhs),
            "margin": jsonable(self.margin),
            "pass": self.passed,
            "relation": "=" if self.kind == "eq" else "<=",
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Check":
        kind = "eq" if d.get("relation") == "=" else "le"
        return cls(d["anchor"], d["description"], from_jsonable(d["lhs"]), from_jsonable(d["rhs"]), kind,
                   RTOL if kind == "eq" else SLACK)


def check_le(anchor: str, description: str, lhs, rhs, slack: float = SLACK) -> Check:
    return Check(anchor, description, lhs, rhs, "le", slack)


def check_eq(anchor: str, description: str, lhs, rhs, rtol: float = RTOL) -> Check:
    return Check(anchor, description, lhs, rhs, "eq", rtol)
