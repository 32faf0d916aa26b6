"""Verification suites, refinement-based divergence detection and vector-valued Hoelder checks."""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .checks import Check, check_eq, check_le, jsonable
from .exponents import (
    ExponentConfig,
    ExponentError,
    Order,
    check_order,
    extrapolation_path,
    natural_exponents,
    parse_vector,
    power_weight_interval,
    step1_parameters,
)
from .grid import DyadicGrid, GridFunction, Policy
from .maximal import dyadic_maximal, maximal_norm_check, multilinear_maximal, random_test_function
from .weights import (
    VectorWeight,
    Weight,
    bmo_norms,
    commutator_perturb,
    exp_weight_check,
    lemma2_check,
    lemma_decompose,
    lemma_reconstruct,
    log_distance,
    max_gamma,
    ml_constant,
    norm_identity_check,
    random_vector_weight,
    scalar_constant,
)

__all__ = [
    "SUITES",
    "SuiteConfig",
    "VerificationReport",
    "Verdict",
    "DivergenceResult",
    "run_suite",
    "refinement_divergence",
    "holder_vv_check",
    "aggregate",
    "compare_reports",
    "random_exponent_triple",
    "suite_rng",
]

SUITES = (
    "lemma-main",
    "lemma-two",
    "sparse-bound",
    "maximal",
    "commutator",
    "exponents",
    "power-weights",
    "characterization",
)

# mesh enumeration makes per-cube oscillation work cubic in the side length
COMMUTATOR_MESH_DEPTH = 7


@dataclass(frozen=True)
class SuiteConfig:
    dim: int = 1
    depth: int = 10
    policy: str = "mesh"
    seed: int = 42
    samples: int = 50
    p: tuple | None = None
    r: tuple | None = None
    zeta: Fraction | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if not 1 <= self.depth <= 14:
            raise ValueError("depth must lie in [1, 14]")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        object.__setattr__(self, "policy", Policy.parse(self.policy).value)

    def grid(self, depth: int | None = None) -> DyadicGrid:
        return DyadicGrid(self.dim, self.depth if depth is None else depth, self.policy)

    def as_dict(self) -> dict:
        return {"dim": self.dim, "depth": self.depth, "policy": self.policy, "seed": self.seed, "samples": self.samples}


@dataclass
class VerificationReport:
    suite: str
    config: SuiteConfig
    checks: list[Check]
    summary: dict = field(default_factory=dict)
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "config": self.config.as_dict(),
            "checks": [c.as_dict() for c in self.checks],
            "pass": self.passed,
            "summary": jsonable(self.summary),
            "timestamp": self.timestamp,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        cfg = SuiteConfig(**d["config"])
        report = cls(d["suite"], cfg, [Check.from_dict(c) for c in d["checks"]], d.get("summary", {}),
                     d.get("timestamp", ""))
        if report.passed != d["pass"]:
            raise ValueError("the stored overall pass flag disagrees with the checks")
        return report

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls.from_dict(json.loads(text))


def compare_reports(a: dict, b: dict) -> bool:
    """Equality of two report dicts, ignoring the timestamp."""
    strip = lambda d: {k: v for k, v in d.items() if k != "timestamp"}  # noqa: E731
    return strip(a) == strip(b)


def suite_rng(seed: int, name: str) -> np.random.Generator:
    """Independent stream per (master seed, check name)."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


def _relative_margin(c: Check) -> float:
    lhs, rhs = float(c.lhs), float(c.rhs)
    if math.isnan(lhs) or math.isnan(rhs):
        return -math.inf
    if c.kind == "eq":
        if lhs == rhs:
            return 0.0
        if math.isinf(lhs) or math.isinf(rhs):
            return -math.inf
        return -abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    if rhs == math.inf:
        return math.inf
    if lhs == math.inf:
        return -math.inf
    return (rhs - lhs) / abs(rhs) if rhs != 0 else (0.0 if lhs <= 0 else -math.inf)


def aggregate(checks: Sequence[Check]) -> list[Check]:
    """One record per anchor: the worst case by relative margin, in first-seen order."""
    worst: dict[str, Check] = {}
    for c in checks:
        cur = worst.get(c.anchor)
        if cur is None or (c.passed, _relative_margin(c)) < (cur.passed, _relative_margin(cur)):
            worst[c.anchor] = c
    return list(worst.values())


# -- divergence -------------------------------------------------------------------


class Verdict(str, Enum):
    FINITE = "Finite"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class DivergenceResult:
    verdict: Verdict
    depths: tuple
    values: tuple
    ratios: tuple

    def as_dict(self) -> dict:
        return jsonable({"verdict": self.verdict.value, "depths": list(self.depths), "values": list(self.values),
                         "ratios": list(self.ratios)})


def _refined(wv: VectorWeight, grid: DyadicGrid) -> VectorWeight:
    ws = []
    for w in wv.weights:
        if not np.all(w.values == w.values[0]):
            raise ValueError("a grid-sampled weight cannot be refined; pass a callable building it per grid")
        ws.append(Weight(grid, np.full(grid.n_cells, w.values[0]), w.power))
    return VectorWeight(tuple(ws), wv.cfg)


def _ratio(a: float, b: float) -> float:
    if math.isinf(b):
        return math.inf
    if math.isinf(a):
        return 0.0
    return b / a


def refinement_divergence(make: VectorWeight | Callable[[DyadicGrid], VectorWeight],
                          depths: Sequence[int] = (8, 10, 12, 14), growth_threshold: float = 1.5,
                          finite_band: float = 1.1, policy="dyadic", dim: int = 1) -> DivergenceResult:
    """Classify the multilinear constant under grid refinement.

    ``make`` is either a vector weight of constant-times-power components or a
    callable building the weight on a given grid. The last two consecutive
    ratios decide: both at least ``growth_threshold`` (or an infinite final
    value) means Divergent, both at most ``finite_band`` means Finite,
    anything else is Inconclusive.
    """
    depths = tuple(int(d) for d in depths)
    if len(depths) < 3 or any(b <= a for a, b in zip(depths, depths[1:])):
        raise ValueError("need at least three increasing depths")
    values = []
    for d in depths:
        grid = DyadicGrid(dim, d, policy)
        wv = make(grid) if callable(make) else _refined(make, grid)
        values.append(ml_constant(wv))
    ratios = tuple(_ratio(a, b) for a, b in zip(values, values[1:]))
    last = ratios[-2:]
    if math.isinf(values[-1]) or all(x >= growth_threshold for x in last):
        verdict = Verdict.DIVERGENT
    elif all(x <= finite_band for x in last):
        verdict = Verdict.FINITE
    else:
        verdict = Verdict.INCONCLUSIVE
    return DivergenceResult(verdict, depths, tuple(values), ratios)


# -- vector-valued Hoelder ---------------------------------------------------------


def _lnorm(vals: np.ndarray, q: float, axis: int) -> np.ndarray:
    return np.sum(vals**q, axis=axis) ** (1.0 / q)


def holder_vv_check(table, s, nesting: str = "single", t=None) -> list[Check]:
    """Hoelder aggregation over an index ``j`` (and ``k`` for double nesting).

    single: ``table[j, i]``, checks
    ``(sum_j prod_i a_ji^s)^(1/s) <= prod_i (sum_j a_ji^s_i)^(1/s_i)``.
    double: ``table[j, k, i]``; the inner sums over ``k`` use ``s``, the outer
    sums over ``j`` use ``t``, and both Hoelder steps are checked.
    """
    a = np.asarray(table, dtype=float)
    if np.any(a < 0):
        raise ValueError("norm tables must be nonnegative")
    s = parse_vector(s)
    if any(x < 1 for x in s):
        raise ExponentError("every s_i must be at least 1")
    s_tot = float(1 / sum(1 / x for x in s))
    sf = [float(x) for x in s]
    if nesting == "single":
        if a.ndim != 2 or a.shape[1] != len(s):
            raise ValueError("single nesting needs a (J, m) table")
        lhs = _lnorm(np.prod(a, axis=1), s_tot, 0)
        rhs = math.prod(_lnorm(a[:, i], sf[i], 0) for i in range(len(s)))
        return [check_le("vv-holder.single", "(sum_j prod_i a_ji^s)^(1/s) <= prod_i ||a_i||_l^s_i", float(lhs), float(rhs))]
    if nesting != "double":
        raise ValueError(f"unknown nesting {nesting!r}")
    if t is None:
        raise ValueError("double nesting needs the outer exponents t")
    t = parse_vector(t)
    if len(t) != len(s) or any(x < 1 for x in t):
        raise ExponentError("t must have one entry >= 1 per component")
    t_tot = float(1 / sum(1 / x for x in t))
    tf = [float(x) for x in t]
    if a.ndim != 3 or a.shape[2] != len(s):
        raise ValueError("double nesting needs a (J, K, m) table")
    inner = _lnorm(np.prod(a, axis=2), s_tot, 1)  # (J,)
    b = np.stack([_lnorm(a[:, :, i], sf[i], 1) for i in range(len(s))], axis=1)  # (J, m)
    lhs = float(_lnorm(inner, t_tot, 0))
    mid = float(_lnorm(np.prod(b, axis=1), t_tot, 0))
    rhs = math.prod(float(_lnorm(b[:, i], tf[i], 0)) for i in range(len(t)))
    return [
        check_le("vv-holder.inner", "inner Hoelder over k inside the outer l^t sum", lhs, mid),
        check_le("vv-holder.outer", "outer Hoelder over j", mid, rhs),
        check_le("vv-holder.double", "iterated mixed norm bound", lhs, rhs),
    ]


# -- random exponents --------------------------------------------------------------

_R_CHOICES = [Fraction(1), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3)]


def _rand_rational(rng, lo: Fraction, span: int = 6, den: int = 4) -> Fraction:
    return lo + Fraction(int(rng.integers(0, span * den + 1)), den)


def random_exponent_triple(rng: np.random.Generator, m: int = 2, max_tries: int = 10_000):
    """Random ``(p, q, r)`` meeting the path preconditions."""
    for _ in range(max_tries):
        r = tuple(_R_CHOICES[int(rng.integers(len(_R_CHOICES)))] for _ in range(m + 1))
        p = tuple(_rand_rational(rng, ri) for ri in r[:m])
        q = tuple(_rand_rational(rng, ri) for ri in r[:m])
        q = tuple(qi if qi > ri or pi == ri else qi + Fraction(1, 2) for qi, pi, ri in zip(q, p, r))
        p = tuple(pi if pi > ri or qi == ri else pi for pi, qi, ri in zip(p, q, r))
        try:
            if check_order(r, p) is Order.NONE or check_order(r, q) is Order.NONE:
                continue
            extrapolation_path(p, q, r)
        except ExponentError:
            continue
        return p, q, r
    raise RuntimeError("no admissible exponents found")


# -- suites ----------------------------------------------------------------------------


def _cfg(config: SuiteConfig, p, r) -> ExponentConfig:
    return ExponentConfig(config.p or p, config.r or r)


def _random_signed(grid: DyadicGrid, rng) -> GridFunction:
    return GridFunction(grid, rng.normal(size=grid.n_cells) * rng.lognormal(size=grid.n_cells))


def _suite_lemma_main(config: SuiteConfig):
    cfg = _cfg(config, (3, 3), (1, 1, 1))
    grid = config.grid()
    rng = suite_rng(config.seed, "lemma-main")
    checks = []
    for _ in range(config.samples):
        wv = random_vector_weight(grid, cfg, rng)
        dec = lemma_decompose(wv)
        checks += dec.checks
        back, cert = lemma_reconstruct(wv.weights[:-1], dec.what, dec.cap_w, cfg)
        checks += cert
        a, b = back.weights[-1].values, wv.weights[-1].values
        gap = float(np.max(np.abs(a - b) / b))
        checks.append(check_le("lemma-main.roundtrip", "rebuilt w_m matches cellwise (relative gap <= 1e-10)", gap, 1e-10, slack=0.0))
        checks += norm_identity_check(_random_signed(grid, rng), wv, dec)
    return checks, {"p": list(cfg.p), "r": list(cfg.r)}


def _suite_lemma_two(config: SuiteConfig):
    cfg = _cfg(config, (3, 3), (1, 1, 1))
    grid = config.grid()
    rng = suite_rng(config.seed, "lemma-two")
    checks = []
    for _ in range(config.samples):
        checks += lemma2_check(random_vector_weight(grid, cfg, rng), "both")
    return checks, {"p": list(cfg.p), "r": list(cfg.r)}


def _suite_sparse_bound(config: SuiteConfig):
    from .sparse import dual_identity_check, form_bound_certificate, necessity_all_cubes, random_sparse

    r = parse_vector(config.r or (1, 1, 1))
    p, _ = natural_exponents(r)
    cfg = ExponentConfig(p, r)
    zeta = config.zeta if config.zeta is not None else Fraction(1, 2)
    grid = config.grid()
    rng = suite_rng(config.seed, "sparse-bound")
    checks = []
    constant = None
    for _ in range(config.samples):
        S = random_sparse(grid, zeta, int(rng.integers(2**31)))
        wv = random_vector_weight(grid, cfg, rng)
        fs = [random_test_function(grid, rng) for _ in range(cfg.m)]
        h = random_test_function(grid, rng)
        cert = form_bound_certificate(S, wv, fs, h)
        constant = cert.constant
        checks += cert.checks
        checks += dual_identity_check(wv)
        checks += necessity_all_cubes(wv, cert.c0)
    rbar = cfg.derived().rbar
    expected = (1 / zeta) * (1 / (1 - rbar)) ** (cfg.m + 1)
    checks.append(check_eq("sparse-chain.constant", "zeta^-1 (1-rbar)^-(m+1) evaluated exactly", constant, expected))
    return checks, {"r": list(r), "p": list(p), "zeta": zeta, "constant": constant}


def _suite_maximal(config: SuiteConfig):
    grid = config.grid()
    rng = suite_rng(config.seed, "maximal")
    exps = [Fraction(3), Fraction(2), Fraction(3, 2)] if config.p is None else list(parse_vector(config.p))
    checks = []
    worst = {}
    from .weights import random_weight

    for p in exps:
        ratios = []
        for _ in range(config.samples):
            mu = random_weight(grid, rng)
            rep = maximal_norm_check(mu, p, fs=[random_test_function(grid, rng)])
            ratios += rep.ratios
            checks.append(Check(f"maximal.lp-bound[p={p}]", rep.check.description, rep.check.lhs, rep.check.rhs))
        worst[str(p)] = max(ratios)
    for _ in range(config.samples):
        fs = [random_test_function(grid, rng) for _ in range(2)]
        lhs = multilinear_maximal(fs).values
        rhs = np.prod([multilinear_maximal([f]).values for f in fs], axis=0)
        checks.append(check_le("maximal.multilinear-domination", "max_cell (M(f,g) - Mf Mg) <= 0 under one cube policy",
                               float(np.max(lhs - rhs)), 0.0, slack=0.0))
        f = fs[0]
        dm = dyadic_maximal(f).values
        root_avg = float(np.mean(np.abs(f.values)))
        checks.append(check_le("maximal.root-average", "avg over the root <= M f at every cell", root_avg, float(dm.min())))
    return checks, {"worst_ratio": worst}


def _suite_commutator(config: SuiteConfig):
    cfg = _cfg(config, (3, 3), (1, 1, 1))
    depth = min(config.depth, COMMUTATOR_MESH_DEPTH) if config.policy == Policy.MESH.value else config.depth
    grid = config.grid(depth)
    rng = suite_rng(config.seed, "commutator")
    checks = []

    def random_b():
        if grid.dim == 1 and rng.random() < 0.5:
            b = log_distance(grid, rng.uniform(0, 1))
        else:
            b = GridFunction(grid, np.cumsum(rng.normal(size=grid.n_cells)))
        return bmo_norms(b)

    for _ in range(config.samples):
        vv = random_vector_weight(grid, cfg, rng)
        bs = [random_b() for _ in range(cfg.m)]
        for b in bs:
            checks.append(check_le("bmo.exp-dominates", "||b||_BMO <= ||b||_exp", b.bmo, b.bmo_exp, slack=0.0))
        normed = [b.normalized() for b in bs]
        gmax = max_gamma(vv)
        signs = rng.choice([-1.0, 1.0], size=cfg.m)
        _, rep = commutator_perturb(vv, normed, [s * g for s, g in zip(signs, gmax)])
        checks += rep.checks
        b = bs[0]
        q = [Fraction(3, 2), Fraction(2), Fraction(3)][int(rng.integers(3))]
        lam = rng.uniform(-1, 1) * float(min(1, q - 1)) / b.bmo_exp
        checks += exp_weight_check(b, lam, q)
    return checks, {"p": list(cfg.p), "r": list(cfg.r), "depth_used": depth}


def _suite_exponents(config: SuiteConfig):
    rng = suite_rng(config.seed, "exponents")
    checks = []
    for _ in range(config.samples):
        p, q, r = random_exponent_triple(rng)
        cfg = ExponentConfig(p, r)
        d = cfg.derived()
        m = cfg.m
        checks.append(check_eq("exponents.delta-sum", "sum 1/delta_i = 1/rbar - 1", sum(d.inv_delta), d.inv_rbar - 1))
        checks.append(check_eq("exponents.p-sum", "sum_{i<=m+1} 1/p_i = 1", sum(1 / x for x in cfg.p) + d.inv_pm1, Fraction(1)))
        rho_alt = 1 / r[m - 1] - (1 - 1 / r[m]) + sum(1 / x for x in p[: m - 1])
        checks.append(check_eq("exponents.rho", "1/rho = 1/delta_m + 1/delta_{m+1}", d.inv_rho, rho_alt))
        for i in range(m):
            checks.append(check_eq("exponents.theta", "1/theta_i = (1-rbar)/rbar - 1/delta_i", d.inv_theta[i], d.gap - d.inv_delta[i]))
        path = extrapolation_path(p, q, r)
        end = path[-1].target if path else p
        failures = sum(not c.holds for st in path for c in st.certificates)
        failures += sum(sum(a != b for a, b in zip(st.source, st.target)) != 1 for st in path)
        failures += int(tuple(end) != tuple(q))
        checks.append(check_eq("exponents.path-valid", "failed certificates along the path", Fraction(failures), Fraction(0)))
        if q[-1] > r[m - 1] and check_order(r, p[:-1] + (q[-1],)) is not Order.NONE:
            st = step1_parameters(p, r, q[-1])
            checks.append(check_eq("exponents.step1-first", "1/s - 1/p = 1/tau - 1/delta_{m+1}", st.differences[0], st.differences[1]))
            checks.append(check_eq("exponents.step1-second", "1/tau - 1/delta_{m+1} = 1/s_m - 1/p_m", st.differences[1], st.differences[2]))
    return checks, {}


def _power_samples(lo: Fraction, hi: Fraction, n: int = 20, margin: Fraction = Fraction(1, 20)) -> list[Fraction]:
    start, stop = lo - Fraction(1, 2), hi + Fraction(1, 2)
    out = []
    for k in range(n):
        a = start + (stop - start) * Fraction(2 * k + 1, 2 * n)
        for edge in (lo, hi):
            if abs(a - edge) < margin:
                a = edge - margin if a < edge else edge + margin
        out.append(a)
    return out


def _suite_power_weights(config: SuiteConfig):
    if config.dim != 1:
        raise ValueError("power weights are one-dimensional")
    grid = config.grid(min(config.depth, 6))
    combos = [((3, 3), (1, 1, 1)), ((4, 4), (1, 1, 1)), ((3, 3), (2, 2, 2)), ((4, 4), (2, 2, 2))]
    if config.p is not None or config.r is not None:
        combos = [(config.p or (3, 3), config.r or (1, 1, 1))]
    checks = []
    table = {}
    for q, r in combos:
        cfg = ExponentConfig(q, r)
        lo, hi = power_weight_interval(q, r)
        bad = 0
        for a in _power_samples(lo, hi):
            w = Weight.power_law(grid, a)
            finite = math.isfinite(ml_constant(VectorWeight((w, w), cfg)))
            bad += finite != (lo < a < hi)
        table[f"{cfg}"] = [lo, hi]
        checks.append(check_eq("power-weights.membership", "disagreements between numeric membership and the interval",
                               Fraction(bad), Fraction(0)))
    return checks, {"intervals": table}


def _suite_characterization(config: SuiteConfig):
    if config.dim != 1:
        raise ValueError("the characterization examples are one-dimensional")
    cfg = ExponentConfig((1, 1), (1, 1, 1))
    g0 = DyadicGrid(1, 4)
    one = Weight.constant(g0)
    inv = Weight.power_law(g0, 1)
    fin = refinement_divergence(VectorWeight((inv, one), cfg))
    div = refinement_divergence(VectorWeight((inv, inv), cfg))
    checks = [
        check_eq("characterization.finite-example", "(|x|^-1, 1) is classified Finite (1 = Finite)",
                 Fraction(int(fin.verdict is Verdict.FINITE)), Fraction(1)),
        check_eq("characterization.divergent-example", "(|x|^-1, |x|^-1) is classified Divergent (1 = Divergent)",
                 Fraction(int(div.verdict is Verdict.DIVERGENT)), Fraction(1)),
        check_le("characterization.strictness", "[(|x|^-1, 1)] finite while [|x|^-1]_A_1 is infinite (lhs = finite ml)",
                 fin.values[-1], math.inf),
    ]
    a1_inv = scalar_constant(Weight.power_law(g0, 1), "A_1")
    checks.append(check_eq("characterization.not-a1", "[|x|^-1]_A_1 is infinite (1 = yes)", Fraction(int(math.isinf(a1_inv))), Fraction(1)))
    rng = suite_rng(config.seed, "characterization")
    grid = DyadicGrid(1, min(config.depth, 8), config.policy)
    bad = 0
    for k in range(max(30, config.samples)):
        if k % 3 == 2:
            wv = random_vector_weight(grid, cfg, rng)
        else:
            a, b = (Fraction(int(rng.integers(-8, 25)), 8) for _ in range(2))
            wv = VectorWeight((Weight.power_law(grid, a), Weight.power_law(grid, b)), cfg)
        w1, w2 = wv.weights
        three = [scalar_constant(w1 ** Fraction(1, 2), "A_1"), scalar_constant(w2 ** Fraction(1, 2), "A_1"),
                 scalar_constant(w1 ** Fraction(1, 2) * w2 ** Fraction(1, 2), "A_1")]
        bad += math.isfinite(ml_constant(wv)) != all(math.isfinite(x) for x in three)
    checks.append(check_eq("characterization.three-weights", "disagreements: [w] finite vs three A_1 conditions",
                           Fraction(bad), Fraction(0)))
    return checks, {"finite_example": fin.as_dict(), "divergent_example": div.as_dict()}


_RUNNERS = {
    "lemma-main": _suite_lemma_main,
    "lemma-two": _suite_lemma_two,
    "sparse-bound": _suite_sparse_bound,
    "maximal": _suite_maximal,
    "commutator": _suite_commutator,
    "exponents": _suite_exponents,
    "power-weights": _suite_power_weights,
    "characterization": _suite_characterization,
}


def run_suite(name: str, config: SuiteConfig | None = None) -> VerificationReport:
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    config = config or SuiteConfig()
    checks, summary = _RUNNERS[name](config)
    return VerificationReport(name, config, aggregate(checks), summary)
