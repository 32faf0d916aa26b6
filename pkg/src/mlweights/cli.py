"""Command-line front end: constants, exponent bookkeeping, verification suites and sparse forms."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .checks import jsonable
from .exponents import (
    ExponentConfig,
    ExponentError,
    bht_admissible,
    check_order,
    derived,
    extrapolation_path,
    parse_rational,
    parse_vector,
    power_weight_interval,
)
from .grid import DyadicGrid, Policy

__all__ = ["CliConfig", "UsageError", "parse_weight_spec", "build_parser", "run_cli", "main"]

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INFINITE = 0, 1, 2, 3


class UsageError(ValueError):
    """Bad flags, malformed specs or violated preconditions."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class CliConfig:
    subcommand: str
    action: str | None = None
    dim: int = 1
    depth: int = 10
    policy: str = "mesh"
    seed: int = 42
    samples: int = 50
    weights: list = field(default_factory=list)
    p: tuple | None = None
    q: tuple | None = None
    r: tuple | None = None
    zeta: object = None
    output: str | None = None
    fmt: str = "json"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise UsageError("--dim must be 1 or 2")
        if not 1 <= self.depth <= 14:
            raise UsageError("--depth must lie in [1, 14]")
        if self.samples < 1:
            raise UsageError("--samples must be positive")
        try:
            self.policy = Policy.parse(self.policy).value
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if self.fmt not in ("json", "csv"):
            raise UsageError("--out must be json or csv")

    def grid(self) -> DyadicGrid:
        return DyadicGrid(self.dim, self.depth, self.policy)


def _kv(parts: Sequence[str], allowed: set[str]) -> dict:
    out = {}
    for part in parts:
        key, sep, val = part.partition("=")
        if not sep or key not in allowed:
            raise UsageError(f"expected one of {sorted(allowed)} as key=value, got {part!r}")
        out[key] = val
    missing = allowed - out.keys()
    if missing:
        raise UsageError(f"missing {', '.join(sorted(missing))}")
    return out


def parse_weight_spec(spec: str, grid: DyadicGrid):
    """``power:a=<real>``, ``grid:<path.csv>``, ``gen:cr:eta=..:seed=..``,
    ``gen:logu:osc=..:seed=..`` or ``gen:expbmo:lambda=..:seed=..``."""
    from .weights import CoifmanRochberg, ExpBmo, LogBoundedOscillation, Weight, gen_weight, log_distance, random_spikes

    head, _, rest = spec.partition(":")
    if head == "power":
        a = parse_rational(_kv(rest.split(":"), {"a"})["a"])
        if grid.dim != 1:
            raise UsageError("power weights are one-dimensional")
        return Weight.power_law(grid, a)
    if head == "grid":
        if not rest:
            raise UsageError("grid: needs a CSV path")
        return Weight.from_csv(rest, grid)
    if head != "gen":
        raise UsageError(f"unknown weight spec {spec!r}")
    family, _, rest = rest.partition(":")
    parts = rest.split(":") if rest else []
    if family == "cr":
        kv = _kv(parts, {"eta", "seed"})
        rng = np.random.default_rng(int(kv["seed"]))
        return gen_weight(CoifmanRochberg(random_spikes(grid, rng), float(kv["eta"])))
    if family == "logu":
        kv = _kv(parts, {"osc", "seed"})
        return gen_weight(LogBoundedOscillation(float(kv["osc"]), int(kv["seed"])), grid)
    if family == "expbmo":
        kv = _kv(parts, {"lambda", "seed"})
        rng = np.random.default_rng(int(kv["seed"]))
        x0 = rng.uniform(0, 1, size=None if grid.dim == 1 else grid.dim)
        return gen_weight(ExpBmo(log_distance(grid, x0), float(kv["lambda"])))
    raise UsageError(f"unknown generator family {family!r}")


# -- output ------------------------------------------------------------------------------


def _flatten(d, prefix: str = "") -> list[tuple[str, object]]:
    rows = []
    if isinstance(d, dict):
        for k, v in d.items():
            rows += _flatten(v, f"{prefix}{k}.")
    elif isinstance(d, list) and any(isinstance(v, (dict, list)) for v in d):
        for i, v in enumerate(d):
            rows += _flatten(v, f"{prefix}{i}.")
    else:
        rows.append((prefix[:-1], ";".join(map(str, d)) if isinstance(d, list) else d))
    return rows


def _render(payload, fmt: str) -> str:
    payload = jsonable(payload)
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(payload, dict) and "checks" in payload:
        w.writerow(["anchor", "description", "lhs", "rhs", "margin", "pass"])
        for c in payload["checks"]:
            w.writerow([c["anchor"], c["description"], c["lhs"], c["rhs"], c["margin"], c["pass"]])
    else:
        w.writerow(["key", "value"])
        w.writerows(_flatten(payload))
    return buf.getvalue()


def _emit(cfg: CliConfig, payload, out) -> None:
    text = _render(payload, cfg.fmt)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


# -- subcommands ---------------------------------------------------------------------------


def _need(cfg: CliConfig, *names: str) -> None:
    for n in names:
        if getattr(cfg, n) is None:
            raise UsageError(f"--{n} is required for {cfg.subcommand}")


def _cmd_constants(cfg: CliConfig, out) -> int:
    from .weights import VectorWeight, ml_constant

    _need(cfg, "p", "r")
    ecfg = ExponentConfig(cfg.p, cfg.r)
    if len(cfg.weights) != ecfg.m:
        raise UsageError(f"--weights needs {ecfg.m} specs, got {len(cfg.weights)}")
    grid = cfg.grid()
    wv = VectorWeight(tuple(parse_weight_spec(s, grid) for s in cfg.weights), ecfg)
    value = ml_constant(wv)
    grid_info = {"dim": cfg.dim, "depth": cfg.depth, "policy": cfg.policy}
    _emit(cfg, {"p": list(ecfg.p), "r": list(ecfg.r), "weights": cfg.weights, "grid": grid_info,
                "constant": value, "finite": math.isfinite(value)}, out)
    return EXIT_PASS if math.isfinite(value) else EXIT_INFINITE


def _cmd_exponents(cfg: CliConfig, out) -> int:
    act = cfg.action
    if act == "derive":
        _need(cfg, "p", "r")
        ecfg = ExponentConfig(cfg.p, cfg.r)
        payload = {"p": list(ecfg.p), "r": list(ecfg.r), "order": ecfg.order.value, "natural": ecfg.is_natural,
                   **derived(ecfg).as_dict()}
    elif act == "path":
        _need(cfg, "p", "q", "r")
        payload = {"p": list(cfg.p), "q": list(cfg.q), "r": list(cfg.r),
                   "steps": [st.as_dict() for st in extrapolation_path(cfg.p, cfg.q, cfg.r)]}
    elif act == "interval":
        q = cfg.q or cfg.p
        if q is None:
            raise UsageError("--q (or --p) is required for exponents interval")
        _need(cfg, "r")
        lo, hi = power_weight_interval(q, cfg.r)
        payload = {"q": list(q), "r": list(cfg.r), "lower": lo, "upper": hi}
    elif act == "admissible":
        _need(cfg, "r")
        payload = {"r": list(cfg.r), "admissible": bht_admissible(cfg.r)}
        if cfg.p is not None:
            payload["order"] = check_order(cfg.r, cfg.p).value
    else:
        raise UsageError("exponents needs one of derive, path, interval, admissible")
    _emit(cfg, payload, out)
    return EXIT_PASS


def _cmd_verify(cfg: CliConfig, out) -> int:
    from .verify import SuiteConfig, run_suite

    scfg = SuiteConfig(cfg.dim, cfg.depth, cfg.policy, cfg.seed, cfg.samples, cfg.p, cfg.r, cfg.zeta)
    report = run_suite(cfg.action, scfg)
    _emit(cfg, report.as_dict(), out)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _cmd_sparse(cfg: CliConfig, out) -> int:
    from .maximal import random_test_function
    from .sparse import SparseFamily, cz_sparse, form_bound_certificate, random_sparse
    from .weights import VectorWeight, random_vector_weight
    from .exponents import natural_exponents

    grid = cfg.grid()
    if cfg.action == "build":
        zeta = cfg.zeta if cfg.zeta is not None else parse_rational("1/2")
        if cfg.extra.get("method") == "cz":
            rng = np.random.default_rng(cfg.seed)
            S = cz_sparse([random_test_function(grid, rng) for _ in range(2)])
        else:
            S = random_sparse(grid, zeta, cfg.seed)
        text = S.to_json()
        if cfg.output:
            with open(cfg.output, "w") as fh:
                fh.write(text)
        else:
            out.write(text + "\n")
        return EXIT_PASS
    if cfg.action != "eval":
        raise UsageError("sparse needs build or eval")
    path = cfg.extra.get("family")
    if not path:
        raise UsageError("--family is required for sparse eval")
    with open(path) as fh:
        S = SparseFamily.from_json(fh.read(), grid)
    r = cfg.r or parse_vector("1,1,1")
    p, _ = natural_exponents(r)
    ecfg = ExponentConfig(p, r)
    rng = np.random.default_rng(cfg.seed)
    if cfg.weights:
        if len(cfg.weights) != ecfg.m:
            raise UsageError(f"--weights needs {ecfg.m} specs")
        wv = VectorWeight(tuple(parse_weight_spec(s, grid) for s in cfg.weights), ecfg)
    else:
        wv = random_vector_weight(grid, ecfg, rng)
    fs = [random_test_function(grid, rng) for _ in range(ecfg.m)]
    cert = form_bound_certificate(S, wv, fs, random_test_function(grid, rng))
    payload = {"r": list(r), "p": list(p), "zeta": S.zeta, "cubes": len(S), "constant": cert.constant,
               "c0": cert.c0, "lines": cert.lines, "checks": [c.as_dict() for c in cert.checks],
               "pass": all(c.passed for c in cert.checks)}
    _emit(cfg, payload, out)
    return EXIT_PASS if payload["pass"] else EXIT_FAIL


def _cmd_report(cfg: CliConfig, out) -> int:
    from .verify import VerificationReport, compare_reports

    files = cfg.extra.get("files") or []
    if not files:
        raise UsageError("report needs at least one JSON report file")
    dicts = []
    for path in files:
        with open(path) as fh:
            dicts.append(json.load(fh))
    reports = [VerificationReport.from_dict(d) for d in dicts]
    if len(reports) == 2 and cfg.extra.get("compare"):
        same = compare_reports(dicts[0], dicts[1])
        _emit(cfg, {"identical": same}, out)
        return EXIT_PASS if same else EXIT_FAIL
    if len(reports) == 1:
        _emit(cfg, reports[0].as_dict() | {"timestamp": dicts[0].get("timestamp", "")}, out)
    else:
        _emit(cfg, {"reports": [{"suite": r.suite, "pass": r.passed, "checks": len(r.checks)} for r in reports]}, out)
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--policy", default="mesh", help="mesh, dyadic or shifted")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--out", dest="fmt", default="json", choices=["json", "csv"])
    p.add_argument("--output", help="write to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    from .verify import SUITES

    root = _Parser(prog="mlweights", description="Numerical checks for multilinear weight classes on dyadic grids.")
    sub = root.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    c = sub.add_parser("constants", help="multilinear constant of a weight vector")
    _common(c)
    c.add_argument("--weights", required=True, help="comma-separated weight specs")
    c.add_argument("--p", required=True)
    c.add_argument("--r", required=True)

    e = sub.add_parser("exponents", help="exact exponent bookkeeping")
    e.add_argument("action", choices=["derive", "path", "interval", "admissible"])
    _common(e)
    for name in ("p", "q", "r"):
        e.add_argument(f"--{name}")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("action", metavar="suite", choices=SUITES)
    _common(v)
    for name in ("p", "r", "zeta"):
        v.add_argument(f"--{name}")

    s = sub.add_parser("sparse", help="build or evaluate sparse families")
    s.add_argument("action", choices=["build", "eval"])
    _common(s)
    s.add_argument("--zeta")
    s.add_argument("--r")
    s.add_argument("--weights")
    s.add_argument("--family", help="family JSON for eval")
    s.add_argument("--method", choices=["random", "cz"], default="random")

    rp = sub.add_parser("report", help="summarize or compare saved reports")
    rp.add_argument("files", nargs="+")
    rp.add_argument("--compare", action="store_true", help="compare two reports ignoring timestamps")
    rp.add_argument("--out", dest="fmt", default="json", choices=["json", "csv"])
    rp.add_argument("--output")
    return root


def _config(ns: argparse.Namespace) -> CliConfig:
    vec = lambda x: None if x is None else parse_vector(x)  # noqa: E731
    weights = getattr(ns, "weights", None)
    extra = {k: getattr(ns, k) for k in ("family", "method", "files", "compare") if hasattr(ns, k)}
    zeta = getattr(ns, "zeta", None)
    return CliConfig(
        subcommand=ns.subcommand,
        action=getattr(ns, "action", None),
        dim=getattr(ns, "dim", 1),
        depth=getattr(ns, "depth", 10),
        policy=getattr(ns, "policy", "mesh"),
        seed=getattr(ns, "seed", 42),
        samples=getattr(ns, "samples", 50),
        weights=[w for w in weights.split(",") if w] if weights else [],
        p=vec(getattr(ns, "p", None)),
        q=vec(getattr(ns, "q", None)),
        r=vec(getattr(ns, "r", None)),
        zeta=None if zeta is None else parse_rational(zeta),
        output=ns.output,
        fmt=ns.fmt,
        extra=extra,
    )


_DISPATCH = {
    "constants": _cmd_constants,
    "exponents": _cmd_exponents,
    "verify": _cmd_verify,
    "sparse": _cmd_sparse,
    "report": _cmd_report,
}


def run_cli(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        ns = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
        cfg = _config(ns)
        return _DISPATCH[cfg.subcommand](cfg, out)
    except (UsageError, ExponentError, ValueError, OSError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run_cli())
