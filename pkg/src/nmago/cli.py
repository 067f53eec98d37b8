"""Command-line front end.

Subcommands: validate, classify-ko, ko-profile, solve, bounds, family,
manufacture.  Configuration comes from a strict JSON file (unknown keys are
rejected with their path) optionally overridden by flags; every output file
is byte-stable across runs (sorted JSON keys, 17-significant-digit CSV,
newline line endings).

Exit codes: 0 success, 1 check failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

from . import defaults
from .bound_builder import find_k_bounds, write_residual_csv
from .errors import ConfigError, DomainError, NmagoError
from .keller_osserman import build_profile, classify_ko
from .ivp_solver import solution_sidecar, solve_ivp, write_solution_csv
from .multiplicity import manufacture_weight, solve_family
from .problem_model import ProblemSpec, validate_assumptions
from .scalarfn import ScalarFnSpec, spec_from_json, spec_from_string


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunConfig:
    problem: ProblemSpec | None = None
    weight: ScalarFnSpec | None = None
    solver: dict = field(default_factory=dict)
    u0: float | None = None
    count: int | None = None
    a: float | None = None
    output: str | None = None

    def to_json(self):
        out = {}
        if self.problem is not None:
            out["problem"] = self.problem.to_json()
        if self.weight is not None:
            out["weight"] = self.weight.to_json()
        if self.solver:
            out["solver"] = dict(self.solver)
        for key in ("u0", "count", "a", "output"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out


_TOP_KEYS = {"problem", "weight", "solver", "u0", "count", "a", "output"}


def load_config(path):
    """Parse and strictly validate a config file into a RunConfig."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key {key!r} in config")
    cfg = RunConfig()
    if "problem" in raw:
        try:
            cfg.problem = ProblemSpec.from_json(raw["problem"])
        except DomainError as exc:
            raise ConfigError(str(exc))
    if "weight" in raw:
        try:
            cfg.weight = spec_from_json(raw["weight"], "weight")
        except DomainError as exc:
            raise ConfigError(str(exc))
    if "solver" in raw:
        solver = raw["solver"]
        if not isinstance(solver, dict):
            raise ConfigError("solver section must be an object")
        for key in solver:
            if key not in defaults.DEFAULTS:
                raise ConfigError(f"solver.{key}: unknown key")
        cfg.solver = dict(solver)
    if "u0" in raw:
        cfg.u0 = float(raw["u0"])
    if "count" in raw:
        if not isinstance(raw["count"], int):
            raise ConfigError("count must be an integer")
        cfg.count = raw["count"]
    if "a" in raw:
        cfg.a = float(raw["a"])
    if "output" in raw:
        cfg.output = str(raw["output"])
    return cfg


def emit_json(value, path):
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w", newline="\n") as fh:
        json.dump(value, fh, sort_keys=True, indent=2)
        fh.write("\n")


def emit_csv(rows, path, header=None, digits=None):
    """Deterministic CSV: '.' decimals, 17 significant digits, LF endings."""
    digits = defaults.get("csv_digits", digits)
    fmt = f"{{:.{digits}g}}"
    lines = []
    if header:
        lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(
            fmt.format(v) if isinstance(v, float) else str(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _build_parser():
    parser = _Parser(prog="nmago", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def common(p, out=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dim", type=int, help="dimension N >= 2")
        p.add_argument("--f", help="nonlinearity spec, e.g. power:2 or constant:1")
        p.add_argument("--K", help="weight spec, e.g. powsing:3,1,1 for (1-r)^-3")
        if out:
            p.add_argument("--out", help="output path")

    p = sub.add_parser("validate", help="report on the standing assumptions")
    common(p, out=False)
    p = sub.add_parser("classify-ko", help="tri-state tail-condition test")
    common(p, out=False)
    p = sub.add_parser("ko-profile", help="emit the G/g/H profile as JSON")
    common(p)
    p.add_argument("--a", type=float, help="anchor of the anchored integral")
    p = sub.add_parser("solve", help="solve one IVP; CSV profile + JSON sidecar")
    common(p)
    p.add_argument("--u0", type=float, help="center value u(0) > 0")
    p = sub.add_parser("bounds", help="search certified sub/super parameters")
    common(p)
    p.add_argument("--p", dest="weight", help="boundary weight spec, e.g. powsing:3")
    p.add_argument("--a", type=float)
    p = sub.add_parser("family", help="sandwiched multi-solution demonstration")
    common(p)
    p.add_argument("--p", dest="weight", help="boundary weight spec")
    p.add_argument("--a", type=float)
    p.add_argument("--count", type=int, help="number of family members")
    p = sub.add_parser("manufacture", help="reverse-engineer K from a target")
    common(p)
    p.add_argument("--target", help="target profile spec, e.g. power:2,0.5,1")
    return parser


def _merge(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "dim", None) is not None or getattr(args, "f", None) \
            or getattr(args, "K", None):
        dim = args.dim if args.dim is not None else \
            (cfg.problem.dimension if cfg.problem else None)
        f = spec_from_string(args.f, "--f") if args.f else \
            (cfg.problem.f if cfg.problem else None)
        K = spec_from_string(args.K, "--K") if args.K else \
            (cfg.problem.K if cfg.problem else None)
        if dim is not None and f is not None and K is not None:
            cfg.problem = ProblemSpec(dim, f, K)
        else:
            cfg.problem = None
            cfg._partial = (dim, f, K)
    if getattr(args, "weight", None):
        cfg.weight = spec_from_string(args.weight, "--p")
    if getattr(args, "u0", None) is not None:
        cfg.u0 = args.u0
    if getattr(args, "count", None) is not None:
        cfg.count = args.count
    if getattr(args, "a", None) is not None:
        cfg.a = args.a
    if getattr(args, "out", None):
        cfg.output = args.out
    return cfg


def _need(value, what):
    if value is None:
        raise ConfigError(f"{what} is required")
    return value


def _dim_and_f(cfg, args):
    if cfg.problem is not None:
        return cfg.problem.dimension, cfg.problem.f
    partial = getattr(cfg, "_partial", (None, None, None))
    dim = partial[0] if partial[0] is not None else None
    f = partial[1]
    return _need(dim, "--dim"), _need(f, "--f")


def _cmd_validate(cfg, args):
    report = validate_assumptions(_need(cfg.problem, "problem (--dim/--f/--K)"))
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def _cmd_classify(cfg, args):
    dim, f = _dim_and_f(cfg, args)
    print(classify_ko(f, dim))
    return 0


def _cmd_ko_profile(cfg, args):
    dim, f = _dim_and_f(cfg, args)
    profile = build_profile(f, dim, cfg.a)
    payload = profile.to_json()
    if cfg.output:
        emit_json(payload, cfg.output)
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def _cmd_solve(cfg, args):
    problem = _need(cfg.problem, "problem (--dim/--f/--K)")
    u0 = _need(cfg.u0, "--u0")
    if u0 <= 0:
        raise ConfigError("u0 must be positive")
    out = _need(cfg.output, "--out")
    sol = solve_ivp(problem, u0)
    write_solution_csv(sol, out, spec=problem)
    sidecar = out.rsplit(".", 1)[0] + ".json" if "." in out else out + ".json"
    emit_json(solution_sidecar(sol), sidecar)
    print(f"{sol.status}  profile: {out}  sidecar: {sidecar}")
    return 0


def _cmd_bounds(cfg, args):
    problem = _need(cfg.problem, "problem (--dim/--f/--K)")
    weight = _need(cfg.weight, "--p (boundary weight)")
    out = _need(cfg.output, "--out")
    family = find_k_bounds(problem, weight, a=cfg.a)
    base = out.rsplit(".", 1)[0] if out.endswith(".json") else out
    emit_json(family.to_json(), base + ".json")
    write_residual_csv(family.sub_report, base + "_sub_residuals.csv")
    write_residual_csv(family.super_report, base + "_super_residuals.csv")
    print(f"k1={family.k1:g} k2={family.k2:g} C1={family.C1:.6g} "
          f"C2={family.C2:.6g} c={family.c:.6g} d={family.d:.6g}")
    return 0


def _cmd_family(cfg, args):
    problem = _need(cfg.problem, "problem (--dim/--f/--K)")
    weight = _need(cfg.weight, "--p (boundary weight)")
    count = _need(cfg.count, "--count")
    out = _need(cfg.output, "--out (directory)")
    bounds = find_k_bounds(problem, weight, a=cfg.a)
    result = solve_family(problem, bounds, count)
    path = result.export(out)
    print(f"{'PASS' if result.passed else 'FAIL'}  members={count}  "
          f"summary: {path}")
    return 0 if result.passed else 1


def _cmd_manufacture(cfg, args):
    dim, f = _dim_and_f(cfg, args)
    target = spec_from_string(_need(args.target, "--target"), "--target")
    K = manufacture_weight(target, f, dim)
    payload = ProblemSpec(dim, f, K).to_json()
    if cfg.output:
        emit_json(payload, cfg.output)
        print(f"manufactured problem: {cfg.output}")
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "classify-ko": _cmd_classify,
    "ko-profile": _cmd_ko_profile,
    "solve": _cmd_solve,
    "bounds": _cmd_bounds,
    "family": _cmd_family,
    "manufacture": _cmd_manufacture,
}


def run(argv):
    """Dispatch one command; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise _UsageError("a subcommand is required "
                              f"(one of: {', '.join(_COMMANDS)})")
        cfg = _merge(args)
        with defaults.overrides(cfg.solver):
            return _COMMANDS[args.command](cfg, args)
    except (_UsageError, ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NmagoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
