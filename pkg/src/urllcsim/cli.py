"""Command-line entry point: run experiments, sweeps, and oracle checks.

Exit codes: 0 success, 1 usage/config error, 2 numerical/solver failure,
3 validation failure. Every config key is overridable with a flag of the
same dotted name, e.g. ``--ue.arrival_gbps 2.4``.
"""

import argparse
import csv
import json
import os
import sys

from . import __version__, backend_name
from .config import read_config_file, resolve_config
from .errors import ConfigError, SimulationError
from .harness import run_experiment
from .validate import ALL_CHECKS, run_checks


def _split_override_args(argv):
    """Separate ``--section.key[=value]`` overrides from regular args."""
    overrides = {}
    rest = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "." in tok.split("=", 1)[0]:
            body = tok[2:]
            if "=" in body:
                key, value = body.split("=", 1)
            else:
                key = body
                i += 1
                if i >= len(argv):
                    raise ConfigError(f"override {tok} is missing a value")
                value = argv[i]
            overrides[key] = value
        else:
            rest.append(tok)
        i += 1
    return overrides, rest


def _gather_overrides(args, dotted):
    overrides = dict(dotted)
    if args.seed is not None:
        overrides["scenario.seed"] = str(args.seed)
    if args.slots is not None:
        overrides["scenario.horizon_slots"] = str(args.slots)
    if args.realizations is not None:
        overrides["scenario.realizations"] = str(args.realizations)
    if args.policies is not None:
        overrides["policy.list"] = args.policies
    return overrides


def _resolve(args, dotted):
    file_values = read_config_file(args.config) if args.config else None
    return resolve_config(file_values, _gather_overrides(args, dotted))


def _write_json(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_point(cfg, jobs, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    agg = run_experiment(cfg, jobs=jobs, out_dir=out_dir)
    doc = agg.to_json_doc(cfg, extra={"backend": backend_name()})
    _write_json(doc, os.path.join(out_dir, "aggregate.json"))
    return agg


def _summary_lines(agg):
    lines = []
    for name, pm in sorted(agg.policies.items()):
        viol = float(max(pm.reliability_violation_per_ue))
        lines.append(
            f"{name}: avg latency {pm.avg_latency_ms:.4f} ms, "
            f"avgUT {pm.avg_user_throughput_bps / 1e9:.4f} Gbps, "
            f"violation rate {viol:.4g}")
    return lines


def cmd_run(args, dotted):
    cfg = _resolve(args, dotted)
    agg = _run_point(cfg, args.jobs, args.out)
    for line in _summary_lines(agg):
        print(line)
    return 0


def cmd_sweep(args, dotted):
    values = [v.strip() for v in args.sweep_values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep value list is empty")
    key = {"lambda_gbps": "ue.arrival_gbps",
           "ue_count": "scenario.ue_count"}[args.sweep_var]
    os.makedirs(args.out, exist_ok=True)
    rows = []
    for value in values:
        point = dict(dotted)
        point[key] = value
        point_dir = os.path.join(args.out, f"{args.sweep_var}_{value}")
        try:
            cfg = _resolve(args, point)
            agg = _run_point(cfg, args.jobs, point_dir)
        except (ConfigError, SimulationError) as exc:
            print(f"point {args.sweep_var}={value} failed: {exc}",
                  file=sys.stderr)
            for name in (args.policies or "").split(",") or ["-"]:
                rows.append((value, name or "-", "nan", "nan", "nan",
                             "nan", "nan", f"error:{type(exc).__name__}"))
            continue
        for name, pm in sorted(agg.policies.items()):
            rows.append((
                value, name,
                repr(pm.avg_latency_ms),
                repr(pm.avg_latency_ci95[0]),
                repr(pm.avg_latency_ci95[1]),
                repr(pm.avg_user_throughput_bps / 1e9),
                repr(float(max(pm.reliability_violation_per_ue))),
                "ok"))
        print(f"point {args.sweep_var}={value}: done")
    with open(os.path.join(args.out, "sweep.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("sweep_value", "policy", "avg_latency_ms", "ci_low",
                         "ci_high", "avgut_gbps", "violation_rate", "status"))
        writer.writerows(rows)
    return 0


def cmd_validate(args, dotted):
    if dotted:
        raise ConfigError(
            f"validate takes no config overrides, got {sorted(dotted)}")
    only = None
    if args.only:
        only = [t.strip() for t in args.only.split(",") if t.strip()]
    try:
        results = run_checks(only=only, tol_scale=args.tol_scale,
                             trials=args.trials)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    failed = False
    for res in results:
        print(f"[{'PASS' if res.passed else 'FAIL'}] {res.name}")
        for line in res.lines:
            print(line)
        failed |= not res.passed
    return 3 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="urllcsim",
        description="URLLC scheduling simulator for a single-cell mmWave "
                    "massive-MIMO downlink")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--seed", type=int, help="master RNG seed")
        p.add_argument("--slots", type=int, help="horizon in slots")
        p.add_argument("--realizations", type=int,
                       help="Monte Carlo realizations")
        p.add_argument("--policies",
                       help="comma list: proposed,baseline1,baseline2,wsrm")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel realization workers")
        p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="run one configuration")
    add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="sweep arrival rate or UE count")
    add_common(p_sweep)
    p_sweep.add_argument("--sweep-var", required=True,
                         choices=("lambda_gbps", "ue_count"))
    p_sweep.add_argument("--sweep-values", required=True,
                         help="comma list of sweep points")

    p_val = sub.add_parser("validate", help="run solver oracle checks")
    p_val.add_argument("--only", help=f"comma list of checks "
                                      f"({','.join(sorted(ALL_CHECKS))})")
    p_val.add_argument("--tol-scale", type=float, default=1.0,
                       help="multiply all check tolerances (0 forces failure)")
    p_val.add_argument("--trials", type=int, default=2000,
                       help="Monte Carlo trials for the rate check")
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        dotted, rest = _split_override_args(argv)
        parser = build_parser()
        try:
            args = parser.parse_args(rest)
        except SystemExit as exc:
            return 0 if exc.code == 0 else 1
        if args.command == "run":
            return cmd_run(args, dotted)
        if args.command == "sweep":
            return cmd_sweep(args, dotted)
        return cmd_validate(args, dotted)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
